"""Parking Planner — Utilities Package.

Logging setup and the shared error hierarchy.
"""
