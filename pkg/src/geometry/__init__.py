"""Parking Planner — Geometry Package.

SE(2) poses, rigid 3D transforms, and the vehicle footprint model.
"""
