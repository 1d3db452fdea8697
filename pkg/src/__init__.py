"""Parking Planner — Main Package.

Root package for the parking planning stack: occupancy grid mapping from
LiDAR recordings, a Reeds-Shepp / Soft Actor-Critic hybrid planner inside a
bird's-eye-view kinematic simulator, and a Hybrid A* benchmark harness.
"""
