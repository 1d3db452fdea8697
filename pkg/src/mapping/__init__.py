"""Parking Planner — Mapping Package.

Point-cloud recordings, height filtering and fusion, rasterization into
occupancy grids, and the PGM + sidecar grid file format.
"""
