"""Parking Planner — Planning Package.

Components:
  - reeds_shepp: Shortest forward/reverse paths under a turning-radius bound
  - collision: Footprint, swept-path and beam-casting queries on grids
  - hybrid_astar: Lattice search baseline with analytic RS expansion
"""
