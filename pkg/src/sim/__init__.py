"""Parking Planner — Simulator Package.

Components:
  - kinematics: Bicycle-model state, actions and exact arc integration
  - scenarios: Seeded parallel / perpendicular scenario generation and files
  - env: Gymnasium-compatible bird's-eye-view parking environment
  - episode: Episode records and log files
  - render: Static BEV image emission
"""
