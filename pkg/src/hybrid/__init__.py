"""Parking Planner — Hybrid Policy Package.

Components:
  - rs_probe: Collision-free Reeds-Shepp feasibility probe
  - tracking: Converts an RS path into per-step (v, δ) commands
  - action_mask: Per-steering-bin safe speed limits
  - planner: RS-first / masked-RL-fallback decision loop and episode rollout
"""
