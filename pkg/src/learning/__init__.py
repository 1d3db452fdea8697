"""Parking Planner — Learning Package.

Components:
  - mlp: Small fully-connected networks with hand-written backprop and Adam
  - replay: Fixed-capacity transition buffer
  - encoder: Observation → network input vector
  - sac: Soft Actor-Critic agent, updates and checkpoints
  - monitor: Rolling training statistics
  - trainer: Seeded training loop over a scenario pool
"""
