"""Parking Planner — Benchmark Package.

Components:
  - metrics: PSR / ANGS / PL / AOT aggregation and results CSV
  - harness: Suite evaluation for the three planning methods
  - formatters: Markdown tables for results and per-scenario comparisons
"""
