"""Parking Planner — Reeds-Shepp Feasibility Probe.

Scans Reeds-Shepp candidates shortest-first and returns the first one
whose swept footprint stays clear of the grid.
"""

from __future__ import annotations

from typing import Optional

from src.config import CollisionConfig
from src.geometry.se2 import Pose2D, VehicleParams
from src.mapping.grid import OccupancyGrid
from src.planning.collision import path_collides, pose_collides
from src.planning.reeds_shepp import RSPath, enumerate_all, sample
from src.sim.kinematics import VehicleState
from src.utils.logger import get_logger

logger = get_logger(__name__)


def rs_sweep(path: RSPath, start: Pose2D, vehicle: VehicleParams, cfg: CollisionConfig) -> list[Pose2D]:
    """Poses along ``path`` at the collision sampling density."""
    return sample(path, start, vehicle.min_turn_radius, cfg.sample_step)


def first_clear_path(
    start: Pose2D, goal: Pose2D, grid: OccupancyGrid,
    vehicle: VehicleParams, cfg: CollisionConfig,
) -> Optional[RSPath]:
    """Shortest collision-free Reeds-Shepp candidate from ``start`` to ``goal``, if any."""
    if pose_collides(grid, start, vehicle, cfg) or pose_collides(grid, goal, vehicle, cfg):
        return None
    candidates = enumerate_all(start, goal, vehicle.min_turn_radius)
    for rank, path in enumerate(candidates):
        if not path_collides(grid, rs_sweep(path, start, vehicle, cfg), vehicle, cfg):
            logger.debug("RS probe: %s clear (rank %d of %d)", path.word, rank, len(candidates))
            return path
    return None


def try_rs(
    state: VehicleState, goal: Pose2D, grid: OccupancyGrid,
    vehicle: VehicleParams, cfg: CollisionConfig,
) -> Optional[RSPath]:
    """Collision-free RS path from the vehicle's current pose, or None."""
    return first_clear_path(state.pose, goal, grid, vehicle, cfg)
