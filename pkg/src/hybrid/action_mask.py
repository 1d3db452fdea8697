"""Parking Planner — Action Mask.

For each of K steering bins and each direction, finds the largest speed in
a ladder of L levels whose constant-(v, δ) rollout over ``horizon_steps``
simulator steps stays collision-free at the safety margin. A slower speed
traces a prefix of the same arc, so feasibility is monotone in speed and
each bin is resolved by binary search.

Projection clips the commanded speed to the limits of the nearest bin and
passes the steering through untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from src.config import CollisionConfig, MaskConfig
from src.geometry.se2 import VehicleParams
from src.mapping.grid import OccupancyGrid
from src.planning.collision import path_collides
from src.sim.kinematics import Action, VehicleState, sweep


@dataclass(frozen=True, eq=False)
class ActionMask:
    """Per-bin speed limits.

    Attributes:
        steering_bins: (K,) bin angles spanning [-max_steer, max_steer].
        v_max_forward: (K,) largest safe forward speed per bin.
        v_max_reverse: (K,) largest safe reverse speed per bin (≥ 0).
    """

    steering_bins: np.ndarray
    v_max_forward: np.ndarray
    v_max_reverse: np.ndarray

    def nearest_bin(self, steering: float) -> int:
        return int(np.argmin(np.abs(self.steering_bins - steering)))

    def is_open(self) -> bool:
        """True if any bin allows motion in either direction."""
        return bool((self.v_max_forward > 0).any() or (self.v_max_reverse > 0).any())


def steering_bins(vehicle: VehicleParams, cfg: MaskConfig) -> np.ndarray:
    return np.linspace(-vehicle.max_steer, vehicle.max_steer, cfg.steering_bins)


def speed_ladder(vehicle: VehicleParams, cfg: MaskConfig) -> np.ndarray:
    """``speed_levels`` speeds from max_speed/L up to max_speed."""
    return np.linspace(vehicle.max_speed / cfg.speed_levels, vehicle.max_speed, cfg.speed_levels)


def _rollout_collides(
    grid: OccupancyGrid, state: VehicleState, velocity: float, steering: float,
    vehicle: VehicleParams, duration: float, collision_cfg: CollisionConfig,
) -> bool:
    poses = sweep(state.pose, velocity, steering, vehicle.wheelbase, duration, collision_cfg.sample_step)
    return path_collides(grid, poses[1:], vehicle, collision_cfg)


def _surroundings_clear(
    grid: OccupancyGrid, state: VehicleState, vehicle: VehicleParams,
    duration: float, collision_cfg: CollisionConfig,
) -> bool:
    """True when no rollout within the horizon can reach a blocked cell."""
    if grid.origin.theta != 0.0:
        return False
    pose = state.pose
    cx = pose.x + vehicle.center_offset * math.cos(pose.theta)
    cy = pose.y + vehicle.center_offset * math.sin(pose.theta)
    col, row = grid.world_to_cell(cx, cy)
    if not (0 <= col < grid.width and 0 <= row < grid.height):
        return False
    # the footprint center moves at most this factor faster than the rear axle
    kappa = math.tan(vehicle.max_steer) / vehicle.wheelbase
    travel = vehicle.max_speed * duration * math.hypot(1.0, vehicle.center_offset * kappa)
    reach = vehicle.circumradius(collision_cfg.safety_margin) + travel + grid.resolution * math.sqrt(2.0)
    if cx - reach < grid.origin.x or cy - reach < grid.origin.y:
        return False
    if cx + reach > grid.origin.x + grid.width * grid.resolution:
        return False
    if cy + reach > grid.origin.y + grid.height * grid.resolution:
        return False
    return bool(grid.clearance[row, col] > reach)


def compute_mask(
    grid: OccupancyGrid, state: VehicleState, vehicle: VehicleParams, horizon_steps: int,
    cfg: MaskConfig, dt: float, collision_cfg: CollisionConfig,
) -> ActionMask:
    """Largest collision-free ladder speed per steering bin and direction."""
    bins = steering_bins(vehicle, cfg)
    ladder = speed_ladder(vehicle, cfg)
    duration = horizon_steps * dt

    if _surroundings_clear(grid, state, vehicle, duration, collision_cfg):
        full = np.full(bins.shape, vehicle.max_speed)
        return ActionMask(bins, full, full.copy())

    limits = np.zeros((2, bins.size))
    for d_idx, direction in enumerate((1.0, -1.0)):
        for k, steer in enumerate(bins):
            def collides(i: int) -> bool:
                return _rollout_collides(
                    grid, state, direction * ladder[i], float(steer), vehicle, duration, collision_cfg,
                )

            if not collides(ladder.size - 1):
                limits[d_idx, k] = ladder[-1]
                continue
            lo, hi = -1, ladder.size - 1   # lo: last known clear (-1 = none), hi: first known blocked
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if collides(mid):
                    hi = mid
                else:
                    lo = mid
            limits[d_idx, k] = ladder[lo] if lo >= 0 else 0.0
    return ActionMask(bins, limits[0], limits[1])


def apply(mask: ActionMask, action: Action) -> Action:
    """Clip velocity to the nearest steering bin's limits; steering passes through."""
    k = mask.nearest_bin(action.steering)
    v = float(np.clip(action.velocity, -mask.v_max_reverse[k], mask.v_max_forward[k]))
    return Action(v, action.steering)
