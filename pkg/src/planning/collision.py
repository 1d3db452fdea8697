"""Parking Planner — Collision Queries.

Footprint and swept-path checks against an OccupancyGrid plus beam casting
for the observation encoder. OCCUPIED and UNKNOWN cells are lethal, and
so is anything outside the grid.

A footprint collides when the center of a blocked cell lies inside the
margin-inflated vehicle rectangle (boundary included). Poses whose
footprint center is far from every blocked cell (per the grid's distance
field) skip the per-cell test.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from src.config import CollisionConfig
from src.geometry.se2 import Pose2D, VehicleParams, footprint_polygon, points_in_rectangle
from src.mapping.grid import OccupancyGrid
from src.utils.errors import PathSpacingError, PoseOutOfGridError

# ── Constants ─────────────────────────────────────────────
SPACING_SLACK = 1e-9
BEAM_STEP_FRACTION = 0.25


def _blocked_at(grid: OccupancyGrid, cols: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Blocked flags for index arrays; out-of-bounds reads as blocked."""
    inside = grid.in_bounds(cols, rows)
    out = np.ones(cols.shape, dtype=bool)
    out[inside] = grid.blocked[rows[inside], cols[inside]]
    return out


def _footprint_clear_by_distance(
    grid: OccupancyGrid, pose: Pose2D, vehicle: VehicleParams, margin: float,
    corners_g: tuple[np.ndarray, np.ndarray],
) -> bool:
    """True when the distance field alone proves the footprint is free."""
    gx, gy = corners_g
    extent_x, extent_y = grid.width * grid.resolution, grid.height * grid.resolution
    if gx.min() < 0.0 or gy.min() < 0.0 or gx.max() > extent_x or gy.max() > extent_y:
        return False
    cx = pose.x + vehicle.center_offset * math.cos(pose.theta)
    cy = pose.y + vehicle.center_offset * math.sin(pose.theta)
    col, row = grid.world_to_cell(cx, cy)
    if not (0 <= col < grid.width and 0 <= row < grid.height):
        return False
    half_diag = grid.resolution * math.sqrt(0.5)
    return bool(grid.clearance[row, col] > vehicle.circumradius(margin) + half_diag)


def footprint_collides(
    grid: OccupancyGrid, pose: Pose2D, vehicle: VehicleParams, margin: float,
) -> bool:
    """Footprint test at an explicit inflation ``margin`` (meters)."""
    corners = footprint_polygon(pose, vehicle, margin)
    corners_g = grid.to_grid_frame(corners[:, 0], corners[:, 1])
    if _footprint_clear_by_distance(grid, pose, vehicle, margin, corners_g):
        return False

    res = grid.resolution
    gx, gy = corners_g
    col_lo = math.ceil(gx.min() / res - 0.5)
    col_hi = math.floor(gx.max() / res - 0.5)
    row_lo = math.ceil(gy.min() / res - 0.5)
    row_hi = math.floor(gy.max() / res - 0.5)
    if col_hi < col_lo or row_hi < row_lo:
        return False

    cols, rows = np.meshgrid(
        np.arange(col_lo, col_hi + 1, dtype=np.int64),
        np.arange(row_lo, row_hi + 1, dtype=np.int64),
    )
    cols, rows = cols.ravel(), rows.ravel()
    blocked = _blocked_at(grid, cols, rows)
    if not blocked.any():
        return False
    cxs, cys = grid.cell_centers(cols[blocked], rows[blocked])
    inside = points_in_rectangle(np.column_stack([cxs, cys]), pose, vehicle.footprint_bounds(margin))
    return bool(inside.any())


def pose_collides(
    grid: OccupancyGrid, pose: Pose2D, vehicle: VehicleParams, cfg: CollisionConfig,
) -> bool:
    """True iff a blocked or out-of-grid cell touches the inflated footprint."""
    return footprint_collides(grid, pose, vehicle, cfg.safety_margin)


def check_spacing(poses: Sequence[Pose2D], sample_step: float) -> None:
    """Raise PathSpacingError if consecutive positions are farther apart than ``sample_step``."""
    limit = sample_step + SPACING_SLACK
    for i in range(1, len(poses)):
        gap = math.hypot(poses[i].x - poses[i - 1].x, poses[i].y - poses[i - 1].y)
        if gap > limit:
            raise PathSpacingError(i, gap, sample_step)


def path_collides(
    grid: OccupancyGrid, poses: Sequence[Pose2D], vehicle: VehicleParams, cfg: CollisionConfig,
) -> bool:
    """True iff any sampled pose collides.

    Raises:
        PathSpacingError: If two consecutive poses are more than
            ``cfg.sample_step`` apart.
    """
    check_spacing(poses, cfg.sample_step)
    return any(pose_collides(grid, p, vehicle, cfg) for p in poses)


def cast_beams(grid: OccupancyGrid, pose: Pose2D, n_beams: int, max_range: float) -> list[float]:
    """Free distance along ``n_beams`` rays spread evenly from ``pose.theta``.

    Each ray is marched at a quarter cell; the returned distance is the
    last sample before the first blocked or out-of-grid cell, capped at
    ``max_range``.

    Raises:
        PoseOutOfGridError: If the beam origin lies outside the grid.
        ValueError: If n_beams < 1 or max_range <= 0.
    """
    if n_beams < 1:
        raise ValueError(f"n_beams must be >= 1, got {n_beams}")
    if not max_range > 0.0:
        raise ValueError(f"max_range must be > 0, got {max_range}")
    if not grid.contains_point(pose.x, pose.y):
        raise PoseOutOfGridError(pose.x, pose.y)

    step = grid.resolution * BEAM_STEP_FRACTION
    dists = np.arange(step, max_range, step)
    dists = np.append(dists, max_range)
    angles = pose.theta + 2.0 * math.pi * np.arange(n_beams) / n_beams

    xs = pose.x + np.cos(angles)[:, None] * dists[None, :]
    ys = pose.y + np.sin(angles)[:, None] * dists[None, :]
    cols, rows = grid.world_to_cells(xs, ys)
    blocked = _blocked_at(grid, cols, rows)

    origin_col, origin_row = grid.world_to_cell(pose.x, pose.y)
    if grid.blocked[origin_row, origin_col]:
        return [0.0] * n_beams

    first = np.where(blocked.any(axis=1), blocked.argmax(axis=1), -1)
    out = np.full(n_beams, max_range)
    hit = first >= 0
    prev = first[hit] - 1
    out[hit] = np.where(prev >= 0, dists[np.maximum(prev, 0)], 0.0)
    return [float(min(d, max_range)) for d in out]
