"""Parking Planner — BEV Frame Rendering.

Writes a static bird's-eye PNG of a scenario: grid cells, target slot,
trajectory trace and the vehicle footprint at its current pose. Pixels
are computed with numpy and written through matplotlib's image writer
with metadata stripped, so equal inputs give byte-identical files.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from matplotlib import image as mpimg

from src.geometry.se2 import Pose2D, VehicleParams, points_in_rectangle
from src.mapping.grid import CellState
from src.sim.scenarios import Scenario
from src.utils.logger import get_logger

logger = get_logger(__name__)

# ── Palette (RGB, 0-255) ──────────────────────────────────
_CELL_COLORS = np.array([
    [245, 245, 245],   # FREE
    [40, 40, 40],      # OCCUPIED
    [150, 150, 160],   # UNKNOWN
], dtype=np.uint8)
_SLOT = np.array([60, 170, 80], dtype=np.uint8)
_VEHICLE = np.array([50, 110, 220], dtype=np.uint8)
_TRACE = np.array([220, 60, 50], dtype=np.uint8)

PIXELS_PER_CELL = 4


def _pixel_centers(scenario: Scenario, scale: int) -> np.ndarray:
    grid = scenario.grid
    h, w = grid.height * scale, grid.width * scale
    cols, rows = np.meshgrid(np.arange(w), np.arange(h))
    fine_res = grid.resolution / scale
    xs = grid.origin.x + (cols + 0.5) * fine_res
    ys = grid.origin.y + (rows + 0.5) * fine_res
    return np.column_stack([xs.ravel(), ys.ravel()])


def render_scenario(
    scenario: Scenario, vehicle: VehicleParams, path: Path,
    trajectory: Sequence[Pose2D] = (), pose: Optional[Pose2D] = None,
    scale: int = PIXELS_PER_CELL,
) -> Path:
    """Rasterize and write one frame.

    Args:
        scenario: Scenario whose grid and slot are drawn.
        vehicle: Footprint geometry.
        path: Output PNG path (parents are created).
        trajectory: Rear-axle poses to trace, in order.
        pose: Vehicle pose to draw; defaults to the last trajectory pose,
            then to the scenario start.
        scale: Pixels per grid cell.

    Returns:
        The written path.
    """
    grid = scenario.grid
    rgb = _CELL_COLORS[np.repeat(np.repeat(grid.cells, scale, axis=0), scale, axis=1)]
    pixels = _pixel_centers(scenario, scale)
    shape = rgb.shape[:2]

    in_slot = points_in_rectangle(pixels, scenario.slot, scenario.slot_bounds).reshape(shape)
    free = np.repeat(np.repeat(grid.cells == CellState.FREE, scale, axis=0), scale, axis=1)
    rgb[in_slot & free] = (0.5 * rgb[in_slot & free] + 0.5 * _SLOT).astype(np.uint8)

    if pose is None:
        pose = trajectory[-1] if len(trajectory) else scenario.start
    body = points_in_rectangle(pixels, pose, vehicle.footprint_bounds()).reshape(shape)
    rgb[body] = _VEHICLE

    if len(trajectory):
        fine_res = grid.resolution / scale
        pts = np.array([[p.x, p.y] for p in trajectory])
        cols = np.floor((pts[:, 0] - grid.origin.x) / fine_res).astype(np.int64)
        rows = np.floor((pts[:, 1] - grid.origin.y) / fine_res).astype(np.int64)
        keep = (cols >= 0) & (cols < shape[1]) & (rows >= 0) & (rows < shape[0])
        rgb[rows[keep], cols[keep]] = _TRACE

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mpimg.imsave(path, np.flipud(rgb), format="png", metadata={"Software": None})
    logger.debug("Rendered %s (%d trace points) to %s", scenario.scenario_id, len(trajectory), path)
    return path

