"""Parking Planner — Point Splatting into Occupancy Grids.

Projects 3D points onto the ground plane and counts hits per cell. A cell
with at least ``hit_threshold`` hits is OCCUPIED. With free-space carving
on, every cell crossed by the discrete ray from the nearest sensor origin
to an occupied cell (end cell excluded) that got zero hits becomes FREE;
everything else stays UNKNOWN. With carving off, all non-occupied cells are
FREE, which matches simulator-generated maps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy.spatial import cKDTree

from src.config import OgmBuildConfig
from src.geometry.se2 import Pose2D
from src.mapping.grid import CellState, OccupancyGrid
from src.utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class GridBounds:
    """Axis-aligned grid placement: corner of cell (0, 0) plus size in cells."""

    origin_x: float
    origin_y: float
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"Grid bounds need a positive size, got {self.width}x{self.height}")


def bounds_for(points_xy: np.ndarray, resolution: float, padding_cells: int) -> GridBounds:
    """Smallest cell-aligned bounds covering ``points_xy`` plus a padding ring.

    Raises:
        ValueError: If there are no points to size the grid from.
    """
    pts = np.asarray(points_xy, dtype=np.float64).reshape(-1, 2)
    if pts.shape[0] == 0:
        raise ValueError("Cannot size a grid from an empty point set; pass explicit bounds")
    col_lo, row_lo = np.floor(pts.min(axis=0) / resolution).astype(np.int64)
    col_hi, row_hi = np.floor(pts.max(axis=0) / resolution).astype(np.int64)
    return GridBounds(
        origin_x=float(col_lo - padding_cells) * resolution,
        origin_y=float(row_lo - padding_cells) * resolution,
        width=int(col_hi - col_lo + 1 + 2 * padding_cells),
        height=int(row_hi - row_lo + 1 + 2 * padding_cells),
    )


def bresenham(c0: int, r0: int, c1: int, r1: int) -> Iterator[tuple[int, int]]:
    """Integer cells on the line from (c0, r0) to (c1, r1), both ends included."""
    dc, dr = abs(c1 - c0), -abs(r1 - r0)
    sc = 1 if c0 < c1 else -1
    sr = 1 if r0 < r1 else -1
    err = dc + dr
    c, r = c0, r0
    while True:
        yield c, r
        if c == c1 and r == r1:
            return
        e2 = 2 * err
        if e2 >= dr:
            err += dr
            c += sc
        if e2 <= dc:
            err += dc
            r += sr


def rasterize(
    points: np.ndarray,
    sensor_origins: np.ndarray,
    cfg: OgmBuildConfig,
    bounds: GridBounds | None = None,
) -> OccupancyGrid:
    """Splat points into a ternary occupancy grid.

    Args:
        points: (N, 2) or (N, 3) world points; only x and y are used.
        sensor_origins: (M, 2) sensor positions used as carving ray sources.
        cfg: Build settings (resolution, hit_threshold, carving, padding).
        bounds: Explicit placement. Derived from points and origins if omitted.

    Returns:
        The rasterized grid.

    Raises:
        ValueError: If resolution <= 0, or bounds are missing and there is
            nothing to size the grid from.
    """
    resolution = cfg.resolution
    if not (math.isfinite(resolution) and resolution > 0.0):
        raise ValueError(f"Grid resolution must be > 0, got {resolution}")

    pts = np.asarray(points, dtype=np.float64)
    pts = pts[:, :2] if pts.ndim == 2 else pts.reshape(-1, 2)
    origins = np.asarray(sensor_origins, dtype=np.float64).reshape(-1, 2)

    if bounds is None:
        bounds = bounds_for(np.vstack([pts, origins]), resolution, cfg.map_padding_cells)

    grid = OccupancyGrid.filled(
        bounds.width, bounds.height, resolution,
        Pose2D(bounds.origin_x, bounds.origin_y, 0.0), CellState.FREE,
    )

    # ── Step 1: Hit counts ─────────────────────────────
    cols, rows = grid.world_to_cells(pts[:, 0], pts[:, 1])
    inside = grid.in_bounds(cols, rows)
    flat = rows[inside] * bounds.width + cols[inside]
    counts = np.bincount(flat, minlength=bounds.width * bounds.height).reshape(
        bounds.height, bounds.width
    )
    occupied = counts >= cfg.hit_threshold

    if not cfg.carve_free_space:
        cells = np.where(occupied, int(CellState.OCCUPIED), int(CellState.FREE)).astype(np.uint8)
        logger.debug("Rasterized %d points → %d occupied cells (no carving)", len(pts), occupied.sum())
        return grid.with_cells(cells)

    # ── Step 2: Carve rays from the nearest sensor origin ──
    cells = np.full((bounds.height, bounds.width), int(CellState.UNKNOWN), dtype=np.uint8)
    cells[occupied] = int(CellState.OCCUPIED)
    occ_rows, occ_cols = np.nonzero(occupied)
    if occ_rows.size and origins.shape[0]:
        centers_x, centers_y = grid.cell_centers(occ_cols, occ_rows)
        _, nearest = cKDTree(origins).query(np.column_stack([centers_x, centers_y]))
        origin_cols, origin_rows = grid.world_to_cells(origins[:, 0], origins[:, 1])
        carved = np.zeros_like(occupied)
        for end_col, end_row, src in zip(occ_cols, occ_rows, nearest):
            for c, r in bresenham(int(origin_cols[src]), int(origin_rows[src]),
                                  int(end_col), int(end_row)):
                if c == end_col and r == end_row:
                    break
                if 0 <= c < bounds.width and 0 <= r < bounds.height:
                    carved[r, c] = True
        cells[carved & (counts == 0)] = int(CellState.FREE)

    logger.debug(
        "Rasterized %d points → %d occupied, %d free cells",
        len(pts), int(occupied.sum()), int((cells == CellState.FREE).sum()),
    )
    return grid.with_cells(cells)
