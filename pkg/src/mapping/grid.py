"""Parking Planner — Occupancy Grid.

Immutable ternary occupancy grid (FREE / OCCUPIED / UNKNOWN) with a
resolution and a world pose for the corner of cell (0, 0). Row 0 is the
lowest-y row; column 0 the lowest-x column (in the grid frame).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from functools import cached_property

import numpy as np
from scipy import ndimage

from src.geometry.se2 import Pose2D


class CellState(IntEnum):
    """Per-cell occupancy state."""

    FREE = 0
    OCCUPIED = 1
    UNKNOWN = 2


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """2D cell lattice used as the observation currency of the whole stack.

    Attributes:
        resolution: Meters per cell.
        origin: World pose of the (0, 0) cell corner.
        cells: (height, width) uint8 array of CellState values.
    """

    resolution: float
    origin: Pose2D
    cells: np.ndarray

    def __post_init__(self) -> None:
        if not (math.isfinite(self.resolution) and self.resolution > 0.0):
            raise ValueError(f"Grid resolution must be > 0, got {self.resolution}")
        cells = np.array(self.cells, dtype=np.uint8)
        if cells.ndim != 2:
            raise ValueError(f"Grid cells must be 2D, got shape {cells.shape}")
        if cells.size and int(cells.max()) > int(CellState.UNKNOWN):
            raise ValueError("Grid cells contain values outside CellState")
        cells.setflags(write=False)
        object.__setattr__(self, "resolution", float(self.resolution))
        object.__setattr__(self, "cells", cells)

    @classmethod
    def filled(
        cls, width: int, height: int, resolution: float,
        origin: Pose2D | None = None, state: CellState = CellState.FREE,
    ) -> OccupancyGrid:
        cells = np.full((height, width), int(state), dtype=np.uint8)
        return cls(resolution, origin or Pose2D(0.0, 0.0, 0.0), cells)

    @property
    def width(self) -> int:
        return int(self.cells.shape[1])

    @property
    def height(self) -> int:
        return int(self.cells.shape[0])

    def with_cells(self, cells: np.ndarray) -> OccupancyGrid:
        return OccupancyGrid(self.resolution, self.origin, cells)

    def equals(self, other: OccupancyGrid) -> bool:
        """Bit-exact equality of geometry and contents."""
        return (
            self.resolution == other.resolution
            and self.origin == other.origin
            and self.cells.shape == other.cells.shape
            and bool(np.array_equal(self.cells, other.cells))
        )

    # ── World ↔ cell mapping ─────────────────────────────

    def to_grid_frame(self, xs: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Express world coordinates relative to the grid corner (meters)."""
        dx = np.asarray(xs, dtype=np.float64) - self.origin.x
        dy = np.asarray(ys, dtype=np.float64) - self.origin.y
        if self.origin.theta == 0.0:
            return dx, dy
        c, s = math.cos(self.origin.theta), math.sin(self.origin.theta)
        return c * dx + s * dy, -s * dx + c * dy

    def world_to_cells(self, xs: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized (col, row) indices of world points (may be out of bounds)."""
        gx, gy = self.to_grid_frame(xs, ys)
        cols = np.floor(gx / self.resolution).astype(np.int64)
        rows = np.floor(gy / self.resolution).astype(np.int64)
        return cols, rows

    def world_to_cell(self, x: float, y: float) -> tuple[int, int]:
        cols, rows = self.world_to_cells(np.array([x]), np.array([y]))
        return int(cols[0]), int(rows[0])

    def cell_centers(self, cols: np.ndarray, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """World coordinates of cell centers for index arrays."""
        gx = (np.asarray(cols, dtype=np.float64) + 0.5) * self.resolution
        gy = (np.asarray(rows, dtype=np.float64) + 0.5) * self.resolution
        if self.origin.theta == 0.0:
            return gx + self.origin.x, gy + self.origin.y
        c, s = math.cos(self.origin.theta), math.sin(self.origin.theta)
        return self.origin.x + c * gx - s * gy, self.origin.y + s * gx + c * gy

    def cell_center(self, col: int, row: int) -> tuple[float, float]:
        xs, ys = self.cell_centers(np.array([col]), np.array([row]))
        return float(xs[0]), float(ys[0])

    def in_bounds(self, cols: np.ndarray, rows: np.ndarray) -> np.ndarray:
        cols = np.asarray(cols)
        rows = np.asarray(rows)
        return (cols >= 0) & (cols < self.width) & (rows >= 0) & (rows < self.height)

    def contains_point(self, x: float, y: float) -> bool:
        col, row = self.world_to_cell(x, y)
        return bool(self.in_bounds(np.array(col), np.array(row)))

    def state_at(self, col: int, row: int) -> CellState:
        """Cell state; anything outside the grid reads as UNKNOWN."""
        if 0 <= col < self.width and 0 <= row < self.height:
            return CellState(int(self.cells[row, col]))
        return CellState.UNKNOWN

    # ── Derived layers ───────────────────────────────────

    @cached_property
    def blocked(self) -> np.ndarray:
        """True where a cell is OCCUPIED or UNKNOWN."""
        mask = self.cells != CellState.FREE
        mask.setflags(write=False)
        return mask

    @cached_property
    def clearance(self) -> np.ndarray:
        """Distance (meters) from each cell center to the nearest blocked cell center."""
        if not self.blocked.any():
            field = np.full(self.cells.shape, np.inf)
        else:
            field = ndimage.distance_transform_edt(~self.blocked, sampling=self.resolution)
        field.setflags(write=False)
        return field

    def with_obstacles(self, mask: np.ndarray, state: CellState = CellState.OCCUPIED) -> OccupancyGrid:
        """Copy with every masked cell set to ``state``."""
        cells = self.cells.copy()
        cells[np.asarray(mask, dtype=bool)] = int(state)
        return self.with_cells(cells)
