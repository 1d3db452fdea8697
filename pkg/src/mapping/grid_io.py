"""Parking Planner — Grid File I/O.

Grids are stored as a binary PGM (P5, maxval 255) using the map-server
byte convention (0 = OCCUPIED, 254 = FREE, 205 = UNKNOWN), top image row =
highest grid row, plus a YAML sidecar with ``resolution``, ``origin_x``,
``origin_y`` and ``origin_theta`` (radians).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import yaml
from PIL import Image, UnidentifiedImageError

from src.geometry.se2 import Pose2D
from src.mapping.grid import CellState, OccupancyGrid
from src.utils.errors import GridFileError
from src.utils.logger import get_logger

logger = get_logger(__name__)

# ── Byte Codes ────────────────────────────────────────────
OCCUPIED_BYTE = 0
FREE_BYTE = 254
UNKNOWN_BYTE = 205

_STATE_TO_BYTE = np.array([FREE_BYTE, OCCUPIED_BYTE, UNKNOWN_BYTE], dtype=np.uint8)
_SIDECAR_KEYS = ("resolution", "origin_x", "origin_y", "origin_theta")


def sidecar_path(grid_path: Path) -> Path:
    """``map.pgm`` → ``map.yaml``."""
    return Path(grid_path).with_suffix(".yaml")


def save_grid(grid: OccupancyGrid, path: Path) -> Path:
    """Write ``grid`` to ``path`` (PGM) and its sidecar.

    Args:
        grid: The grid to persist.
        path: Target ``.pgm`` path; parent directories are created.

    Returns:
        The PGM path written.

    Raises:
        OSError: On I/O failure.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    image = np.flipud(_STATE_TO_BYTE[grid.cells])
    Image.fromarray(np.ascontiguousarray(image)).save(path, format="PPM")

    meta = {
        "resolution": float(grid.resolution),
        "origin_x": float(grid.origin.x),
        "origin_y": float(grid.origin.y),
        "origin_theta": float(grid.origin.theta),
    }
    with open(sidecar_path(path), "w", encoding="utf-8") as f:
        yaml.safe_dump(meta, f, sort_keys=False, default_flow_style=False)

    logger.debug("Saved %dx%d grid to %s", grid.width, grid.height, path)
    return path


def _load_sidecar(path: Path) -> dict[str, float]:
    meta_path = sidecar_path(path)
    if not meta_path.exists():
        raise GridFileError(path, f"missing sidecar {meta_path.name}")
    try:
        with open(meta_path, "r", encoding="utf-8") as f:
            meta = yaml.safe_load(f)
    except yaml.YAMLError as exc:
        raise GridFileError(meta_path, f"unparsable sidecar: {exc}") from exc
    if not isinstance(meta, dict):
        raise GridFileError(meta_path, "sidecar must be a key: value mapping")
    missing = [k for k in _SIDECAR_KEYS if k not in meta]
    if missing:
        raise GridFileError(meta_path, f"sidecar missing keys: {', '.join(missing)}")
    try:
        return {k: float(meta[k]) for k in _SIDECAR_KEYS}
    except (TypeError, ValueError) as exc:
        raise GridFileError(meta_path, f"non-numeric sidecar value: {exc}") from exc


def load_grid(path: Path) -> OccupancyGrid:
    """Read a grid written by :func:`save_grid` (or any P5 map-server PGM).

    Raises:
        GridFileError: On a malformed header, a size mismatch between header
            and payload, an unknown cell byte, or a bad sidecar.
        FileNotFoundError: If the PGM does not exist.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Grid file not found: {path}")

    with open(path, "rb") as f:
        if f.read(2) != b"P5":
            raise GridFileError(path, "malformed header (expected binary P5)")

    try:
        with Image.open(path) as img:
            img.load()
            if img.mode != "L":
                raise GridFileError(path, f"malformed header (mode {img.mode}, maxval must be 255)")
            data = np.array(img, dtype=np.uint8)
    except GridFileError:
        raise
    except UnidentifiedImageError as exc:
        raise GridFileError(path, "malformed header") from exc
    except OSError as exc:
        raise GridFileError(path, f"size mismatch: {exc}") from exc
    except ValueError as exc:
        raise GridFileError(path, f"malformed header: {exc}") from exc

    cells = np.empty(data.shape, dtype=np.uint8)
    lookup = {FREE_BYTE: CellState.FREE, OCCUPIED_BYTE: CellState.OCCUPIED, UNKNOWN_BYTE: CellState.UNKNOWN}
    known = np.zeros(data.shape, dtype=bool)
    for byte, state in lookup.items():
        hit = data == byte
        cells[hit] = int(state)
        known |= hit
    if not known.all():
        bad = sorted({int(v) for v in np.unique(data[~known])})
        raise GridFileError(path, f"unknown cell byte(s) {bad[:5]}")

    meta = _load_sidecar(path)
    return OccupancyGrid(
        meta["resolution"],
        Pose2D(meta["origin_x"], meta["origin_y"], meta["origin_theta"]),
        np.flipud(cells),
    )
