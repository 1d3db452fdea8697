"""Parking Planner — Point-Cloud Recordings.

Loads LiDAR frames and their externally estimated sensor poses, filters
points by height relative to the sensor, and fuses frames into a global
point map (sum over t of T_t C_t) or a keyframe-local one
(sum over the window of T_k^-1 T_t C_t).

File formats:
    frames:     one text file per frame, one ``x y z`` point per line,
                frames ordered by file name.
    trajectory: one line per frame ``timestamp tx ty tz qx qy qz qw``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from src.config import OgmBuildConfig
from src.geometry.se2 import Transform3D, compose, invert
from src.utils.errors import RecordingError
from src.utils.logger import get_logger

logger = get_logger(__name__)

# ── Constants ─────────────────────────────────────────────
FRAME_GLOB = "*.txt"
_TRAJECTORY_FIELDS = 8


# ═══════════════════════════════════════════════════════════
# Data Models
# ═══════════════════════════════════════════════════════════


@dataclass(frozen=True, eq=False)
class PointCloudFrame:
    """One LiDAR sweep in the sensor frame.

    Attributes:
        timestamp: Seconds.
        points: (N, 3) array of finite coordinates in meters.
    """

    timestamp: float
    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(pts)):
            raise RecordingError(f"Frame at t={self.timestamp} contains non-finite points")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return int(self.points.shape[0])


@dataclass(frozen=True)
class TrajectorySample:
    """Sensor-to-global pose at one timestamp."""

    timestamp: float
    pose: Transform3D


@dataclass(frozen=True)
class Recording:
    """Frames matched one-to-one (by index) with trajectory samples."""

    frames: tuple[PointCloudFrame, ...]
    trajectory: tuple[TrajectorySample, ...]

    def __post_init__(self) -> None:
        validate_recording(self.frames, self.trajectory)


def validate_recording(
    frames: Sequence[PointCloudFrame], traj: Sequence[TrajectorySample],
) -> None:
    """Check frame/pose pairing and timestamp ordering.

    Raises:
        RecordingError: On length mismatch, non-increasing trajectory
            timestamps or decreasing frame timestamps.
    """
    if len(frames) != len(traj):
        raise RecordingError(
            f"{len(frames)} frames but {len(traj)} trajectory samples; they pair by index"
        )
    stamps = [s.timestamp for s in traj]
    if any(b <= a for a, b in zip(stamps, stamps[1:])):
        raise RecordingError("Trajectory timestamps must be strictly increasing")
    frame_stamps = [f.timestamp for f in frames]
    if any(b < a for a, b in zip(frame_stamps, frame_stamps[1:])):
        raise RecordingError("Frame timestamps must be non-decreasing")


# ═══════════════════════════════════════════════════════════
# Filtering & Accumulation
# ═══════════════════════════════════════════════════════════


def filter_heights(frame: PointCloudFrame, cfg: OgmBuildConfig) -> PointCloudFrame:
    """Keep exactly the points with z in [z_min, z_max], preserving order."""
    z = frame.points[:, 2]
    keep = (z >= cfg.z_min) & (z <= cfg.z_max)
    return PointCloudFrame(frame.timestamp, frame.points[keep])


def accumulate_global(
    frames: Sequence[PointCloudFrame], traj: Sequence[TrajectorySample],
) -> np.ndarray:
    """Global point map: the union over t of T_t applied to frame t.

    Raises:
        RecordingError: If frames and trajectory differ in length.
    """
    if len(frames) != len(traj):
        raise RecordingError(
            f"{len(frames)} frames but {len(traj)} trajectory samples; they pair by index"
        )
    parts = [sample.pose.apply(frame.points) for frame, sample in zip(frames, traj)]
    if not parts:
        return np.zeros((0, 3))
    return np.concatenate(parts, axis=0)


def keyframe_window(keyframe_index: int, count: int, cfg: OgmBuildConfig) -> range:
    """Indices of the ``keyframe_window`` most recent frames ending at the keyframe.

    Raises:
        RecordingError: If the window would be empty.
    """
    if not 0 <= keyframe_index < count:
        raise RecordingError(
            f"Keyframe index {keyframe_index} leaves an empty window over {count} frames"
        )
    return range(max(0, keyframe_index - cfg.keyframe_window + 1), keyframe_index + 1)


def accumulate_local(
    frames: Sequence[PointCloudFrame],
    traj: Sequence[TrajectorySample],
    keyframe_index: int,
    cfg: OgmBuildConfig,
) -> np.ndarray:
    """Keyframe-local point map: points of the window expressed in the keyframe sensor frame.

    Raises:
        RecordingError: On length mismatch or an empty window.
    """
    if len(frames) != len(traj):
        raise RecordingError(
            f"{len(frames)} frames but {len(traj)} trajectory samples; they pair by index"
        )
    window = keyframe_window(keyframe_index, len(frames), cfg)
    to_key = invert(traj[keyframe_index].pose)
    parts = [compose(to_key, traj[t].pose).apply(frames[t].points) for t in window]
    return np.concatenate(parts, axis=0)


def local_sensor_origins(
    traj: Sequence[TrajectorySample], keyframe_index: int, cfg: OgmBuildConfig,
) -> np.ndarray:
    """(M, 2) sensor positions of the window expressed in the keyframe frame."""
    window = keyframe_window(keyframe_index, len(traj), cfg)
    to_key = invert(traj[keyframe_index].pose)
    return np.array([compose(to_key, traj[t].pose).translation[:2] for t in window])


def global_sensor_origins(traj: Sequence[TrajectorySample]) -> np.ndarray:
    """(M, 2) sensor positions in the global frame."""
    return np.array([s.pose.translation[:2] for s in traj]).reshape(-1, 2)


# ═══════════════════════════════════════════════════════════
# File Loading
# ═══════════════════════════════════════════════════════════


def _parse_rows(path: Path, width: int) -> np.ndarray:
    rows: list[list[float]] = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            fields = text.split()
            if len(fields) != width:
                raise RecordingError(
                    f"{path}:{line_no}: expected {width} fields, got {len(fields)}"
                )
            try:
                rows.append([float(v) for v in fields])
            except ValueError as exc:
                raise RecordingError(f"{path}:{line_no}: {exc}") from exc
    return np.array(rows, dtype=np.float64).reshape(-1, width)


def load_trajectory(path: Path) -> list[TrajectorySample]:
    """Read ``timestamp tx ty tz qx qy qz qw`` lines."""
    table = _parse_rows(Path(path), _TRAJECTORY_FIELDS)
    samples = []
    for t, tx, ty, tz, qx, qy, qz, qw in table:
        pose = Transform3D.from_quaternion(qx, qy, qz, qw, translation=(tx, ty, tz))
        samples.append(TrajectorySample(float(t), pose))
    return samples


def load_recording(frames_dir: Path, trajectory_path: Path) -> Recording:
    """Load a frame directory and its trajectory file.

    Raises:
        RecordingError: On malformed lines or mismatched counts.
        FileNotFoundError: If the directory or file is missing.
    """
    frames_dir = Path(frames_dir)
    if not frames_dir.is_dir():
        raise FileNotFoundError(f"Frame directory not found: {frames_dir}")
    trajectory = load_trajectory(Path(trajectory_path))
    frame_files = sorted(frames_dir.glob(FRAME_GLOB))
    if len(frame_files) != len(trajectory):
        raise RecordingError(
            f"{len(frame_files)} frame files in {frames_dir} but "
            f"{len(trajectory)} trajectory samples"
        )
    frames = tuple(
        PointCloudFrame(sample.timestamp, _parse_rows(path, 3))
        for path, sample in zip(frame_files, trajectory)
    )
    logger.info(
        "Loaded recording: %d frames, %d points, span %.2f s",
        len(frames), sum(len(f) for f in frames),
        (trajectory[-1].timestamp - trajectory[0].timestamp) if trajectory else math.nan,
    )
    return Recording(frames, tuple(trajectory))
