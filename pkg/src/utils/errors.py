"""Parking Planner — Error Types.

Every failure raised by the stack derives from ParkingError. Concrete
errors also derive from the closest builtin (ValueError / RuntimeError)
so generic handlers keep working.
"""

from __future__ import annotations

from typing import Any


class ParkingError(Exception):
    """Base class for all planner-stack errors."""


class InvalidGeometryError(ParkingError, ValueError):
    """Raised for non-finite angles, non-orthonormal rotations or bad vehicle params."""


class RecordingError(ParkingError, ValueError):
    """Raised when point-cloud frames and trajectory samples do not line up."""


class GridFileError(ParkingError, ValueError):
    """Raised when a grid file or its sidecar cannot be decoded."""

    def __init__(self, path: Any, reason: str) -> None:
        self.path = str(path)
        self.reason = reason
        super().__init__(f"Bad grid file {self.path}: {reason}")


class PathSpacingError(ParkingError, ValueError):
    """Raised when consecutive path samples are farther apart than allowed."""

    def __init__(self, index: int, gap: float, limit: float) -> None:
        self.index = index
        self.gap = gap
        self.limit = limit
        super().__init__(
            f"Pose spacing {gap:.4f} m at index {index} exceeds sample_step {limit:.4f} m"
        )


class PoseOutOfGridError(ParkingError, ValueError):
    """Raised when a beam origin lies outside the grid."""

    def __init__(self, x: float, y: float) -> None:
        self.x = x
        self.y = y
        super().__init__(f"Pose ({x:.3f}, {y:.3f}) lies outside the grid")


class ActionBoundsError(ParkingError, ValueError):
    """Raised when an action exceeds the vehicle's speed or steering limits."""

    def __init__(self, velocity: float, steering: float) -> None:
        self.velocity = velocity
        self.steering = steering
        super().__init__(
            f"Action out of bounds: velocity={velocity:.4f}, steering={steering:.4f}"
        )


class EpisodeStateError(ParkingError, RuntimeError):
    """Raised on step() before reset() or after the episode is done."""


class ScenarioError(ParkingError, RuntimeError):
    """Raised when a scenario violates its invariants or cannot be generated."""


class StartInCollisionError(ParkingError, ValueError):
    """Raised when a search starts from a colliding pose."""


class TrainingDivergedError(ParkingError, RuntimeError):
    """Raised when an update produces a non-finite loss; training halts."""

    def __init__(self, step: int, losses: dict[str, float]) -> None:
        self.step = step
        self.losses = dict(losses)
        details = ", ".join(f"{k}={v}" for k, v in self.losses.items())
        super().__init__(f"Non-finite loss at update {step}: {details}")


class CheckpointError(ParkingError, RuntimeError):
    """Raised when a checkpoint is missing, unreadable or of a foreign version."""
