"""Parking Planner — Bicycle Kinematics.

Rear-axle bicycle model with exact arc integration over a step at
constant (v, δ):

    x' = v cos θ,  y' = v sin θ,  θ' = v tan δ / wheelbase
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from src.geometry.se2 import Pose2D, VehicleParams
from src.utils.errors import ActionBoundsError

# Slack on limit checks so values produced by clipping never trip them.
_BOUND_SLACK = 1e-12
_STRAIGHT_CURVATURE = 1e-12


@dataclass(frozen=True)
class Action:
    """Commanded signed velocity (m/s, negative = reverse) and steering (rad)."""

    velocity: float
    steering: float

    def as_array(self) -> np.ndarray:
        return np.array([self.velocity, self.steering], dtype=np.float64)


@dataclass(frozen=True)
class VehicleState:
    pose: Pose2D
    velocity: float = 0.0
    steering: float = 0.0


def check_action(action: Action, vehicle: VehicleParams) -> None:
    """Raise ActionBoundsError unless |v| ≤ max_speed and |δ| ≤ max_steer."""
    v, d = action.velocity, action.steering
    if not (math.isfinite(v) and math.isfinite(d)):
        raise ActionBoundsError(v, d)
    if abs(v) > vehicle.max_speed + _BOUND_SLACK or abs(d) > vehicle.max_steer + _BOUND_SLACK:
        raise ActionBoundsError(v, d)


def clip_action(action: Action, vehicle: VehicleParams) -> Action:
    return Action(
        float(np.clip(action.velocity, -vehicle.max_speed, vehicle.max_speed)),
        float(np.clip(action.steering, -vehicle.max_steer, vehicle.max_steer)),
    )


def integrate(pose: Pose2D, velocity: float, steering: float, wheelbase: float, dt: float) -> Pose2D:
    """Pose after driving ``velocity * dt`` meters on the arc of steering angle ``steering``."""
    ds = velocity * dt
    if ds == 0.0:
        return pose
    kappa = math.tan(steering) / wheelbase
    th = pose.theta
    if abs(kappa) < _STRAIGHT_CURVATURE:
        return Pose2D(pose.x + ds * math.cos(th), pose.y + ds * math.sin(th), th)
    dth = ds * kappa
    return Pose2D(
        pose.x + (math.sin(th + dth) - math.sin(th)) / kappa,
        pose.y + (math.cos(th) - math.cos(th + dth)) / kappa,
        th + dth,
    )


def kinematic_step(state: VehicleState, action: Action, vehicle: VehicleParams, dt: float) -> VehicleState:
    """Advance ``state`` by ``dt`` seconds under ``action``.

    Raises:
        ActionBoundsError: If the action exceeds the vehicle limits.
        ValueError: If dt is not positive.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    check_action(action, vehicle)
    pose = integrate(state.pose, action.velocity, action.steering, vehicle.wheelbase, dt)
    return VehicleState(pose, action.velocity, action.steering)


def sweep(
    pose: Pose2D, velocity: float, steering: float, wheelbase: float,
    duration: float, max_spacing: float,
) -> list[Pose2D]:
    """Poses along a constant-(v, δ) motion, start included, spaced ≤ ``max_spacing``."""
    distance = abs(velocity) * duration
    n = max(1, math.ceil(distance / max_spacing - 1e-12)) if distance > 0.0 else 1
    return [pose] + [
        integrate(pose, velocity, steering, wheelbase, duration * k / n) for k in range(1, n + 1)
    ]


@dataclass(frozen=True)
class MotionSegment:
    """Constant-steering piece of a planned path.

    Attributes:
        steering: Steering angle held over the segment (rad).
        gear: +1 forward, -1 reverse.
        length: Arc length (meters, ≥ 0).
    """

    steering: float
    gear: int
    length: float


def gear_shift_count(velocities: Iterable[float]) -> int:
    """Sign changes of a velocity (or gear) sequence; zeros are skipped."""
    signs = [1 if v > 0 else -1 for v in velocities if v != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)
