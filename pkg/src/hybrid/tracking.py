"""Parking Planner — Path Tracking.

Turns a planned path (Reeds-Shepp word or lattice primitives) into
per-step (v, δ) commands. Each segment is driven at constant steering with
speed capped at max_speed and slowed on the last step so the segment ends
exactly at its arc length. Under exact arc kinematics the vehicle then
traces the planned geometry.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

from src.geometry.se2 import Pose2D, VehicleParams, angle_diff
from src.planning.reeds_shepp import RSPath, Steer
from src.sim.kinematics import Action, MotionSegment, integrate, sweep

# Remaining arc length below which a segment counts as finished.
_DONE_EPS = 1e-9


def rs_segments(path: RSPath, vehicle: VehicleParams) -> list[MotionSegment]:
    """Constant-steering segments for a Reeds-Shepp path (arcs at max_steer)."""
    steer_of = {Steer.LEFT: vehicle.max_steer, Steer.RIGHT: -vehicle.max_steer, Steer.STRAIGHT: 0.0}
    return [
        MotionSegment(steer_of[seg.steer], int(seg.gear), seg.length)
        for seg in path.moving_segments()
    ]


class SegmentTracker:
    """Feeds one path's segments to the simulator one step at a time.

    The tracker also integrates the commands it emits, so ``expected_pose``
    is where the vehicle should be if the simulator followed them.
    """

    def __init__(
        self, segments: Sequence[MotionSegment], start: Pose2D,
        vehicle: VehicleParams, dt: float, rs_path: Optional[RSPath] = None,
    ) -> None:
        self.segments = [s for s in segments if s.length > _DONE_EPS]
        self.vehicle = vehicle
        self.dt = dt
        self.rs_path = rs_path
        self.expected_pose = start
        self._index = 0
        self._progress = 0.0

    @property
    def done(self) -> bool:
        return self._index >= len(self.segments)

    @property
    def remaining_length(self) -> float:
        if self.done:
            return 0.0
        rest = sum(s.length for s in self.segments[self._index + 1:])
        return rest + self.segments[self._index].length - self._progress

    def peek_action(self) -> Action:
        """Command for the next step without consuming it."""
        if self.done:
            return Action(0.0, 0.0)
        seg = self.segments[self._index]
        remaining = seg.length - self._progress
        speed = min(self.vehicle.max_speed, remaining / self.dt)
        return Action(seg.gear * speed, seg.steering)

    def next_action(self) -> Action:
        """Consume and return the next step's command."""
        action = self.peek_action()
        if self.done:
            return action
        seg = self.segments[self._index]
        self.expected_pose = integrate(
            self.expected_pose, action.velocity, action.steering, self.vehicle.wheelbase, self.dt,
        )
        self._progress += abs(action.velocity) * self.dt
        if seg.length - self._progress <= _DONE_EPS:
            self._index += 1
            self._progress = 0.0
        return action

    def remaining_poses(self, max_spacing: float) -> list[Pose2D]:
        """Sampled sweep of the untraveled part of the path from ``expected_pose``."""
        poses = [self.expected_pose]
        for i in range(self._index, len(self.segments)):
            seg = self.segments[i]
            length = seg.length - (self._progress if i == self._index else 0.0)
            if length <= _DONE_EPS:
                continue
            part = sweep(poses[-1], seg.gear * length, seg.steering, self.vehicle.wheelbase, 1.0, max_spacing)
            poses.extend(part[1:])
        return poses

    def deviation(self, pose: Pose2D) -> float:
        """Distance plus heading error (rad) between ``pose`` and ``expected_pose``."""
        e = self.expected_pose
        return math.hypot(pose.x - e.x, pose.y - e.y) + abs(angle_diff(pose.theta, e.theta))
