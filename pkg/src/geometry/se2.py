"""Parking Planner — Planar and Rigid-Body Geometry.

Pose2D (SE(2), rear-axle anchored), Transform3D (rigid 3D transforms for
point-cloud registration), the vehicle parameter set and its rectangular
footprint. All values are immutable and double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from src.utils.errors import InvalidGeometryError

# ── Constants ─────────────────────────────────────────────
_ORTHO_TOL = 1e-9
_TWO_PI = 2.0 * math.pi
# Results this close to -π are rounding noise of an odd multiple of π and wrap to +π.
_PI_SNAP = 1e-12


def normalize_angle(a: float) -> float:
    """Wrap an angle to (-π, π].

    Args:
        a: Angle in radians.

    Returns:
        Equivalent angle in (-π, π].

    Raises:
        InvalidGeometryError: If the angle is NaN or infinite.
    """
    if not math.isfinite(a):
        raise InvalidGeometryError(f"Cannot normalize non-finite angle {a!r}")
    wrapped = math.remainder(a, _TWO_PI)
    if wrapped <= -math.pi + _PI_SNAP:
        return math.pi
    return wrapped


def angle_diff(a: float, b: float) -> float:
    """Signed smallest difference a - b in (-π, π]."""
    return normalize_angle(a - b)


# ═══════════════════════════════════════════════════════════
# SE(2) Pose
# ═══════════════════════════════════════════════════════════


@dataclass(frozen=True)
class Pose2D:
    """Planar pose of the rear-axle center.

    Attributes:
        x: Meters.
        y: Meters.
        theta: Heading in radians, stored normalized to (-π, π].
    """

    x: float
    y: float
    theta: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidGeometryError(f"Non-finite pose position ({self.x}, {self.y})")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", normalize_angle(float(self.theta)))

    def compose(self, other: Pose2D) -> Pose2D:
        """Return self ∘ other (other expressed in self's frame, mapped out)."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2D(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.theta + other.theta,
        )

    def inverse(self) -> Pose2D:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2D(-c * self.x - s * self.y, s * self.x - c * self.y, -self.theta)

    def relative_to(self, reference: Pose2D) -> Pose2D:
        """Express this pose in the frame of ``reference``."""
        return reference.inverse().compose(self)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map (N, 2) local points into the frame this pose lives in."""
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        c, s = math.cos(self.theta), math.sin(self.theta)
        out = np.empty_like(pts)
        out[:, 0] = self.x + c * pts[:, 0] - s * pts[:, 1]
        out[:, 1] = self.y + s * pts[:, 0] + c * pts[:, 1]
        return out

    def distance_to(self, other: Pose2D) -> float:
        return math.hypot(other.x - self.x, other.y - self.y)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.theta)


# ═══════════════════════════════════════════════════════════
# Rigid 3D Transform
# ═══════════════════════════════════════════════════════════


@dataclass(frozen=True, eq=False)
class Transform3D:
    """Rigid transform p' = R p + t.

    Attributes:
        rotation: (3, 3) orthonormal matrix with determinant +1.
        translation: (3,) vector in meters.
    """

    rotation: np.ndarray
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        rot = np.array(self.rotation, dtype=np.float64).reshape(3, 3)
        trans = np.array(self.translation, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(rot)) and np.all(np.isfinite(trans))):
            raise InvalidGeometryError("Transform contains non-finite entries")
        ortho_err = np.max(np.abs(rot.T @ rot - np.eye(3)))
        det = np.linalg.det(rot)
        if ortho_err > _ORTHO_TOL or abs(det - 1.0) > _ORTHO_TOL:
            raise InvalidGeometryError(
                f"Rotation is not proper orthonormal (err={ortho_err:.2e}, det={det:.12f})"
            )
        rot.setflags(write=False)
        trans.setflags(write=False)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", trans)

    @classmethod
    def identity(cls) -> Transform3D:
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_translation(cls, tx: float, ty: float, tz: float) -> Transform3D:
        return cls(np.eye(3), np.array([tx, ty, tz], dtype=np.float64))

    @classmethod
    def from_quaternion(
        cls, qx: float, qy: float, qz: float, qw: float,
        translation: tuple[float, float, float] = (0.0, 0.0, 0.0),
    ) -> Transform3D:
        """Build from a (re-normalized) unit quaternion and a translation.

        Raises:
            InvalidGeometryError: If the quaternion has zero or non-finite norm.
        """
        q = np.array([qx, qy, qz, qw], dtype=np.float64)
        norm = float(np.linalg.norm(q))
        if not math.isfinite(norm) or norm < 1e-12:
            raise InvalidGeometryError(f"Degenerate quaternion {tuple(q)}")
        x, y, z, w = q / norm
        rot = np.array([
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
            [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
            [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
        ])
        return cls(rot, np.asarray(translation, dtype=np.float64))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform (N, 3) points."""
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        return pts @ self.rotation.T + self.translation

    def yaw(self) -> float:
        return math.atan2(self.rotation[1, 0], self.rotation[0, 0])

    def to_pose2d(self) -> Pose2D:
        """Planar restriction (x, y, yaw)."""
        return Pose2D(float(self.translation[0]), float(self.translation[1]), self.yaw())

    def allclose(self, other: Transform3D, tol: float = 1e-9) -> bool:
        return bool(
            np.max(np.abs(self.rotation - other.rotation)) <= tol
            and np.max(np.abs(self.translation - other.translation)) <= tol
        )


def compose(a: Transform3D, b: Transform3D) -> Transform3D:
    """Return a ∘ b, so that compose(a, b)·p == a·(b·p)."""
    return Transform3D(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def invert(t: Transform3D) -> Transform3D:
    """Return the inverse rigid transform."""
    rot_t = t.rotation.T
    return Transform3D(rot_t, -(rot_t @ t.translation))


# ═══════════════════════════════════════════════════════════
# Vehicle Model
# ═══════════════════════════════════════════════════════════


@dataclass(frozen=True)
class VehicleParams:
    """Bicycle-model vehicle geometry and limits.

    ``min_turn_radius`` is derived from wheelbase and max_steer when not
    given, and checked against them when it is.
    """

    wheelbase: float
    width: float
    front_overhang: float
    rear_overhang: float
    max_steer: float
    max_speed: float
    min_turn_radius: float = 0.0

    def __post_init__(self) -> None:
        for name in ("wheelbase", "width", "front_overhang", "rear_overhang", "max_speed"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise InvalidGeometryError(f"VehicleParams.{name} must be > 0, got {value}")
        if not (0.0 < self.max_steer < math.pi / 2):
            raise InvalidGeometryError(f"max_steer must lie in (0, π/2), got {self.max_steer}")
        radius = self.wheelbase / math.tan(self.max_steer)
        if self.min_turn_radius == 0.0:
            object.__setattr__(self, "min_turn_radius", radius)
        elif abs(self.min_turn_radius - radius) > 1e-9:
            raise InvalidGeometryError(
                f"min_turn_radius {self.min_turn_radius} inconsistent with "
                f"wheelbase/tan(max_steer) = {radius}"
            )

    @property
    def length(self) -> float:
        return self.front_overhang + self.wheelbase + self.rear_overhang

    @property
    def center_offset(self) -> float:
        """Distance from the rear axle forward to the footprint center."""
        return (self.wheelbase + self.front_overhang - self.rear_overhang) / 2.0

    def footprint_bounds(self, margin: float = 0.0) -> tuple[float, float, float, float]:
        """Local (x_min, x_max, y_min, y_max) of the footprint grown by ``margin``."""
        half_w = self.width / 2.0 + margin
        return (
            -self.rear_overhang - margin,
            self.wheelbase + self.front_overhang + margin,
            -half_w,
            half_w,
        )

    def circumradius(self, margin: float = 0.0) -> float:
        """Radius of the circle around the footprint center enclosing the inflated rectangle."""
        return math.hypot(self.length / 2.0 + margin, self.width / 2.0 + margin)


def footprint_polygon(pose: Pose2D, vehicle: VehicleParams, margin: float = 0.0) -> np.ndarray:
    """Vehicle rectangle at ``pose`` as four counter-clockwise vertices.

    Args:
        pose: Rear-axle pose.
        vehicle: Vehicle geometry.
        margin: Optional inflation on every side (meters).

    Returns:
        (4, 2) array starting at the rear-right corner.
    """
    x0, x1, y0, y1 = vehicle.footprint_bounds(margin)
    local = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    return pose.apply(local)


def polygon_area(vertices: np.ndarray) -> float:
    """Signed shoelace area (positive for counter-clockwise vertices)."""
    v = np.asarray(vertices, dtype=np.float64)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def points_in_rectangle(
    points: np.ndarray, pose: Pose2D, bounds: tuple[float, float, float, float],
) -> np.ndarray:
    """Mask of (N, 2) world points lying inside a pose-attached local rectangle (inclusive)."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    dx = pts[:, 0] - pose.x
    dy = pts[:, 1] - pose.y
    lx = c * dx + s * dy
    ly = -s * dx + c * dy
    x0, x1, y0, y1 = bounds
    return (lx >= x0) & (lx <= x1) & (ly >= y0) & (ly <= y1)
