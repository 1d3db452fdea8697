"""Parking Planner — Reeds-Shepp Curves.

Shortest bounded-curvature paths with reversing between two planar poses.
Instances are normalized (start moved to the origin, distances divided by
r_min), the nine base formula families are evaluated under the time-flip,
reflection and backwards transforms, and every candidate's endpoint is
integrated and checked against the goal before it is returned.

Segment lengths are signed during construction (negative = backward) and
stored as (steer, gear, length >= 0) once a path is built.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Callable, Iterable, Optional

import numpy as np

from src.geometry.se2 import Pose2D, angle_diff

# ── Constants ─────────────────────────────────────────────
_PI = math.pi
_HALF_PI = 0.5 * math.pi
_ZERO = 1e-10
_CLAMP = 1e-12
ENDPOINT_TOL = 1e-6
LENGTH_TIE_TOL = 1e-9


class Steer(Enum):
    LEFT = "L"
    STRAIGHT = "S"
    RIGHT = "R"


class Gear(IntEnum):
    FORWARD = 1
    BACKWARD = -1


@dataclass(frozen=True)
class RSSegment:
    """One arc or straight piece; arcs use radius r_min."""

    steer: Steer
    gear: Gear
    length: float

    @property
    def signed_length(self) -> float:
        return self.length * int(self.gear)

    def as_triple(self) -> tuple[str, str, float]:
        """Serializable ``(steer, gear, length)`` triple."""
        return (self.steer.value, self.gear.name, self.length)


@dataclass(frozen=True)
class RSPath:
    """Ordered segments of one Reeds-Shepp word.

    Attributes:
        segments: 1 to 5 segments, zero-length ones included.
        word: Letters with gear signs, e.g. ``L+R-L+``.
    """

    segments: tuple[RSSegment, ...]
    word: str

    @property
    def total_length(self) -> float:
        return sum(seg.length for seg in self.segments)

    @property
    def gear_shifts(self) -> int:
        gears = [seg.gear for seg in self.segments if seg.length > _ZERO]
        return sum(1 for a, b in zip(gears, gears[1:]) if a != b)

    def moving_segments(self) -> list[RSSegment]:
        return [seg for seg in self.segments if seg.length > _ZERO]

    def sort_key(self) -> tuple[float, int, str]:
        return (self.total_length, self.gear_shifts, self.word)


# ═══════════════════════════════════════════════════════════
# Helpers
# ═══════════════════════════════════════════════════════════


def _mod2pi(x: float) -> float:
    v = math.fmod(x, 2.0 * _PI)
    if v < -_PI:
        v += 2.0 * _PI
    elif v > _PI:
        v -= 2.0 * _PI
    return v


def _polar(x: float, y: float) -> tuple[float, float]:
    return math.hypot(x, y), math.atan2(y, x)


def _clamp_unit(value: float) -> Optional[float]:
    """Clamp into [-1, 1] when the overshoot is rounding noise, else None."""
    if value > 1.0:
        return 1.0 if value - 1.0 <= _CLAMP else None
    if value < -1.0:
        return -1.0 if -1.0 - value <= _CLAMP else None
    return value


def _tau_omega(u: float, v: float, xi: float, eta: float, phi: float) -> tuple[float, float]:
    delta = _mod2pi(u - v)
    a = math.sin(u) - math.sin(delta)
    b = math.cos(u) - math.cos(delta) - 1.0
    t1 = math.atan2(eta * a - xi * b, xi * a + eta * b)
    t2 = 2.0 * (math.cos(delta) - math.cos(v) - math.cos(u)) + 3.0
    tau = _mod2pi(t1 + _PI) if t2 < 0.0 else _mod2pi(t1)
    omega = _mod2pi(tau - u + v - phi)
    return tau, omega


# ═══════════════════════════════════════════════════════════
# Base Formula Families (unit radius, start at origin)
# ═══════════════════════════════════════════════════════════

_Triple = Optional[tuple[float, float, float]]


def _lp_sp_lp(x: float, y: float, phi: float) -> _Triple:
    u, t = _polar(x - math.sin(phi), y - 1.0 + math.cos(phi))
    if t >= -_ZERO:
        v = _mod2pi(phi - t)
        if v >= -_ZERO:
            return t, u, v
    return None


def _lp_sp_rp(x: float, y: float, phi: float) -> _Triple:
    u1, t1 = _polar(x + math.sin(phi), y - 1.0 - math.cos(phi))
    u1 = u1 * u1
    if u1 >= 4.0:
        u = math.sqrt(u1 - 4.0)
        t = _mod2pi(t1 + math.atan2(2.0, u))
        v = _mod2pi(t - phi)
        if t >= -_ZERO and v >= -_ZERO:
            return t, u, v
    return None


def _lp_rm_l(x: float, y: float, phi: float) -> _Triple:
    u1, theta = _polar(x - math.sin(phi), y - 1.0 + math.cos(phi))
    arg = _clamp_unit(0.25 * u1)
    if arg is None:
        return None
    u = -2.0 * math.asin(arg)
    t = _mod2pi(theta + 0.5 * u + _PI)
    v = _mod2pi(phi - t + u)
    if t >= -_ZERO and u <= _ZERO:
        return t, u, v
    return None


def _lp_rup_lum_rm(x: float, y: float, phi: float) -> _Triple:
    xi = x + math.sin(phi)
    eta = y - 1.0 - math.cos(phi)
    rho = _clamp_unit(0.25 * (2.0 + math.hypot(xi, eta)))
    if rho is None:
        return None
    u = math.acos(rho)
    t, v = _tau_omega(u, -u, xi, eta, phi)
    if t >= -_ZERO and v <= _ZERO:
        return t, u, v
    return None


def _lp_rum_lum_rp(x: float, y: float, phi: float) -> _Triple:
    xi = x + math.sin(phi)
    eta = y - 1.0 - math.cos(phi)
    rho = (20.0 - xi * xi - eta * eta) / 16.0
    if rho < -_CLAMP:
        return None
    rho = _clamp_unit(max(rho, 0.0))
    if rho is None:
        return None
    u = -math.acos(rho)
    if u >= -_HALF_PI:
        t, v = _tau_omega(u, u, xi, eta, phi)
        if t >= -_ZERO and v >= -_ZERO:
            return t, u, v
    return None


def _lp_rm_sm_lm(x: float, y: float, phi: float) -> _Triple:
    rho, theta = _polar(x - math.sin(phi), y - 1.0 + math.cos(phi))
    if rho >= 2.0:
        r = math.sqrt(rho * rho - 4.0)
        u = 2.0 - r
        t = _mod2pi(theta + math.atan2(r, -2.0))
        v = _mod2pi(phi - _HALF_PI - t)
        if t >= -_ZERO and u <= _ZERO and v <= _ZERO:
            return t, u, v
    return None


def _lp_rm_sm_rm(x: float, y: float, phi: float) -> _Triple:
    xi = x + math.sin(phi)
    eta = y - 1.0 - math.cos(phi)
    rho, theta = _polar(-eta, xi)
    if rho >= 2.0:
        t = theta
        u = 2.0 - rho
        v = _mod2pi(t + _HALF_PI - phi)
        if t >= -_ZERO and u <= _ZERO and v <= _ZERO:
            return t, u, v
    return None


def _lp_rm_s_lm_rp(x: float, y: float, phi: float) -> _Triple:
    xi = x + math.sin(phi)
    eta = y - 1.0 - math.cos(phi)
    rho, _ = _polar(xi, eta)
    if rho >= 2.0:
        u = 4.0 - math.sqrt(rho * rho - 4.0)
        if u <= _ZERO:
            t = _mod2pi(math.atan2((4.0 - u) * xi - 2.0 * eta, -2.0 * xi + (u - 4.0) * eta))
            v = _mod2pi(t - phi)
            if t >= -_ZERO and v >= -_ZERO:
                return t, u, v
    return None


# ═══════════════════════════════════════════════════════════
# Word Families under Time-flip / Reflection / Backwards
# ═══════════════════════════════════════════════════════════

_Candidate = tuple[str, tuple[float, ...]]
_Formula = Callable[[float, float, float], _Triple]
_Layout = Callable[[float, float, float], tuple[float, ...]]


def _reflect(letters: str) -> str:
    return letters.translate(str.maketrans("LR", "RL"))


def _family(
    out: list[_Candidate], formula: _Formula, letters: str, layout: _Layout,
    x: float, y: float, phi: float,
) -> None:
    """Evaluate one formula under its four symmetric variants."""
    variants = (
        (x, y, phi, letters, 1.0),
        (-x, y, -phi, letters, -1.0),              # time-flip
        (x, -y, -phi, _reflect(letters), 1.0),     # reflect
        (-x, -y, phi, _reflect(letters), -1.0),    # time-flip + reflect
    )
    for vx, vy, vphi, word, sign in variants:
        res = formula(vx, vy, vphi)
        if res is not None:
            out.append((word, tuple(sign * length for length in layout(*res))))


def _candidates(x: float, y: float, phi: float) -> list[_Candidate]:
    """All feasible (letters, signed unit lengths) for a normalized instance."""
    out: list[_Candidate] = []
    xb = x * math.cos(phi) + y * math.sin(phi)
    yb = x * math.sin(phi) - y * math.cos(phi)

    # CSC
    _family(out, _lp_sp_lp, "LSL", lambda t, u, v: (t, u, v), x, y, phi)
    _family(out, _lp_sp_rp, "LSR", lambda t, u, v: (t, u, v), x, y, phi)
    # CCC, forward and backwards
    _family(out, _lp_rm_l, "LRL", lambda t, u, v: (t, u, v), x, y, phi)
    _family(out, _lp_rm_l, "LRL", lambda t, u, v: (v, u, t), xb, yb, phi)
    # CCCC
    _family(out, _lp_rup_lum_rm, "LRLR", lambda t, u, v: (t, u, -u, v), x, y, phi)
    _family(out, _lp_rum_lum_rp, "LRLR", lambda t, u, v: (t, u, u, v), x, y, phi)
    # CCSC, forward and backwards
    _family(out, _lp_rm_sm_lm, "LRSL", lambda t, u, v: (t, -_HALF_PI, u, v), x, y, phi)
    _family(out, _lp_rm_sm_rm, "LRSR", lambda t, u, v: (t, -_HALF_PI, u, v), x, y, phi)
    _family(out, _lp_rm_sm_lm, "LSRL", lambda t, u, v: (v, u, -_HALF_PI, t), xb, yb, phi)
    _family(out, _lp_rm_sm_rm, "RSRL", lambda t, u, v: (v, u, -_HALF_PI, t), xb, yb, phi)
    # CCSCC
    _family(
        out, _lp_rm_s_lm_rp, "LRSLR",
        lambda t, u, v: (t, -_HALF_PI, u, -_HALF_PI, v), x, y, phi,
    )
    return out


# ═══════════════════════════════════════════════════════════
# Integration
# ═══════════════════════════════════════════════════════════


def _advance(x: float, y: float, th: float, letter: str, s: float, r: float) -> tuple[float, float, float]:
    """Exact motion along one signed segment of arc length ``s`` (meters)."""
    if letter == "S":
        return x + s * math.cos(th), y + s * math.sin(th), th
    if letter == "L":
        nth = th + s / r
        return x + r * (math.sin(nth) - math.sin(th)), y - r * (math.cos(nth) - math.cos(th)), nth
    nth = th - s / r
    return x - r * (math.sin(nth) - math.sin(th)), y + r * (math.cos(nth) - math.cos(th)), nth


def _build_path(letters: str, signed: tuple[float, ...]) -> RSPath:
    """Turn signed lengths into segments; zero-length pieces inherit a neighbour's gear."""
    signs: list[Optional[int]] = [
        (1 if s > 0 else -1) if abs(s) > _ZERO else None for s in signed
    ]
    resolved = list(signs)
    for i, sign in enumerate(signs):
        if sign is None:
            before = next((signs[j] for j in range(i - 1, -1, -1) if signs[j] is not None), None)
            after = next((signs[j] for j in range(i + 1, len(signs)) if signs[j] is not None), None)
            resolved[i] = before if before is not None else (after if after is not None else 1)
    segments = tuple(
        RSSegment(Steer(letter), Gear(sign), abs(length))
        for letter, sign, length in zip(letters, resolved, signed)
    )
    word = "".join(f"{seg.steer.value}{'+' if seg.gear is Gear.FORWARD else '-'}" for seg in segments)
    return RSPath(segments, word)


def path_endpoint(path: RSPath, start: Pose2D, r_min: float) -> Pose2D:
    """Pose reached by driving ``path`` from ``start``."""
    x, y, th = start.x, start.y, start.theta
    for seg in path.segments:
        x, y, th = _advance(x, y, th, seg.steer.value, seg.signed_length, r_min)
    return Pose2D(x, y, th)


def _endpoint_ok(end: Pose2D, goal: Pose2D) -> bool:
    return (
        math.hypot(end.x - goal.x, end.y - goal.y) < ENDPOINT_TOL
        and abs(angle_diff(end.theta, goal.theta)) < ENDPOINT_TOL
    )


# ═══════════════════════════════════════════════════════════
# Public API
# ═══════════════════════════════════════════════════════════


def enumerate_all(start: Pose2D, goal: Pose2D, r_min: float) -> list[RSPath]:
    """Every feasible Reeds-Shepp candidate joining ``start`` to ``goal``.

    Args:
        start: Start pose.
        goal: Goal pose.
        r_min: Minimum turning radius (meters, > 0).

    Returns:
        Candidates whose integrated endpoint matches the goal within 1e-6,
        sorted by (length, gear shifts, word).

    Raises:
        ValueError: If r_min is not positive.
    """
    if not r_min > 0.0:
        raise ValueError(f"r_min must be > 0, got {r_min}")
    dx, dy = goal.x - start.x, goal.y - start.y
    c, s = math.cos(start.theta), math.sin(start.theta)
    x = (c * dx + s * dy) / r_min
    y = (-s * dx + c * dy) / r_min
    phi = angle_diff(goal.theta, start.theta)

    paths: list[RSPath] = []
    for letters, unit_lengths in _candidates(x, y, phi):
        path = _build_path(letters, tuple(length * r_min for length in unit_lengths))
        if _endpoint_ok(path_endpoint(path, start, r_min), goal):
            paths.append(path)
    paths.sort(key=RSPath.sort_key)
    return paths


def _pick_best(paths: Iterable[RSPath]) -> Optional[RSPath]:
    """Shortest path; near-equal lengths prefer fewer gear shifts, then word order."""
    ordered = sorted(paths, key=RSPath.sort_key)
    if not ordered:
        return None
    shortest = ordered[0].total_length
    tied = [p for p in ordered if p.total_length - shortest <= LENGTH_TIE_TOL]
    return min(tied, key=lambda p: (p.gear_shifts, p.word))


def solve(start: Pose2D, goal: Pose2D, r_min: float) -> RSPath:
    """Shortest Reeds-Shepp path from ``start`` to ``goal``.

    Raises:
        ValueError: If r_min is not positive, or (never expected) no
            candidate survives endpoint verification.
    """
    best = _pick_best(enumerate_all(start, goal, r_min))
    if best is None:
        raise ValueError(f"No Reeds-Shepp candidate reaches {goal} from {start}")
    return best


def shortest_length(start: Pose2D, goal: Pose2D, r_min: float) -> float:
    """Length of the shortest word, without building or verifying paths.

    Used as a search heuristic where :func:`solve` would be too slow.
    """
    if not r_min > 0.0:
        raise ValueError(f"r_min must be > 0, got {r_min}")
    dx, dy = goal.x - start.x, goal.y - start.y
    c, s = math.cos(start.theta), math.sin(start.theta)
    x = (c * dx + s * dy) / r_min
    y = (-s * dx + c * dy) / r_min
    phi = angle_diff(goal.theta, start.theta)
    best = min(
        (sum(abs(v) for v in lengths) for _, lengths in _candidates(x, y, phi)),
        default=math.inf,
    )
    return best * r_min


def sample(path: RSPath, start: Pose2D, r_min: float, ds: float) -> list[Pose2D]:
    """Poses along ``path`` spaced at most ``ds`` apart in arc length.

    The first pose is ``start`` and the last is the path endpoint. Headings
    follow the arcs; backward segments move against the heading.

    Raises:
        ValueError: If ds is not positive.
    """
    xs, ys, ths = sample_arrays(path, start, r_min, ds)
    return [Pose2D(x, y, th) for x, y, th in zip(xs, ys, ths)]


def sample_arrays(
    path: RSPath, start: Pose2D, r_min: float, ds: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized :func:`sample` returning x, y, theta arrays (theta unwrapped)."""
    if not ds > 0.0:
        raise ValueError(f"ds must be > 0, got {ds}")
    xs, ys, ths = [np.array([start.x])], [np.array([start.y])], [np.array([start.theta])]
    x, y, th = start.x, start.y, start.theta
    for seg in path.segments:
        if seg.length <= _ZERO:
            continue
        n = max(1, math.ceil(seg.length / ds - 1e-12))
        s = np.linspace(0.0, seg.signed_length, n + 1)[1:]
        letter = seg.steer.value
        if letter == "S":
            px, py, pth = x + s * math.cos(th), y + s * math.sin(th), np.full_like(s, th)
        elif letter == "L":
            pth = th + s / r_min
            px = x + r_min * (np.sin(pth) - math.sin(th))
            py = y - r_min * (np.cos(pth) - math.cos(th))
        else:
            pth = th - s / r_min
            px = x - r_min * (np.sin(pth) - math.sin(th))
            py = y + r_min * (np.cos(pth) - math.cos(th))
        xs.append(px)
        ys.append(py)
        ths.append(pth)
        x, y, th = _advance(x, y, th, letter, seg.signed_length, r_min)
        # pin the segment end to the exact closed form
        xs[-1][-1], ys[-1][-1], ths[-1][-1] = x, y, th
    return np.concatenate(xs), np.concatenate(ys), np.concatenate(ths)
