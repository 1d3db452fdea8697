"""Parking Planner — Hybrid A* Baseline.

A* over (x, y, θ) bins with kinematic arc primitives and Reeds-Shepp
analytic expansion. Used both as a benchmark method and as the
solvability oracle during scenario generation.

Cost model (meters-equivalent):
    forward arc length + reverse_weight · reverse arc length
    + shift_weight per gear change

Heuristic: max of the obstacle-free Reeds-Shepp length and an
obstacle-aware 8-connected grid distance (heading ignored), the latter
shrunk so it never exceeds the Euclidean distance.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from src.config import AStarConfig, CollisionConfig
from src.geometry.se2 import Pose2D, VehicleParams, angle_diff
from src.hybrid.rs_probe import first_clear_path, rs_sweep
from src.hybrid.tracking import rs_segments
from src.mapping.grid import CellState, OccupancyGrid
from src.planning.collision import path_collides, pose_collides
from src.planning.reeds_shepp import shortest_length
from src.sim.kinematics import MotionSegment, gear_shift_count, sweep
from src.utils.errors import StartInCollisionError
from src.utils.logger import get_logger

logger = get_logger(__name__)

# ── Constants ─────────────────────────────────────────────
# Worst-case ratio of 8-connected path length to Euclidean distance.
OCTILE_RATIO = math.sqrt(4.0 - 2.0 * math.sqrt(2.0))
_SQRT2 = math.sqrt(2.0)


# ═══════════════════════════════════════════════════════════
# Data Models
# ═══════════════════════════════════════════════════════════


@dataclass
class SearchNode:
    """Lattice node; ``poses`` is the sweep from the parent (parent pose excluded)."""

    state: Pose2D
    gear: int
    g_cost: float
    parent: Optional[SearchNode] = None
    primitive: Optional[MotionSegment] = None
    poses: list[Pose2D] = field(default_factory=list)


@dataclass(frozen=True)
class AStarPath:
    """A found plan.

    Attributes:
        poses: Sampled poses from start to goal (start included).
        segments: Constant-steering pieces that reproduce ``poses``.
        cost: Search cost of the plan.
        expansions: Nodes popped before the plan was found.
    """

    poses: tuple[Pose2D, ...]
    segments: tuple[MotionSegment, ...]
    cost: float
    expansions: int

    @property
    def length(self) -> float:
        return sum(s.length for s in self.segments)

    @property
    def gear_shifts(self) -> int:
        return gear_shift_count(s.gear for s in self.segments if s.length > 0.0)

    @property
    def gears(self) -> list[int]:
        return [s.gear for s in self.segments]


# ═══════════════════════════════════════════════════════════
# Heuristic
# ═══════════════════════════════════════════════════════════


def grid_distance_field(grid: OccupancyGrid, goal: Pose2D) -> np.ndarray:
    """Shortest 8-connected distance (meters) over FREE cells to the goal cell.

    Unreachable cells (and every cell when the goal cell is not FREE) are inf.
    """
    h, w = grid.height, grid.width
    free = grid.cells == CellState.FREE
    field_out = np.full((h, w), np.inf)
    gc, gr = grid.world_to_cell(goal.x, goal.y)
    if not (0 <= gc < w and 0 <= gr < h) or not free[gr, gc]:
        return field_out

    index = np.arange(h * w).reshape(h, w)
    res = grid.resolution
    rows, cols, weights = [], [], []
    for dr, dc, cost in ((0, 1, res), (1, 0, res), (1, 1, res * _SQRT2), (1, -1, res * _SQRT2)):
        r0, r1 = max(0, -dr), h - max(0, dr)
        c0, c1 = max(0, -dc), w - max(0, dc)
        a = free[r0:r1, c0:c1] & free[r0 + dr:r1 + dr, c0 + dc:c1 + dc]
        rows.append(index[r0:r1, c0:c1][a])
        cols.append(index[r0 + dr:r1 + dr, c0 + dc:c1 + dc][a])
        weights.append(np.full(int(a.sum()), cost))
    graph = coo_matrix(
        (np.concatenate(weights), (np.concatenate(rows), np.concatenate(cols))), shape=(h * w, h * w),
    ).tocsr()
    dist = dijkstra(graph, directed=False, indices=int(index[gr, gc]))
    return dist.reshape(h, w)


class Heuristic:
    """Admissible cost-to-go estimate toward one goal on one grid."""

    def __init__(self, grid: OccupancyGrid, goal: Pose2D, vehicle: VehicleParams) -> None:
        self.grid = grid
        self.goal = goal
        self.r_min = vehicle.min_turn_radius
        self.field = grid_distance_field(grid, goal)
        self._slack = 2.0 * grid.resolution * _SQRT2

    def grid_term(self, pose: Pose2D) -> float:
        col, row = self.grid.world_to_cell(pose.x, pose.y)
        if not (0 <= col < self.grid.width and 0 <= row < self.grid.height):
            return math.inf
        d = float(self.field[row, col])
        if not math.isfinite(d):
            return math.inf
        return max(0.0, (d - self._slack) / OCTILE_RATIO)

    def __call__(self, pose: Pose2D) -> float:
        return max(shortest_length(pose, self.goal, self.r_min), self.grid_term(pose))


def heuristic(state: Pose2D, goal: Pose2D, grid: OccupancyGrid, vehicle: VehicleParams) -> float:
    """One-off heuristic evaluation (builds the grid distance field)."""
    return Heuristic(grid, goal, vehicle)(state)


# ═══════════════════════════════════════════════════════════
# Search
# ═══════════════════════════════════════════════════════════


class HybridAStar:
    """Hybrid A* planner bound to one grid and vehicle."""

    def __init__(
        self, grid: OccupancyGrid, vehicle: VehicleParams,
        cfg: AStarConfig, collision_cfg: CollisionConfig,
    ) -> None:
        self.grid = grid
        self.vehicle = vehicle
        self.cfg = cfg
        self.collision_cfg = collision_cfg
        self._n_yaw = max(1, round(2.0 * math.pi / cfg.yaw_resolution))
        steer = vehicle.max_steer
        self._primitives = [
            MotionSegment(s, gear, cfg.primitive_length)
            for gear in (1, -1)
            for s in (-steer, -steer / 2.0, 0.0, steer / 2.0, steer)
        ]

    def _key(self, pose: Pose2D) -> tuple[int, int, int]:
        yaw = (pose.theta + math.pi) / self.cfg.yaw_resolution
        return (
            math.floor(pose.x / self.cfg.xy_resolution),
            math.floor(pose.y / self.cfg.xy_resolution),
            int(math.floor(yaw)) % self._n_yaw,
        )

    def _at_goal(self, pose: Pose2D, goal: Pose2D) -> bool:
        return (
            math.hypot(pose.x - goal.x, pose.y - goal.y) <= self.cfg.goal_pos_tol
            and abs(angle_diff(pose.theta, goal.theta)) <= self.cfg.goal_ang_tol
        )

    def _step_cost(self, parent: SearchNode, prim: MotionSegment) -> float:
        cost = prim.length * (self.cfg.reverse_weight if prim.gear < 0 else 1.0)
        if parent.gear != 0 and parent.gear != prim.gear:
            cost += self.cfg.shift_weight
        return cost

    def _expand(self, node: SearchNode) -> list[SearchNode]:
        children = []
        for prim in self._primitives:
            poses = sweep(
                node.state, prim.gear * prim.length, prim.steering, self.vehicle.wheelbase,
                1.0, self.collision_cfg.sample_step,
            )
            if path_collides(self.grid, poses[1:], self.vehicle, self.collision_cfg):
                continue
            children.append(SearchNode(
                state=poses[-1], gear=prim.gear, g_cost=node.g_cost + self._step_cost(node, prim),
                parent=node, primitive=prim, poses=poses[1:],
            ))
        return children

    def _finish(
        self, node: SearchNode, tail: list[Pose2D], tail_segments: list[MotionSegment],
        cost: float, expansions: int,
    ) -> AStarPath:
        chain = []
        cursor: Optional[SearchNode] = node
        while cursor is not None:
            chain.append(cursor)
            cursor = cursor.parent
        chain.reverse()
        poses = [chain[0].state]
        segments = []
        for n in chain[1:]:
            poses.extend(n.poses)
            segments.append(n.primitive)
        poses.extend(tail)
        segments.extend(tail_segments)
        return AStarPath(tuple(poses), tuple(segments), cost, expansions)

    def plan(self, start: Pose2D, goal: Pose2D) -> Optional[AStarPath]:
        """Search from ``start`` to within goal tolerance of ``goal``.

        Returns:
            The plan, or None when the open set or node budget runs out.

        Raises:
            StartInCollisionError: If the start footprint collides.
        """
        if pose_collides(self.grid, start, self.vehicle, self.collision_cfg):
            raise StartInCollisionError(f"Start pose {start.as_tuple()} is in collision")

        root = SearchNode(start, 0, 0.0)
        if self._at_goal(start, goal):
            return AStarPath((start,), (), 0.0, 0)
        if pose_collides(self.grid, goal, self.vehicle, self.collision_cfg):
            logger.debug("Hybrid A*: goal pose in collision")
            return None

        h = Heuristic(self.grid, goal, self.vehicle)
        rng = np.random.default_rng(self.cfg.astar_seed)
        counter = 0
        open_heap: list[tuple[float, int, SearchNode]] = [(h(start), counter, root)]
        best_g = {self._key(start): 0.0}
        closed: set[tuple[int, int, int]] = set()
        pops = 0

        while open_heap and pops < self.cfg.max_pops:
            _, _, node = heapq.heappop(open_heap)
            key = self._key(node.state)
            if key in closed:
                continue
            closed.add(key)
            pops += 1

            if self._at_goal(node.state, goal):
                logger.debug("Hybrid A*: goal reached after %d pops", pops)
                return self._finish(node, [], [], node.g_cost, pops)

            h_node = h(node.state)
            p_analytic = min(1.0, self.cfg.analytic_scale / max(h_node, 1e-9))
            if rng.random() < p_analytic:
                rs = first_clear_path(node.state, goal, self.grid, self.vehicle, self.collision_cfg)
                if rs is not None:
                    tail = rs_sweep(rs, node.state, self.vehicle, self.collision_cfg)[1:]
                    segs = rs_segments(rs, self.vehicle)
                    extra = sum(
                        s.length * (self.cfg.reverse_weight if s.gear < 0 else 1.0) for s in segs
                    )
                    gears = ([node.gear] if node.gear != 0 else []) + [s.gear for s in segs]
                    extra += self.cfg.shift_weight * gear_shift_count(gears)
                    logger.debug("Hybrid A*: analytic expansion %s after %d pops", rs.word, pops)
                    return self._finish(node, tail, segs, node.g_cost + extra, pops)

            for child in self._expand(node):
                ckey = self._key(child.state)
                if ckey in closed or child.g_cost >= best_g.get(ckey, math.inf):
                    continue
                h_child = h(child.state)
                if not math.isfinite(h_child):
                    continue
                best_g[ckey] = child.g_cost
                counter += 1
                heapq.heappush(open_heap, (child.g_cost + h_child, counter, child))

        logger.debug("Hybrid A*: no path (%d pops, open=%d)", pops, len(open_heap))
        return None


def plan(
    grid: OccupancyGrid, start: Pose2D, goal: Pose2D, vehicle: VehicleParams,
    cfg: AStarConfig, collision_cfg: CollisionConfig,
) -> Optional[AStarPath]:
    """Plan with a throwaway :class:`HybridAStar` instance."""
    return HybridAStar(grid, vehicle, cfg, collision_cfg).plan(start, goal)
