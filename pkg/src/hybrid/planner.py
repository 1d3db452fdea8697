"""Parking Planner — Hybrid RS / RL Planner.

Each step the hybrid planner keeps following a tracked Reeds-Shepp path as
long as the vehicle is where the path expects it and the rest of the path
is still clear. Otherwise it probes for a new collision-free RS path from
the current pose, and only when none exists asks the learned policy for an
action, which is then clipped by the action mask.

The same decision interface drives the two baselines: the pure policy
(optionally masked) and the Hybrid A* plan executor.

Usage:
    planner = HybridPlanner(config, policy=lambda obs: agent.act(obs, deterministic=True))
    env.reset_scenario(scenario)
    record = rollout(env, planner)
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Protocol

import numpy as np

from src.config import AppConfig
from src.geometry.se2 import Pose2D
from src.hybrid.action_mask import apply, compute_mask
from src.hybrid.rs_probe import try_rs
from src.hybrid.tracking import SegmentTracker, rs_segments
from src.mapping.grid import OccupancyGrid
from src.planning.collision import path_collides
from src.planning.hybrid_astar import AStarPath, HybridAStar
from src.planning.reeds_shepp import RSPath
from src.sim.env import ParkingEnv, StepResult
from src.sim.episode import EpisodeRecord, StepLog
from src.sim.kinematics import Action, VehicleState
from src.sim.scenarios import Scenario
from src.utils.errors import EpisodeStateError, StartInCollisionError
from src.utils.logger import get_logger

logger = get_logger(__name__)

Policy = Callable[[np.ndarray], Action]
NO_PATH = "NO_PATH"


class Method(str, Enum):
    HYBRID_RL = "HYBRID_RL"
    PURE_SAC = "PURE_SAC"
    HYBRID_ASTAR = "HYBRID_ASTAR"

    @classmethod
    def parse(cls, label: str) -> Method:
        key = label.strip().upper().replace("-", "_")
        aliases = {"HYBRID": cls.HYBRID_RL, "SAC": cls.PURE_SAC, "ASTAR": cls.HYBRID_ASTAR}
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"Unknown method '{label}' (use {', '.join(m.value for m in cls)})") from None


class DecisionSource(str, Enum):
    RS = "RS"
    RL = "RL"
    PLAN = "PLAN"


@dataclass(frozen=True)
class PlannerDecision:
    """Action for one step and where it came from.

    ``rs_path`` is set exactly when ``source`` is RS.
    """

    source: DecisionSource
    action: Action
    rs_path: Optional[RSPath] = None

    def __post_init__(self) -> None:
        if (self.source is DecisionSource.RS) != (self.rs_path is not None):
            raise ValueError("PlannerDecision: rs_path must be present exactly for RS decisions")


class Planner(Protocol):
    method: Method
    ready: bool

    def reset(self, scenario: Scenario) -> None: ...

    def act(self, state: VehicleState, obs: np.ndarray, goal: Pose2D, grid: OccupancyGrid) -> PlannerDecision: ...


# ═══════════════════════════════════════════════════════════
# Policy-driven planners
# ═══════════════════════════════════════════════════════════


class PolicyPlanner:
    """Policy action, optionally clipped by the action mask."""

    method = Method.PURE_SAC
    ready = True

    def __init__(self, config: AppConfig, policy: Policy, use_mask: bool = False) -> None:
        self.config = config
        self.policy = policy
        self.use_mask = use_mask

    def reset(self, scenario: Scenario) -> None:
        pass

    def _policy_decision(self, state: VehicleState, obs: np.ndarray, grid: OccupancyGrid) -> PlannerDecision:
        action = self.policy(obs)
        if self.use_mask:
            mask = compute_mask(
                grid, state, self.config.vehicle, self.config.mask.horizon_steps,
                self.config.mask, self.config.sim.dt, self.config.collision,
            )
            action = apply(mask, action)
        return PlannerDecision(DecisionSource.RL, action)

    def act(self, state: VehicleState, obs: np.ndarray, goal: Pose2D, grid: OccupancyGrid) -> PlannerDecision:
        return self._policy_decision(state, obs, grid)


class HybridPlanner(PolicyPlanner):
    """RS path whenever a collision-free one exists, masked policy otherwise."""

    method = Method.HYBRID_RL

    def __init__(self, config: AppConfig, policy: Policy, use_mask: bool = True) -> None:
        super().__init__(config, policy, use_mask)
        self.tracker: Optional[SegmentTracker] = None
        self.followed: list[RSPath] = []

    def reset(self, scenario: Scenario) -> None:
        self.tracker = None
        self.followed = []

    def _tracking_valid(self, state: VehicleState, grid: OccupancyGrid) -> bool:
        tracker = self.tracker
        if tracker is None or tracker.done:
            return False
        if tracker.deviation(state.pose) > self.config.hybrid.track_tolerance:
            logger.debug("Dropping RS path %s: off track", tracker.rs_path.word)
            return False
        poses = tracker.remaining_poses(self.config.collision.sample_step)
        if path_collides(grid, poses, self.config.vehicle, self.config.collision):
            logger.debug("Dropping RS path %s: now blocked", tracker.rs_path.word)
            return False
        return True

    def act(self, state: VehicleState, obs: np.ndarray, goal: Pose2D, grid: OccupancyGrid) -> PlannerDecision:
        if not self._tracking_valid(state, grid):
            self.tracker = None
            path = try_rs(state, goal, grid, self.config.vehicle, self.config.collision)
            if path is not None:
                self.tracker = SegmentTracker(
                    rs_segments(path, self.config.vehicle), state.pose,
                    self.config.vehicle, self.config.sim.dt, rs_path=path,
                )
                self.followed.append(path)
                logger.debug("Following RS path %s (%.2f m)", path.word, path.total_length)
        if self.tracker is not None:
            return PlannerDecision(DecisionSource.RS, self.tracker.next_action(), self.tracker.rs_path)
        return self._policy_decision(state, obs, grid)


# ═══════════════════════════════════════════════════════════
# Hybrid A* executor
# ═══════════════════════════════════════════════════════════


class AStarExecutor:
    """Plans once per episode with Hybrid A* and replays the plan's segments."""

    method = Method.HYBRID_ASTAR

    def __init__(self, config: AppConfig) -> None:
        self.config = config
        self.path: Optional[AStarPath] = None
        self.tracker: Optional[SegmentTracker] = None

    def reset(self, scenario: Scenario) -> None:
        search = HybridAStar(scenario.grid, self.config.vehicle, self.config.astar, self.config.collision)
        try:
            self.path = search.plan(scenario.start, scenario.target)
        except StartInCollisionError:
            self.path = None
        if self.path is None:
            self.tracker = None
            logger.info("Hybrid A*: no path for %s", scenario.scenario_id)
            return
        self.tracker = SegmentTracker(
            self.path.segments, scenario.start, self.config.vehicle, self.config.sim.dt,
        )
        logger.debug(
            "Hybrid A*: %s planned %.2f m, %d shifts, %d expansions",
            scenario.scenario_id, self.path.length, self.path.gear_shifts, self.path.expansions,
        )

    @property
    def ready(self) -> bool:
        return self.path is not None

    def act(self, state: VehicleState, obs: np.ndarray, goal: Pose2D, grid: OccupancyGrid) -> PlannerDecision:
        if self.tracker is None:
            raise EpisodeStateError("Hybrid A* executor has no plan for this episode")
        return PlannerDecision(DecisionSource.PLAN, self.tracker.next_action())


# ═══════════════════════════════════════════════════════════
# Rollout
# ═══════════════════════════════════════════════════════════


StepCallback = Callable[[np.ndarray, PlannerDecision, StepResult], None]


def rollout(
    env: ParkingEnv, planner: Planner, max_steps: Optional[int] = None,
    on_step: Optional[StepCallback] = None,
) -> EpisodeRecord:
    """Drive one episode from the environment's current (reset) state.

    Args:
        env: A reset environment.
        planner: Decision maker; its ``reset`` is called here.
        max_steps: Extra cap on steps (the environment's own timeout still applies).
        on_step: Called with (observation, decision, result) after every step.

    Raises:
        EpisodeStateError: If the environment was not reset.
    """
    if env.state is None or env.scenario is None:
        raise EpisodeStateError("rollout() needs a reset environment")
    scenario = env.scenario
    planner.reset(scenario)
    record = EpisodeRecord(scenario_id=scenario.scenario_id, method=planner.method.value)
    if not planner.ready:
        record.outcome = NO_PATH
        return record
    limit = max_steps if max_steps is not None else env.sim.max_steps
    obs = env.observe().as_vector()
    latency = 0.0

    while not env.done and len(record.steps) < limit:
        tic = time.perf_counter()
        decision = planner.act(env.state, obs, scenario.target, scenario.grid)
        latency += time.perf_counter() - tic

        result = env.advance(decision.action)
        pose = env.state.pose
        record.steps.append(StepLog(
            env.step_count, pose.x, pose.y, pose.theta,
            decision.action.velocity, decision.action.steering,
            result.reward, result.outcome.value, decision.source.value,
        ))
        if decision.source is DecisionSource.RL:
            record.rl_steps += 1
        else:
            record.rs_steps += 1
        record.episode_return += result.reward
        if on_step is not None:
            on_step(obs, decision, result)
        obs = result.observation.as_vector()

    record.outcome = env.outcome.value if env.done else "TIMEOUT"
    record.gear_shifts = env.gear_shifts
    record.path_length = env.path_length
    record.duration = env.step_count * env.sim.dt
    record.latency_ms = 1000.0 * latency / max(len(record.steps), 1)
    logger.debug(
        "%s [%s]: %s in %d steps (RS %d / RL %d)", scenario.scenario_id, record.method,
        record.outcome, len(record.steps), record.rs_steps, record.rl_steps,
    )
    return record
