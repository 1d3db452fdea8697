"""Parking Planner — BEV Parking Environment.

Kinematic bicycle simulator over a static scenario grid, exposed both as a
domain API (``reset_scenario`` / ``advance`` with typed results) and as a
gymnasium ``Env`` (``reset`` / ``step`` on arrays).

Reward per step:
    progress_weight · (previous − current pose error)
    − step_penalty − gear_shift_penalty · [gear shifted]
    − collision_penalty on collision, + success_bonus on success

where pose error = progress_pos_weight · distance + progress_ang_weight · |Δθ|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Optional

import gymnasium as gym
import numpy as np

from src.config import AppConfig
from src.geometry.se2 import Pose2D, angle_diff
from src.planning.collision import cast_beams, footprint_collides
from src.sim.kinematics import Action, VehicleState, check_action, integrate, sweep
from src.sim.render import render_scenario
from src.sim.scenarios import Scenario, validate_scenario
from src.utils.errors import EpisodeStateError
from src.utils.logger import get_logger

logger = get_logger(__name__)


class Outcome(str, Enum):
    RUNNING = "RUNNING"
    SUCCESS = "SUCCESS"
    COLLISION = "COLLISION"
    TIMEOUT = "TIMEOUT"


@dataclass(frozen=True, eq=False)
class Observation:
    """Beam distances (m), slot pose in the ego frame, and ego (v, δ)."""

    beams: np.ndarray
    target_rel: np.ndarray
    ego: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.beams, self.target_rel, self.ego])


@dataclass(frozen=True)
class StepResult:
    observation: Observation
    reward: float
    done: bool
    outcome: Outcome


class ParkingEnv(gym.Env):
    """Single-vehicle parking episode on one scenario at a time.

    Args:
        config: Application configuration.
        scenario: Optional scenario used by the gymnasium ``reset``.
    """

    metadata = {"render_modes": []}

    def __init__(self, config: AppConfig, scenario: Optional[Scenario] = None) -> None:
        super().__init__()
        self.config = config
        self.vehicle = config.vehicle
        self.sim = config.sim
        self.scenario = scenario

        v_max, d_max = self.vehicle.max_speed, self.vehicle.max_steer
        self.action_space = gym.spaces.Box(
            low=np.array([-v_max, -d_max]), high=np.array([v_max, d_max]), dtype=np.float64,
        )
        n = self.sim.n_beams
        low = np.concatenate([np.zeros(n), [-np.inf, -np.inf, -1.0, -1.0, -v_max, -d_max]])
        high = np.concatenate([np.full(n, self.sim.max_range), [np.inf, np.inf, 1.0, 1.0, v_max, d_max]])
        self.observation_space = gym.spaces.Box(low=low, high=high, dtype=np.float64)

        self.state: Optional[VehicleState] = None
        self.outcome = Outcome.RUNNING
        self.step_count = 0
        self.gear_shifts = 0
        self.path_length = 0.0
        self.trajectory: list[Pose2D] = []
        self.velocities: list[float] = []
        self._last_gear = 0
        self._last_error = 0.0

    # ── Helpers ──────────────────────────────────────────

    @property
    def done(self) -> bool:
        return self.outcome is not Outcome.RUNNING

    def _pose_error(self, pose: Pose2D) -> float:
        target = self.scenario.target
        return (
            self.sim.progress_pos_weight * pose.distance_to(target)
            + self.sim.progress_ang_weight * abs(angle_diff(pose.theta, target.theta))
        )

    def _is_success(self, pose: Pose2D) -> bool:
        target = self.scenario.target
        return (
            pose.distance_to(target) <= self.sim.pos_tol
            and abs(angle_diff(pose.theta, target.theta)) <= self.sim.ang_tol
            and self.scenario.footprint_in_slot(pose, self.vehicle)
        )

    def observe(self) -> Observation:
        """Observation of the current state (beams cast from the footprint center)."""
        pose = self.state.pose
        off = self.vehicle.center_offset
        center = Pose2D(pose.x + off * math.cos(pose.theta), pose.y + off * math.sin(pose.theta), pose.theta)
        beams = np.array(cast_beams(self.scenario.grid, center, self.sim.n_beams, self.sim.max_range))
        rel = self.scenario.target.relative_to(pose)
        target_rel = np.array([rel.x, rel.y, math.sin(rel.theta), math.cos(rel.theta)])
        ego = np.array([self.state.velocity, self.state.steering])
        return Observation(beams, target_rel, ego)

    # ── Domain API ───────────────────────────────────────

    def reset_scenario(self, scenario: Scenario) -> Observation:
        """Place the vehicle at ``scenario.start`` at rest and return the first observation.

        Raises:
            ScenarioError: If the scenario violates its invariants.
        """
        validate_scenario(scenario, self.vehicle, self.config.collision)
        self.scenario = scenario
        self.state = VehicleState(scenario.start, 0.0, 0.0)
        self.outcome = Outcome.RUNNING
        self.step_count = 0
        self.gear_shifts = 0
        self.path_length = 0.0
        self.trajectory = [scenario.start]
        self.velocities = []
        self._last_gear = 0
        self._last_error = self._pose_error(scenario.start)
        return self.observe()

    def advance(self, action: Action) -> StepResult:
        """Apply one raw (unmasked) action for ``dt`` seconds.

        Raises:
            EpisodeStateError: Before the first reset or after the episode ended.
            ActionBoundsError: If the action exceeds the vehicle limits.
        """
        if self.state is None:
            raise EpisodeStateError("step() called before reset()")
        if self.done:
            raise EpisodeStateError(f"step() called after the episode ended ({self.outcome.value})")
        check_action(action, self.vehicle)

        dt = self.sim.dt
        prev = self.state.pose
        swept = sweep(prev, action.velocity, action.steering, self.vehicle.wheelbase, dt,
                      self.config.collision.sample_step)
        pose = integrate(prev, action.velocity, action.steering, self.vehicle.wheelbase, dt)
        self.state = VehicleState(pose, action.velocity, action.steering)
        self.step_count += 1
        self.trajectory.append(pose)
        self.velocities.append(action.velocity)
        self.path_length += abs(action.velocity) * dt

        shifted = False
        if action.velocity != 0.0:
            gear = 1 if action.velocity > 0 else -1
            shifted = self._last_gear != 0 and gear != self._last_gear
            self._last_gear = gear
        if shifted:
            self.gear_shifts += 1

        error = self._pose_error(pose)
        reward = (
            self.sim.progress_weight * (self._last_error - error)
            - self.sim.step_penalty
            - (self.sim.gear_shift_penalty if shifted else 0.0)
        )
        self._last_error = error

        margin = self.sim.sim_collision_margin
        if any(footprint_collides(self.scenario.grid, p, self.vehicle, margin) for p in swept[1:]):
            self.outcome = Outcome.COLLISION
            reward -= self.sim.collision_penalty
        elif self._is_success(pose):
            self.outcome = Outcome.SUCCESS
            reward += self.sim.success_bonus
        elif self.step_count >= self.sim.max_steps:
            self.outcome = Outcome.TIMEOUT

        if self.done:
            logger.debug(
                "%s: %s after %d steps (shifts=%d, length=%.2f m)",
                self.scenario.scenario_id, self.outcome.value, self.step_count,
                self.gear_shifts, self.path_length,
            )
        return StepResult(self.observe(), float(reward), self.done, self.outcome)

    # ── Gymnasium API ────────────────────────────────────

    def reset(
        self, *, seed: Optional[int] = None, options: Optional[dict[str, Any]] = None,
    ) -> tuple[np.ndarray, dict[str, Any]]:
        super().reset(seed=seed)
        scenario = (options or {}).get("scenario", self.scenario)
        if scenario is None:
            raise EpisodeStateError("reset() needs a scenario (constructor or options['scenario'])")
        obs = self.reset_scenario(scenario)
        return obs.as_vector(), self.info()

    def step(self, action: np.ndarray) -> tuple[np.ndarray, float, bool, bool, dict[str, Any]]:
        a = np.asarray(action, dtype=np.float64).reshape(2)
        result = self.advance(Action(float(a[0]), float(a[1])))
        truncated = result.outcome is Outcome.TIMEOUT
        terminated = result.done and not truncated
        return result.observation.as_vector(), result.reward, terminated, truncated, self.info()

    def info(self) -> dict[str, Any]:
        return {
            "outcome": self.outcome.value,
            "gear_shifts": self.gear_shifts,
            "path_length": self.path_length,
            "steps": self.step_count,
        }

    def render_frame(self, path: Path) -> Path:
        """Write a BEV PNG of the grid, slot, trajectory and current footprint.

        Raises:
            EpisodeStateError: Before the first reset.
            OSError: If the image cannot be written.
        """
        if self.state is None:
            raise EpisodeStateError("render_frame() called before reset()")
        return render_scenario(
            self.scenario, self.vehicle, path, trajectory=self.trajectory, pose=self.state.pose,
        )
