"""Parking Planner — Simulator Test Script.

Verifies the simulated parking world:
  1. Bicycle kinematics and action bounds
  2. Episode outcomes, rewards and gear-shift accounting
  3. Gymnasium interface and frame rendering
  4. Scenario generation, files and manifests
  5. Episode log files

Run: python scripts/test_simulator.py
"""

from __future__ import annotations

import math
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

# Add project root to path
PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from src.config import load_config
from src.geometry.se2 import Pose2D, angle_diff
from src.mapping.grid import OccupancyGrid
from src.sim.env import Outcome, ParkingEnv
from src.sim.episode import EpisodeRecord, StepLog, read_episode_log, write_episode_log
from src.sim.kinematics import (
    Action, VehicleState, check_action, clip_action, gear_shift_count, integrate,
    kinematic_step, sweep,
)
from src.sim.scenarios import (
    Difficulty, Scenario, ScenarioKind, generate_scenario, load_scenario, read_manifest,
    save_scenario, suite_plan, validate_scenario, write_manifest,
)
from src.utils.errors import ActionBoundsError, EpisodeStateError, ScenarioError
from src.utils.logger import get_logger

logger = get_logger(__name__)

# ── Test counters ─────────────────────────────────────────
_passed = 0
_failed = 0

CONFIG = load_config()
VEHICLE = CONFIG.vehicle


def check(label: str, condition: bool) -> None:
    """Assert a test condition and track pass/fail counts."""
    global _passed, _failed
    if condition:
        _passed += 1
        logger.info("  ✅ %s", label)
    else:
        _failed += 1
        logger.error("  ❌ FAILED: %s", label)


def _raises(exc_type: type[BaseException], fn, *args, **kwargs) -> bool:
    try:
        fn(*args, **kwargs)
    except exc_type:
        return True
    return False


def _open_lot(target: Pose2D, start: Pose2D, wall_x: float | None = None) -> Scenario:
    """30 × 20 m free lot with a slot centered on ``target`` and an optional wall."""
    grid = OccupancyGrid.filled(300, 200, 0.1, Pose2D(0.0, 0.0, 0.0))
    if wall_x is not None:
        xs = (np.arange(grid.width) + 0.5) * 0.1
        ys = (np.arange(grid.height) + 0.5) * 0.1
        mask = (xs[None, :] >= wall_x) & (xs[None, :] <= wall_x + 0.5) & (np.abs(ys[:, None] - 10.0) <= 3.0)
        grid = grid.with_obstacles(mask)
    off = VEHICLE.center_offset
    slot = Pose2D(target.x + off * math.cos(target.theta), target.y + off * math.sin(target.theta), target.theta)
    return Scenario(
        scenario_id="open_lot", grid=grid, start=start, target=target, slot=slot,
        slot_width=2.5, slot_length=5.3, kind=ScenarioKind.PERPENDICULAR,
        difficulty=Difficulty.SIM_NORMAL, seed=0,
    )


def _pose_error(pose: Pose2D, target: Pose2D) -> float:
    sim = CONFIG.sim
    return (
        sim.progress_pos_weight * pose.distance_to(target)
        + sim.progress_ang_weight * abs(angle_diff(pose.theta, target.theta))
    )


def test_kinematics() -> None:
    logger.info("═══ Test 1: Bicycle Kinematics ═══")
    r = VEHICLE.min_turn_radius
    origin = Pose2D(0.0, 0.0, 0.0)

    quarter = integrate(origin, 2.0, VEHICLE.max_steer, VEHICLE.wheelbase, r * math.pi / 4.0)
    check(
        "Full lock for a quarter circle ends at (r, r, π/2)",
        abs(quarter.x - r) < 1e-9 and abs(quarter.y - r) < 1e-9 and abs(quarter.theta - math.pi / 2) < 1e-12,
    )

    pose = origin
    for _ in range(10):
        pose = integrate(pose, 1.5, 0.3, VEHICLE.wheelbase, 0.1)
    once = integrate(origin, 1.5, 0.3, VEHICLE.wheelbase, 1.0)
    check("Ten 0.1 s arcs == one 1 s arc", pose.distance_to(once) < 1e-9 and abs(pose.theta - once.theta) < 1e-12)

    straight = integrate(origin, -1.0, 0.0, VEHICLE.wheelbase, 0.5)
    check("Reverse straight moves backwards", abs(straight.x + 0.5) < 1e-12 and straight.y == 0.0)

    check("Speed above max_speed rejected", _raises(ActionBoundsError, check_action, Action(2.5, 0.0), VEHICLE))
    check("Steering above max_steer rejected", _raises(ActionBoundsError, check_action, Action(1.0, 0.7), VEHICLE))
    check("NaN action rejected", _raises(ActionBoundsError, check_action, Action(float("nan"), 0.0), VEHICLE))
    check(
        "kinematic_step enforces bounds",
        _raises(ActionBoundsError, kinematic_step, VehicleState(origin), Action(-3.0, 0.0), VEHICLE, 0.1),
    )
    clipped = clip_action(Action(5.0, -1.0), VEHICLE)
    check("clip_action clamps to the limits", clipped == Action(VEHICLE.max_speed, -VEHICLE.max_steer))

    stepped = kinematic_step(VehicleState(origin), Action(1.0, 0.2), VEHICLE, 0.1)
    check("State carries the applied (v, δ)", (stepped.velocity, stepped.steering) == (1.0, 0.2))

    swept = sweep(origin, 2.0, 0.4, VEHICLE.wheelbase, 0.5, 0.1)
    gaps = [a.distance_to(b) for a, b in zip(swept, swept[1:])]
    check("Sweep samples ≤ 0.1 m apart", max(gaps) <= 0.1 + 1e-12 and swept[0] == origin)
    check("Gear shifts count sign changes", gear_shift_count([1.0, 0.0, -1.0, -0.5, 1.0]) == 2)


def test_episodes() -> None:
    logger.info("═══ Test 2: Episode Outcomes ═══")
    target = Pose2D(10.0, 10.0, 0.0)
    env = ParkingEnv(CONFIG)
    check("advance() before reset raises", _raises(EpisodeStateError, env.advance, Action(0.0, 0.0)))

    obs = env.reset_scenario(_open_lot(target, Pose2D(8.0, 10.0, 0.0)))
    check("Observation size = beams + 6", obs.as_vector().shape == (CONFIG.sim.observation_size,))
    check("Target 2 m ahead in the ego frame", np.allclose(obs.target_rel, [2.0, 0.0, 0.0, 1.0], atol=1e-12))
    check("Beams bounded by max_range", float(obs.beams.max()) <= CONFIG.sim.max_range)

    result = None
    while not env.done:
        result = env.advance(Action(2.0, 0.0))
    check("Driving straight into the slot → SUCCESS", result.outcome is Outcome.SUCCESS)
    check("Success at step 9 (within pos_tol)", env.step_count == 9)
    check("Path length = Σ|v|·dt", abs(env.path_length - 1.8) < 1e-9)
    check("Success bonus paid", result.reward > CONFIG.sim.success_bonus - 1.0)
    check("advance() after the end raises", _raises(EpisodeStateError, env.advance, Action(0.0, 0.0)))

    wall_env = ParkingEnv(CONFIG)
    wall_env.reset_scenario(_open_lot(Pose2D(5.0, 3.0, 0.0), Pose2D(5.0, 10.0, 0.0), wall_x=12.0))
    while not wall_env.done:
        result = wall_env.advance(Action(2.0, 0.0))
    check("Driving into a wall → COLLISION", result.outcome is Outcome.COLLISION)
    check("Collision before the wall is passed", wall_env.state.pose.x + VEHICLE.wheelbase + VEHICLE.front_overhang < 12.6)
    check("Collision penalty applied", result.reward < -CONFIG.sim.collision_penalty + 1.0)

    short = replace(CONFIG, sim=replace(CONFIG.sim, max_steps=5))
    idle = ParkingEnv(short)
    idle.reset_scenario(_open_lot(target, Pose2D(4.0, 10.0, 0.0)))
    outcomes = [idle.advance(Action(0.0, 0.0)).outcome for _ in range(5)]
    check("Standing still → TIMEOUT at max_steps", outcomes[-1] is Outcome.TIMEOUT and outcomes[:-1] == [Outcome.RUNNING] * 4)

    env = ParkingEnv(CONFIG)
    lot = _open_lot(target, Pose2D(4.0, 12.0, 0.2))
    env.reset_scenario(lot)
    actions = [Action(1.0, 0.3), Action(0.0, 0.0), Action(-1.0, -0.2), Action(-0.5, 0.0), Action(1.5, 0.1)]
    rewards = [env.advance(a).reward for a in actions]
    check("Gear shifts skip zero-velocity steps", env.gear_shifts == 2 == gear_shift_count(a.velocity for a in actions))
    expected = (
        CONFIG.sim.progress_weight * (_pose_error(lot.start, target) - _pose_error(env.state.pose, target))
        - len(actions) * CONFIG.sim.step_penalty
        - 2 * CONFIG.sim.gear_shift_penalty
    )
    check("Σ reward telescopes to progress − penalties", abs(sum(rewards) - expected) < 1e-9)
    check("ActionBoundsError on out-of-range action", _raises(ActionBoundsError, env.advance, Action(3.0, 0.0)))

    replay = ParkingEnv(CONFIG)
    replay.reset_scenario(lot)
    for a in actions:
        replay.advance(a)
    check("Same scenario + actions → identical trajectory", replay.trajectory == env.trajectory)


def test_gym_and_render() -> None:
    logger.info("═══ Test 3: Gymnasium API & Rendering ═══")
    lot = _open_lot(Pose2D(10.0, 10.0, 0.0), Pose2D(4.0, 10.0, 0.0))
    env = ParkingEnv(CONFIG)
    obs, info = env.reset(options={"scenario": lot})
    check("reset() returns the observation vector", obs.shape == (CONFIG.sim.observation_size,))
    check("reset() info reports RUNNING", info["outcome"] == "RUNNING")
    check("Observation inside observation_space", env.observation_space.contains(obs))

    obs, reward, terminated, truncated, info = env.step(np.array([1.0, 0.0]))
    check("step() returns the 5-tuple", isinstance(reward, float) and not terminated and not truncated)
    check("info tracks steps", info["steps"] == 1)
    check("reset() without a scenario raises", _raises(EpisodeStateError, ParkingEnv(CONFIG).reset))

    with tempfile.TemporaryDirectory() as tmp:
        png = env.render_frame(Path(tmp) / "frames" / "frame.png")
        check("render_frame writes a PNG", png.exists() and png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n")
        again = env.render_frame(Path(tmp) / "again.png")
        check("Rendering is byte-deterministic", png.read_bytes() == again.read_bytes())
    check("render_frame before reset raises", _raises(EpisodeStateError, ParkingEnv(CONFIG).render_frame, Path("x.png")))


def test_scenarios() -> None:
    logger.info("═══ Test 4: Scenario Generation ═══")
    check("Difficulty aliases", Difficulty.parse("complex") is Difficulty.SIM_COMPLEX
          and Difficulty.parse("REAL_WORLD_STYLE") is Difficulty.REAL_WORLD_STYLE)
    check("Unknown difficulty rejected", _raises(ValueError, Difficulty.parse, "nightmare"))
    mixed = suite_plan("mixed", 70)
    check("Mixed 70 → 20 parallel + 50 perpendicular",
          mixed.count(ScenarioKind.PARALLEL) == 20 and mixed.count(ScenarioKind.PERPENDICULAR) == 50)
    check("Unknown kind rejected", _raises(ValueError, suite_plan, "diagonal", 3))

    perp = generate_scenario(ScenarioKind.PERPENDICULAR, Difficulty.SIM_NORMAL, 5, CONFIG)
    twin = generate_scenario(ScenarioKind.PERPENDICULAR, Difficulty.SIM_NORMAL, 5, CONFIG)
    check("Generation is seed-deterministic",
          perp.grid.equals(twin.grid) and perp.start == twin.start and perp.target == twin.target)
    par = generate_scenario(ScenarioKind.PARALLEL, Difficulty.SIM_NORMAL, 6, CONFIG)
    for sc in (perp, par):
        validate_scenario(sc, VEHICLE, CONFIG.collision)
        check(f"{sc.scenario_id}: target footprint inside slot", sc.footprint_in_slot(sc.target, VEHICLE))
    check("Slot heading matches the kind", abs(perp.target.theta - math.pi / 2) < 1e-12 and par.target.theta == 0.0)

    blocked = replace(perp, start=perp.target, grid=perp.grid.with_obstacles(np.ones(perp.grid.cells.shape, dtype=bool)))
    check("Blocked start rejected", _raises(ScenarioError, validate_scenario, blocked, VEHICLE, CONFIG.collision))
    check("reset_scenario validates", _raises(ScenarioError, ParkingEnv(CONFIG).reset_scenario, blocked))

    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        paths = [save_scenario(sc, root / "scenarios") for sc in (perp, par)]
        loaded = load_scenario(paths[0])
        check(
            "Scenario file round trip",
            loaded.grid.equals(perp.grid) and loaded.start == perp.start and loaded.target == perp.target
            and loaded.slot == perp.slot and loaded.kind is perp.kind and loaded.seed == perp.seed,
        )
        manifest = write_manifest(paths, root / "suite.txt", "SIM_MIXED")
        scenario_class, listed = read_manifest(manifest)
        check("Manifest keeps class and order",
              scenario_class == "SIM_MIXED" and [p.resolve() for p in listed] == [p.resolve() for p in paths])
        check("Manifest entries are relative", "scenarios/" in manifest.read_text(encoding="utf-8"))

        broken = root / "broken.scenario.yaml"
        broken.write_text("scenario_id: x\n", encoding="utf-8")
        check("Missing keys → ScenarioError", _raises(ScenarioError, load_scenario, broken))
        check("Missing file → FileNotFoundError", _raises(FileNotFoundError, load_scenario, root / "nope.yaml"))
        empty = root / "empty.txt"
        empty.write_text("# scenario_class: X\n", encoding="utf-8")
        check("Empty manifest → ScenarioError", _raises(ScenarioError, read_manifest, empty))


def test_episode_logs() -> None:
    logger.info("═══ Test 5: Episode Logs ═══")
    steps = [
        StepLog(0, 1.0, 2.0, 0.1, 1.0, 0.2, -0.01, "RUNNING"),
        StepLog(1, 1.1 + 1e-13, 2.0, 0.1 / 3.0, -1.0, 0.0, 0.123456789012345, "RUNNING"),
        StepLog(2, 1.2, 2.1, -0.2, 0.0, 0.0, 9.5, "SUCCESS"),
    ]
    record = EpisodeRecord(
        "sc_1", "HYBRID", outcome="SUCCESS", gear_shifts=1, path_length=0.2,
        duration=0.3, rs_steps=2, rl_steps=1, steps=steps,
    )
    with tempfile.TemporaryDirectory() as tmp:
        path = write_episode_log(record, Path(tmp) / "logs" / "sc_1.log")
        back = read_episode_log(path)
        check("Footer fields round trip",
              (back.scenario_id, back.method, back.outcome, back.gear_shifts, back.rs_steps, back.rl_steps)
              == ("sc_1", "HYBRID", "SUCCESS", 1, 2, 1))
        check("Floats written exactly", [s.x for s in back.steps] == [s.x for s in steps]
              and [s.reward for s in back.steps] == [s.reward for s in steps])
        check("Return recomputed from rewards", back.episode_return == sum(s.reward for s in steps))
        check("success flag in footer", "# success: true" in path.read_text(encoding="utf-8"))

        no_footer = Path(tmp) / "no_footer.log"
        no_footer.write_text("0 1.0 2.0 0.0 1.0 0.0 0.0 RUNNING\n", encoding="utf-8")
        check("Missing footer → EpisodeStateError", _raises(EpisodeStateError, read_episode_log, no_footer))
        bad_row = Path(tmp) / "bad_row.log"
        bad_row.write_text(path.read_text(encoding="utf-8").replace("RUNNING", "1.0 RUNNING", 1), encoding="utf-8")
        check("Malformed row → EpisodeStateError", _raises(EpisodeStateError, read_episode_log, bad_row))


def run_all_tests() -> None:
    logger.info("╔══════════════════════════════════════════╗")
    logger.info("║  Parking Planner — Simulator Tests       ║")
    logger.info("╚══════════════════════════════════════════╝")

    test_kinematics()
    test_episodes()
    test_gym_and_render()
    test_scenarios()
    test_episode_logs()

    logger.info("═══════════════════════════════════════════")
    logger.info("  Results: %d passed, %d failed", _passed, _failed)
    logger.info("═══════════════════════════════════════════")

    if _failed > 0:
        logger.error("Some tests failed!")
        sys.exit(1)
    else:
        logger.info("🎉 All simulator tests passed!")


if __name__ == "__main__":
    run_all_tests()
