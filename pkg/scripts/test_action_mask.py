"""Parking Planner — Action Mask Test Script.

Verifies the speed mask:
  1. Open space and the distance-field shortcut
  2. Wall ahead against a closed-form stopping distance
  3. Boxed-in vehicle and action projection
  4. Random masked driving never collides at any difficulty
  5. More obstacles never raise a speed limit

Run: python scripts/test_action_mask.py
"""

from __future__ import annotations

import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

# Add project root to path
PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from src.config import load_config
from src.geometry.se2 import Pose2D, points_in_rectangle
from src.hybrid.action_mask import apply, compute_mask, speed_ladder
from src.mapping.grid import OccupancyGrid
from src.planning.collision import path_collides
from src.sim.env import Outcome, ParkingEnv
from src.sim.kinematics import Action, VehicleState, sweep
from src.sim.scenarios import Difficulty, ScenarioKind, generate_scenario
from src.utils.logger import get_logger

logger = get_logger(__name__)

# ── Test counters ─────────────────────────────────────────
_passed = 0
_failed = 0

CONFIG = load_config()
VEHICLE = CONFIG.vehicle
HORIZON = CONFIG.mask.horizon_steps * CONFIG.sim.dt
RUNG = VEHICLE.max_speed / CONFIG.mask.speed_levels


def check(label: str, condition: bool) -> None:
    """Assert a test condition and track pass/fail counts."""
    global _passed, _failed
    if condition:
        _passed += 1
        logger.info("  ✅ %s", label)
    else:
        _failed += 1
        logger.error("  ❌ FAILED: %s", label)


def _mask_at(grid: OccupancyGrid, pose: Pose2D):
    return compute_mask(
        grid, VehicleState(pose), VEHICLE, CONFIG.mask.horizon_steps,
        CONFIG.mask, CONFIG.sim.dt, CONFIG.collision,
    )


def _rollout_clear(grid: OccupancyGrid, pose: Pose2D, velocity: float, steering: float) -> bool:
    poses = sweep(pose, velocity, steering, VEHICLE.wheelbase, HORIZON, CONFIG.collision.sample_step)
    return not path_collides(grid, poses[1:], VEHICLE, CONFIG.collision)


def _cell_centers(grid: OccupancyGrid) -> tuple[np.ndarray, np.ndarray]:
    xs = grid.origin.x + (np.arange(grid.width) + 0.5) * grid.resolution
    ys = grid.origin.y + (np.arange(grid.height) + 0.5) * grid.resolution
    return np.meshgrid(xs, ys)


def test_open_space() -> None:
    logger.info("═══ Test 1: Open Space ═══")
    origin = Pose2D(0.0, 0.0, 0.3)
    empty = OccupancyGrid.filled(200, 200, 0.1, Pose2D(-10.0, -10.0, 0.0))
    mask = _mask_at(empty, origin)
    check("Every bin open at max_speed both ways",
          bool(np.all(mask.v_max_forward == VEHICLE.max_speed) and np.all(mask.v_max_reverse == VEHICLE.max_speed)))
    check("Bins span ±max_steer with an odd count",
          mask.steering_bins.size == CONFIG.mask.steering_bins
          and abs(mask.steering_bins[0] + VEHICLE.max_steer) < 1e-12
          and mask.steering_bins[CONFIG.mask.steering_bins // 2] == 0.0)

    # post 3.2 m left of the footprint center: inside the shortcut radius, out of reach
    cx = VEHICLE.center_offset * math.cos(origin.theta)
    cy = VEHICLE.center_offset * math.sin(origin.theta)
    px, py = cx - 3.2 * math.sin(origin.theta), cy + 3.2 * math.cos(origin.theta)
    xs, ys = _cell_centers(empty)
    far = empty.with_obstacles(np.hypot(xs - px, ys - py) < 0.15)
    searched = _mask_at(far, origin)
    check("Exhaustive search agrees with the clearance shortcut",
          np.array_equal(searched.v_max_forward, mask.v_max_forward)
          and np.array_equal(searched.v_max_reverse, mask.v_max_reverse))
    check("Ladder = max_speed/L … max_speed", speed_ladder(VEHICLE, CONFIG.mask)[0] == RUNG)


def test_wall_ahead() -> None:
    logger.info("═══ Test 2: Wall Ahead ═══")
    grid = OccupancyGrid.filled(200, 200, 0.1, Pose2D(-10.0, -10.0, 0.0))
    xs, ys = _cell_centers(grid)
    wall_x = 4.15
    grid = grid.with_obstacles((xs >= wall_x - 1e-9) & (xs <= 5.0) & (np.abs(ys) <= 5.0))
    pose = Pose2D(0.0, 0.0, 0.0)
    mask = _mask_at(grid, pose)

    front = VEHICLE.wheelbase + VEHICLE.front_overhang + CONFIG.collision.safety_margin
    oracle = (wall_x - front) / HORIZON
    straight = mask.nearest_bin(0.0)
    v = float(mask.v_max_forward[straight])
    check(f"Straight forward limit {v:.3f} within one rung of {oracle:.3f}", oracle - RUNG <= v <= oracle)
    check("Reverse unaffected by the wall", mask.v_max_reverse[straight] == VEHICLE.max_speed)

    maximal = True
    for k, steer in enumerate(mask.steering_bins):
        for direction, limits in ((1.0, mask.v_max_forward), (-1.0, mask.v_max_reverse)):
            limit = float(limits[k])
            if limit > 0.0:
                maximal &= _rollout_clear(grid, pose, direction * limit, float(steer))
            if limit < VEHICLE.max_speed:
                maximal &= not _rollout_clear(grid, pose, direction * (limit + RUNG), float(steer))
    check("Each limit is the largest clear ladder speed", maximal)

    clipped = apply(mask, Action(2.0, 0.01))
    check("Projection clips speed to the nearest bin", clipped == Action(v, 0.01))
    check("Projection keeps admissible speeds", apply(mask, Action(-1.0, 0.0)) == Action(-1.0, 0.0))


def test_boxed_in() -> None:
    logger.info("═══ Test 3: Boxed-In Vehicle ═══")
    grid = OccupancyGrid.filled(200, 200, 0.1, Pose2D(-5.0, -5.0, 0.0))
    xs, ys = _cell_centers(grid)
    pose = Pose2D(0.0, 0.0, 0.0)
    pts = np.column_stack([xs.ravel(), ys.ravel()])
    hug = points_in_rectangle(pts, pose, VEHICLE.footprint_bounds(CONFIG.collision.safety_margin))
    boxed = grid.with_obstacles(~hug.reshape(grid.cells.shape))

    mask = _mask_at(boxed, pose)
    check("All bins closed", not mask.is_open())
    check("Projection stops the vehicle", apply(mask, Action(1.7, -0.4)).velocity == 0.0)


def test_masked_random_driving() -> None:
    logger.info("═══ Test 4: Masked Random Driving ═══")
    config = replace(CONFIG, sim=replace(CONFIG.sim, max_steps=30))
    env = ParkingEnv(config)
    rng = np.random.default_rng(404)
    idempotent = True
    for difficulty in Difficulty:
        collisions = episodes = steps = 0
        for kind in (ScenarioKind.PERPENDICULAR, ScenarioKind.PARALLEL):
            for seed in (3, 4):
                env.reset_scenario(generate_scenario(kind, difficulty, seed, config))
                while not env.done:
                    raw = Action(
                        float(rng.uniform(-VEHICLE.max_speed, VEHICLE.max_speed)),
                        float(rng.uniform(-VEHICLE.max_steer, VEHICLE.max_steer)),
                    )
                    mask = compute_mask(
                        env.scenario.grid, env.state, VEHICLE, config.mask.horizon_steps,
                        config.mask, config.sim.dt, config.collision,
                    )
                    projected = apply(mask, raw)
                    idempotent &= apply(mask, projected) == projected
                    env.advance(projected)
                    steps += 1
                episodes += 1
                collisions += int(env.outcome is Outcome.COLLISION)
        check(f"{difficulty.value}: {episodes} masked episodes ({steps} steps) without a collision", collisions == 0)
    check("Projecting a projected action changes nothing", idempotent)


def test_more_obstacles_never_raise_limits() -> None:
    logger.info("═══ Test 5: Mask Monotonicity ═══")
    rng = np.random.default_rng(55)
    monotone = True
    tightened = 0
    for difficulty in Difficulty:
        scenario = generate_scenario(ScenarioKind.PERPENDICULAR, difficulty, 8, CONFIG)
        xs, ys = _cell_centers(scenario.grid)
        for _ in range(4):
            start = scenario.start
            pose = Pose2D(start.x + rng.uniform(-0.5, 0.5), start.y + rng.uniform(-0.5, 0.5),
                          start.theta + rng.uniform(-0.2, 0.2))
            near = np.hypot(xs - pose.x, ys - pose.y) < 7.0
            extra = near & (rng.random(xs.shape) < 0.01)
            before = _mask_at(scenario.grid, pose)
            after = _mask_at(scenario.grid.with_obstacles(extra), pose)
            monotone &= bool(np.all(after.v_max_forward <= before.v_max_forward)
                             and np.all(after.v_max_reverse <= before.v_max_reverse))
            tightened += int(np.any(after.v_max_forward < before.v_max_forward)
                             or np.any(after.v_max_reverse < before.v_max_reverse))
    check("Adding obstacles never raises a speed limit", monotone)
    check(f"Added obstacles tightened {tightened} of 12 masks", tightened > 0)


def run_all_tests() -> None:
    logger.info("╔══════════════════════════════════════════╗")
    logger.info("║  Parking Planner — Action Mask Tests     ║")
    logger.info("╚══════════════════════════════════════════╝")

    test_open_space()
    test_wall_ahead()
    test_boxed_in()
    test_masked_random_driving()
    test_more_obstacles_never_raise_limits()

    logger.info("═══════════════════════════════════════════")
    logger.info("  Results: %d passed, %d failed", _passed, _failed)
    logger.info("═══════════════════════════════════════════")

    if _failed > 0:
        logger.error("Some tests failed!")
        sys.exit(1)
    else:
        logger.info("🎉 All action mask tests passed!")


if __name__ == "__main__":
    run_all_tests()
