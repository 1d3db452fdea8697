"""Parking Planner — Foundation Test Script.

Verifies the project foundation:
  1. Configuration loading and validation
  2. Override files (flat and sectioned) and env-var resolution
  3. Error hierarchy
  4. Logger level control

Run: python scripts/test_foundation.py
"""

from __future__ import annotations

import math
import os
import sys
import tempfile
from pathlib import Path

# Add project root to path
PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from src.utils.logger import get_logger

logger = get_logger(__name__)

# ── Test counters ─────────────────────────────────────────
_passed = 0
_failed = 0


def check(label: str, condition: bool) -> None:
    """Assert a test condition and track pass/fail counts.

    Args:
        label: Human-readable description of the test.
        condition: Whether the test passed.
    """
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


def test_config() -> None:
    """Test configuration loading and validation."""
    logger.info("═══ Test 1: Configuration System ═══")

    from src.config import load_config

    config = load_config()

    check("AppConfig loaded", config is not None)
    check("Wheelbase 2.5 m", config.vehicle.wheelbase == 2.5)
    check(
        "min_turn_radius = wheelbase / tan(max_steer)",
        abs(config.vehicle.min_turn_radius - 2.5 / math.tan(0.6)) < 1e-12,
    )
    check("Vehicle length 4.1 m", abs(config.vehicle.length - 4.1) < 1e-12)
    check("OGM band [-1.2, 0.8]", (config.ogm.z_min, config.ogm.z_max) == (-1.2, 0.8))
    check("hit_threshold=2", config.ogm.hit_threshold == 2)
    check("safety_margin=0.1", config.collision.safety_margin == 0.1)
    check("dt=0.1", config.sim.dt == 0.1)
    check("Observation size = beams + 6", config.sim.observation_size == config.sim.n_beams + 6)
    check("ang_tol in radians", abs(config.sim.ang_tol - math.radians(10.0)) < 1e-12)
    check("Odd steering bins", config.mask.steering_bins % 2 == 1)
    check("SAC gamma=0.99", config.sac.gamma == 0.99)
    check("Training difficulty upper-cased", config.training.train_difficulty == "SIM_NORMAL")
    check("A* yaw resolution 5°", abs(config.astar.yaw_resolution - math.radians(5.0)) < 1e-12)
    check("Bench counts 20 + 50", (config.bench.parallel_count, config.bench.perpendicular_count) == (20, 50))
    check("Results file name", config.bench.results_file == "results.csv")
    check("Log level set", config.log_level == "INFO")


def test_overrides() -> None:
    """Test flat and sectioned override files."""
    logger.info("═══ Test 2: Override Files ═══")

    from src.config import load_config

    with tempfile.TemporaryDirectory() as tmp:
        flat = Path(tmp) / "flat.yaml"
        flat.write_text("max_steps: 800\nsafety_margin: 0.15\n", encoding="utf-8")
        config = load_config(override_path=flat)
        check("Flat override max_steps=800", config.sim.max_steps == 800)
        check("Flat override safety_margin=0.15", config.collision.safety_margin == 0.15)
        check("Untouched key keeps default", config.sim.dt == 0.1)

        sectioned = Path(tmp) / "sectioned.yaml"
        sectioned.write_text("sac:\n  hidden_width: 16\n  batch_size: 8\n", encoding="utf-8")
        config = load_config(override_path=sectioned)
        check("Sectioned override hidden_width=16", config.sac.hidden_width == 16)
        check("Sectioned override batch_size=8", config.sac.batch_size == 8)

        unknown = Path(tmp) / "unknown.yaml"
        unknown.write_text("warp_drive: true\n", encoding="utf-8")
        check("Unknown flat key rejected", _raises(ValueError, load_config, override_path=unknown))

        unknown_sub = Path(tmp) / "unknown_sub.yaml"
        unknown_sub.write_text("sac:\n  momentum: 0.9\n", encoding="utf-8")
        check("Unknown sectioned key rejected", _raises(ValueError, load_config, override_path=unknown_sub))

        bad_steer = Path(tmp) / "bad_steer.yaml"
        bad_steer.write_text("max_steer: 2.0\n", encoding="utf-8")
        check("max_steer ≥ π/2 rejected", _raises(ValueError, load_config, override_path=bad_steer))

        even_bins = Path(tmp) / "even_bins.yaml"
        even_bins.write_text("steering_bins: 20\n", encoding="utf-8")
        check("Even steering bins rejected", _raises(ValueError, load_config, override_path=even_bins))

        bad_band = Path(tmp) / "bad_band.yaml"
        bad_band.write_text("z_min: 1.0\nz_max: 0.5\n", encoding="utf-8")
        check("z_min ≥ z_max rejected", _raises(ValueError, load_config, override_path=bad_band))

        check(
            "Missing override file raises FileNotFoundError",
            _raises(FileNotFoundError, load_config, override_path=Path(tmp) / "missing.yaml"),
        )

    os.environ["PARKING_OUT_DIR"] = "runs_from_env"
    try:
        config = load_config()
        check("out_dir resolved from env var", config.bench.out_dir == "runs_from_env")
    finally:
        del os.environ["PARKING_OUT_DIR"]
    check("out_dir falls back to default", load_config().bench.out_dir == "runs")


def test_errors() -> None:
    """Test the error hierarchy."""
    logger.info("═══ Test 3: Error Hierarchy ═══")

    from src.utils.errors import (
        ActionBoundsError, CheckpointError, EpisodeStateError, GridFileError,
        InvalidGeometryError, ParkingError, PathSpacingError, ScenarioError,
        TrainingDivergedError,
    )

    check("InvalidGeometryError is a ValueError", issubclass(InvalidGeometryError, ValueError))
    check("EpisodeStateError is a RuntimeError", issubclass(EpisodeStateError, RuntimeError))
    for exc in (ActionBoundsError, CheckpointError, GridFileError, ScenarioError, TrainingDivergedError):
        check(f"{exc.__name__} derives from ParkingError", issubclass(exc, ParkingError))

    err = PathSpacingError(3, 0.25, 0.1)
    check("PathSpacingError keeps index", err.index == 3 and "index 3" in str(err))
    grid_err = GridFileError("map.pgm", "size mismatch")
    check("GridFileError names the file", "map.pgm" in str(grid_err) and grid_err.reason == "size mismatch")
    diverged = TrainingDivergedError(12, {"critic_loss": float("nan")})
    check("TrainingDivergedError keeps losses", math.isnan(diverged.losses["critic_loss"]))


def test_logger() -> None:
    """Test logger level control."""
    logger.info("═══ Test 4: Logger ═══")

    from src.utils.logger import set_level

    named = get_logger("src.example")
    check("Named logger", named.name == "src.example")
    set_level("debug")
    set_level("INFO")
    check("Known levels accepted", True)
    check("Unknown level rejected", _raises(ValueError, set_level, "CHATTY"))


def run_all_tests() -> None:
    """Run all foundation tests."""
    logger.info("╔══════════════════════════════════════════╗")
    logger.info("║  Parking Planner — Foundation Tests      ║")
    logger.info("╚══════════════════════════════════════════╝")

    test_config()
    test_overrides()
    test_errors()
    test_logger()

    logger.info("═══════════════════════════════════════════")
    logger.info("  Results: %d passed, %d failed", _passed, _failed)
    logger.info("═══════════════════════════════════════════")

    if _failed > 0:
        logger.error("Some tests failed!")
        sys.exit(1)
    else:
        logger.info("🎉 All foundation tests passed!")


if __name__ == "__main__":
    run_all_tests()
