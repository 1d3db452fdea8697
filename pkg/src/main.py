"""Parking Planner — Command-Line Interface.

Subcommands:
  build-map   point-cloud recording → global (or keyframe-local) OGM files
  gen-suite   seeded scenario suite + manifest
  train       train a SAC policy (hybrid or pure), with curve CSV and checkpoints
  eval        evaluate one method on a suite, appending to the results CSV
  bench       evaluate all three methods, write results CSV and markdown tables
  render      run one scenario and write the final BEV frame as PNG

Exit codes: 0 success, 2 bad arguments, 1 runtime failure.

Usage:
    python -m src.main gen-suite --kind perpendicular --n 50 --difficulty normal --seed 1
    python scripts/run.py bench --suite runs/suite/manifest.txt \\
        --hybrid-checkpoint runs/train_hybrid/final.npz --sac-checkpoint runs/train_sac/final.npz
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import TYPE_CHECKING, Optional, Sequence

from src.config import AppConfig, load_config
from src.utils.errors import ParkingError
from src.utils.logger import get_logger, set_level

if TYPE_CHECKING:
    from src.hybrid.planner import Method

logger = get_logger(__name__)

# ── Constants ─────────────────────────────────────────────
EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
MANIFEST_FILE = "manifest.txt"
GLOBAL_MAP_FILE = "global_ogm.pgm"
RESULTS_TABLE_FILE = "results.md"
PER_SCENARIO_FILE = "per_scenario.md"


class _UsageError(Exception):
    """Bad arguments detected after parsing."""


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting, so cli() owns the exit code."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="run seed")
    common.add_argument("--config", type=Path, default=None, help="flat or sectioned key: value override file")
    common.add_argument("--out", type=Path, default=None, help="output directory")

    parser = _Parser(prog="parking-planner", description="Desk-scale autonomous parking planning stack")
    sub = parser.add_subparsers(dest="command", metavar="<command>", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("build-map", parents=[common], help="build OGM files from a recording")
    p.add_argument("recording", type=Path, help="directory with frames/ and trajectory.txt")
    p.add_argument("--keyframe", type=int, default=None, help="write the keyframe-local map instead")

    p = sub.add_parser("gen-suite", parents=[common], help="generate a scenario suite")
    p.add_argument("--kind", choices=["parallel", "perpendicular", "mixed"], required=True)
    p.add_argument("--n", type=int, default=None, help="number of scenarios")
    p.add_argument("--difficulty", default="normal", help="normal, complex or real")
    p.add_argument("--map", type=Path, default=None, help="place scenarios on this grid file")

    p = sub.add_parser("train", parents=[common], help="train a policy")
    p.add_argument("--mode", choices=["hybrid", "pure_sac"], default="hybrid")
    p.add_argument("--steps", type=int, default=None, help="step budget")
    p.add_argument("--resume", type=Path, default=None, help="checkpoint to continue from")

    p = sub.add_parser("eval", parents=[common], help="evaluate one method on a suite")
    p.add_argument("--method", required=True, help="HYBRID_RL, PURE_SAC or HYBRID_ASTAR")
    p.add_argument("--suite", type=Path, required=True, help="suite manifest")
    p.add_argument("--checkpoint", type=Path, default=None)

    p = sub.add_parser("bench", parents=[common], help="evaluate all methods on a suite")
    p.add_argument("--suite", type=Path, required=True, help="suite manifest")
    p.add_argument("--hybrid-checkpoint", type=Path, default=None)
    p.add_argument("--sac-checkpoint", type=Path, default=None)

    p = sub.add_parser("render", parents=[common], help="render one episode to PNG")
    p.add_argument("--scenario", type=Path, required=True, help="scenario file")
    p.add_argument("--method", default="HYBRID_ASTAR")
    p.add_argument("--checkpoint", type=Path, default=None)
    return parser


# ═══════════════════════════════════════════════════════════
# Commands
# ═══════════════════════════════════════════════════════════


def _out_dir(args: argparse.Namespace, config: AppConfig, default: str) -> Path:
    return args.out if args.out is not None else Path(config.bench.out_dir) / default


def cmd_build_map(args: argparse.Namespace, config: AppConfig) -> int:
    from src.mapping.grid_io import save_grid
    from src.mapping.rasterize import rasterize
    from src.mapping.recording import (
        accumulate_global, accumulate_local, filter_heights, global_sensor_origins,
        load_recording, local_sensor_origins,
    )

    recording = load_recording(args.recording / "frames", args.recording / "trajectory.txt")
    frames = [filter_heights(f, config.ogm) for f in recording.frames]
    out = _out_dir(args, config, "map")
    if args.keyframe is None:
        points = accumulate_global(frames, recording.trajectory)
        grid = rasterize(points, global_sensor_origins(recording.trajectory), config.ogm)
        path = save_grid(grid, out / GLOBAL_MAP_FILE)
    else:
        points = accumulate_local(frames, recording.trajectory, args.keyframe, config.ogm)
        origins = local_sensor_origins(recording.trajectory, args.keyframe, config.ogm)
        grid = rasterize(points, origins, config.ogm)
        path = save_grid(grid, out / f"local_ogm_k{args.keyframe:04d}.pgm")
    logger.info("✅ Map written: %s (%dx%d cells)", path, grid.width, grid.height)
    return EXIT_OK


def cmd_gen_suite(args: argparse.Namespace, config: AppConfig) -> int:
    from src.mapping.grid_io import load_grid
    from src.sim.scenarios import (
        Difficulty, generate_suite, save_scenario, suite_plan, write_manifest,
    )

    try:
        difficulty = Difficulty.parse(args.difficulty)
    except ValueError as e:
        raise _UsageError(str(e)) from e
    default_n = {
        "parallel": config.bench.parallel_count,
        "perpendicular": config.bench.perpendicular_count,
        "mixed": config.bench.parallel_count + config.bench.perpendicular_count,
    }[args.kind]
    n = args.n if args.n is not None else default_n
    if n < 1:
        raise _UsageError("--n must be >= 1")
    seed = args.seed if args.seed is not None else 0
    base_grid = load_grid(args.map) if args.map is not None else None

    out = _out_dir(args, config, "suite")
    scenarios = generate_suite(suite_plan(args.kind, n), difficulty, seed, config, base_grid)
    paths = [save_scenario(s, out / "scenarios") for s in scenarios]
    manifest = write_manifest(paths, out / MANIFEST_FILE, f"{args.kind.upper()}_{difficulty.value}")
    logger.info("✅ Suite of %d scenarios written: %s", len(paths), manifest)
    return EXIT_OK


def cmd_train(args: argparse.Namespace, config: AppConfig) -> int:
    from src.hybrid.planner import Method
    from src.learning.trainer import train

    mode = Method.HYBRID_RL if args.mode == "hybrid" else Method.PURE_SAC
    budget = args.steps if args.steps is not None else config.training.budget_steps
    if budget < 0:
        raise _UsageError("--steps must be >= 0")
    out = _out_dir(args, config, f"train_{args.mode}")
    result = train(config, mode, budget, out, resume=args.resume, seed=args.seed)
    logger.info("✅ Policy saved: %s (%d updates)", result.checkpoint, result.updates)
    return EXIT_OK


def _parse_method(label: str) -> Method:
    from src.hybrid.planner import Method as _Method

    try:
        return _Method.parse(label)
    except ValueError as e:
        raise _UsageError(str(e)) from e


def cmd_eval(args: argparse.Namespace, config: AppConfig) -> int:
    from src.bench.harness import run_suite

    method = _parse_method(args.method)
    out = _out_dir(args, config, "eval")
    result = run_suite(method, args.suite, config, out, checkpoint=args.checkpoint, seed=args.seed or 0)
    logger.info("✅ %s PSR %.1f%% over %d episodes", method.value, result.row.psr, result.row.episodes)
    return EXIT_OK


def cmd_bench(args: argparse.Namespace, config: AppConfig) -> int:
    from src.bench.formatters import format_per_scenario, format_results_table, write_report
    from src.bench.harness import run_suite
    from src.hybrid.planner import Method

    out = _out_dir(args, config, "bench")
    results_path = out / config.bench.results_file
    if results_path.exists():
        results_path.unlink()
    checkpoints = {
        Method.HYBRID_RL: args.hybrid_checkpoint,
        Method.PURE_SAC: args.sac_checkpoint,
        Method.HYBRID_ASTAR: None,
    }
    rows, records = [], {}
    for method, checkpoint in checkpoints.items():
        result = run_suite(
            method, args.suite, config, out, checkpoint=checkpoint,
            seed=args.seed or 0, results_path=results_path,
        )
        rows.append(result.row)
        records[method.value] = result.records

    write_report(format_results_table(rows), out / RESULTS_TABLE_FILE)
    write_report(format_per_scenario(records), out / PER_SCENARIO_FILE)
    logger.info("✅ Benchmark written to %s", out)
    return EXIT_OK


def cmd_render(args: argparse.Namespace, config: AppConfig) -> int:
    from src.bench.harness import build_planner
    from src.hybrid.planner import rollout
    from src.sim.env import ParkingEnv
    from src.sim.scenarios import load_scenario

    method = _parse_method(args.method)
    scenario = load_scenario(args.scenario)
    planner = build_planner(method, config, args.checkpoint, args.seed or 0)
    env = ParkingEnv(config)
    env.reset_scenario(scenario)
    record = rollout(env, planner)
    path = env.render_frame(_out_dir(args, config, "render") / f"{scenario.scenario_id}_{method.value}.png")
    logger.info("✅ %s: %s, frame written to %s", scenario.scenario_id, record.outcome, path)
    return EXIT_OK


_COMMANDS = {
    "build-map": cmd_build_map,
    "gen-suite": cmd_gen_suite,
    "train": cmd_train,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "render": cmd_render,
}


# ═══════════════════════════════════════════════════════════
# Entry points
# ═══════════════════════════════════════════════════════════


def cli(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
    except _UsageError as e:
        print(str(e), file=sys.stderr)
        return EXIT_USAGE

    try:
        config = load_config(override_path=args.config)
        set_level(config.log_level)
        return _COMMANDS[args.command](args, config)
    except _UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"parking-planner: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ParkingError, OSError, ValueError) as e:
        logger.error("❌ %s failed: %s", args.command, e)
        return EXIT_RUNTIME


def main() -> None:
    """Application entry point."""
    sys.exit(cli())


if __name__ == "__main__":
    main()
