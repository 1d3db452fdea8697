"""Parking Planner — Suite Evaluation Harness.

Evaluates one method on every scenario of a suite manifest, writes one
episode log per scenario under ``<out>/episodes/<method>/`` and appends
the aggregated row to the results CSV. Decision latency and RS share are
logged only, so the written files depend on (checkpoint, suite, seed)
alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from statistics import fmean
from typing import Optional

import numpy as np

from src.bench.metrics import MetricsRow, append_results, compute_metrics
from src.config import AppConfig
from src.hybrid.planner import AStarExecutor, Method, Planner, rollout
from src.learning.sac import SacAgent
from src.learning.trainer import make_planner
from src.sim.env import ParkingEnv
from src.sim.episode import EpisodeRecord, read_episode_log, write_episode_log
from src.sim.scenarios import Scenario, load_scenario, read_manifest
from src.utils.errors import CheckpointError
from src.utils.logger import get_logger

logger = get_logger(__name__)

EPISODES_DIR = "episodes"


@dataclass(frozen=True)
class SuiteResult:
    row: MetricsRow
    records: list[EpisodeRecord]
    log_dir: Path


def load_suite(manifest: Path) -> tuple[str, list[Scenario]]:
    """Scenario class and scenarios of a manifest, sorted by scenario id."""
    scenario_class, paths = read_manifest(manifest)
    scenarios = sorted((load_scenario(p) for p in paths), key=lambda s: s.scenario_id)
    return scenario_class, scenarios


def build_planner(
    method: Method, config: AppConfig, checkpoint: Optional[Path], seed: int,
) -> Planner:
    """Planner for ``method``; learned methods load their policy from ``checkpoint``.

    Raises:
        CheckpointError: If a learned method has no checkpoint or it cannot be read.
    """
    if method is Method.HYBRID_ASTAR:
        return AStarExecutor(config)
    if checkpoint is None:
        raise CheckpointError(f"{method.value} needs a trained checkpoint (--checkpoint)")
    if not Path(checkpoint).exists():
        raise CheckpointError(f"Checkpoint not found: {checkpoint}")
    agent, _ = SacAgent.load(Path(checkpoint), config)
    if config.bench.stochastic_eval:
        agent.rng = np.random.default_rng([seed, 4])
        return make_planner(config, method, lambda obs: agent.policy_sample(obs)[0])
    return make_planner(config, method, lambda obs: agent.act(obs, deterministic=True))


def run_suite(
    method: Method, manifest: Path, config: AppConfig, out_dir: Path,
    checkpoint: Optional[Path] = None, seed: int = 0, results_path: Optional[Path] = None,
) -> SuiteResult:
    """Evaluate ``method`` on a suite and append its row to the results CSV.

    Args:
        method: HYBRID_RL, PURE_SAC or HYBRID_ASTAR.
        manifest: Suite manifest written by ``gen-suite``.
        config: Application configuration.
        out_dir: Root of the episode logs and default results CSV.
        checkpoint: Trained policy (learned methods only).
        seed: Seed for stochastic evaluation.
        results_path: Results CSV; defaults to ``out_dir / bench.results_file``.

    Raises:
        FileNotFoundError: If the manifest or a scenario file is missing.
        CheckpointError: If a learned method lacks a usable checkpoint.
    """
    scenario_class, scenarios = load_suite(manifest)
    planner = build_planner(method, config, checkpoint, seed)
    env = ParkingEnv(config)
    log_dir = Path(out_dir) / EPISODES_DIR / method.value
    logger.info("Evaluating %s on %d %s scenarios", method.value, len(scenarios), scenario_class)

    records = []
    for i, scenario in enumerate(scenarios, start=1):
        env.reset_scenario(scenario)
        record = rollout(env, planner)
        write_episode_log(record, log_dir / f"{scenario.scenario_id}.log")
        records.append(record)
        if i % 10 == 0 or i == len(scenarios):
            logger.info("  %s: %d/%d episodes", method.value, i, len(scenarios))

    row = compute_metrics(method.value, scenario_class, records)
    append_results([row], results_path or Path(out_dir) / config.bench.results_file)
    ran = [r for r in records if r.steps]
    logger.info(
        "📊 %s: PSR %.1f%%, ANGS %.2f, PL %.2f m, AOT %.1f s | RS share %.2f, latency %.2f ms/step",
        method.value, row.psr, row.angs, row.pl, row.aot,
        fmean([r.rs_share for r in ran]) if ran else 0.0,
        fmean([r.latency_ms for r in ran]) if ran else 0.0,
    )
    return SuiteResult(row, records, log_dir)


def metrics_from_logs(log_dir: Path, method: str, scenario_class: str) -> MetricsRow:
    """Recompute a suite row from its persisted episode logs.

    Raises:
        FileNotFoundError: If ``log_dir`` holds no episode logs.
    """
    logs = sorted(Path(log_dir).glob("*.log"))
    if not logs:
        raise FileNotFoundError(f"No episode logs in {log_dir}")
    return compute_metrics(method, scenario_class, [read_episode_log(p) for p in logs])
