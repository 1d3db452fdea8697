"""Parking Planner — Training Loop.

Runs seeded training episodes on a pre-generated scenario pool, through
the hybrid planner (HYBRID_RL) or the bare policy (PURE_SAC). Every
executed transition goes into the replay buffer; after warm-up the agent
is updated every ``update_every`` environment steps.

Evaluation and checkpoints happen at episode boundaries, so a resumed run
continues exactly where the checkpoint was taken.

Outputs under ``out_dir``:
    learning_curve.csv      step,episode_return,eval_psr (one row per episode)
    checkpoints/step_*.npz  periodic checkpoints
    final.npz               checkpoint at the end of the budget
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from src.config import AppConfig
from src.hybrid.planner import (
    HybridPlanner, Method, PlannerDecision, PolicyPlanner, rollout,
)
from src.learning.monitor import TrainingMonitor
from src.learning.sac import SacAgent
from src.sim.env import Outcome, ParkingEnv, StepResult
from src.sim.kinematics import Action
from src.sim.scenarios import Difficulty, Scenario, generate_suite, suite_plan
from src.utils.errors import CheckpointError, TrainingDivergedError
from src.utils.logger import get_logger

logger = get_logger(__name__)

# ── Constants ─────────────────────────────────────────────
CURVE_FILE = "learning_curve.csv"
CURVE_HEADER = ("step", "episode_return", "eval_psr")
FINAL_CHECKPOINT = "final.npz"
# Suite base seeds for the training and evaluation pools; user suites use small bases.
TRAIN_POOL_BASE = 90000
EVAL_POOL_BASE = 80000

EnvFactory = Callable[[AppConfig], ParkingEnv]


@dataclass
class TrainResult:
    agent: SacAgent
    curve: list[tuple[int, float, float]]
    checkpoint: Path
    updates: int


@dataclass
class _LoopState:
    step: int = 0
    episode: int = 0
    eval_psr: float = math.nan
    next_eval: int = 0
    next_checkpoint: int = 0
    curve: list[tuple[int, float, float]] = field(default_factory=list)


def scenario_pools(config: AppConfig, seed: int) -> tuple[list[Scenario], list[Scenario]]:
    """Training and evaluation pools (mixed kinds, disjoint seeds)."""
    difficulty = Difficulty.parse(config.training.train_difficulty)
    train = generate_suite(
        suite_plan("mixed", config.training.train_pool_size), difficulty,
        TRAIN_POOL_BASE + seed, config,
    )
    evaluation = generate_suite(
        suite_plan("mixed", config.training.eval_pool_size), difficulty,
        EVAL_POOL_BASE + seed, config,
    ) if config.training.eval_pool_size else []
    return train, evaluation


def make_planner(config: AppConfig, mode: Method, policy: Callable[[np.ndarray], Action]) -> PolicyPlanner:
    """Planner used for a learned method (HYBRID_RL or PURE_SAC)."""
    if mode is Method.HYBRID_RL:
        return HybridPlanner(config, policy)
    if mode is Method.PURE_SAC:
        return PolicyPlanner(config, policy, use_mask=config.training.pure_sac_use_mask)
    raise ValueError(f"{mode.value} is not a learned method")


def evaluate_psr(
    agent: SacAgent, mode: Method, scenarios: list[Scenario], config: AppConfig,
    env_factory: EnvFactory = ParkingEnv,
) -> float:
    """Success rate (percent) of the deterministic policy on ``scenarios``."""
    if not scenarios:
        return math.nan
    env = env_factory(config)
    planner = make_planner(config, mode, lambda obs: agent.act(obs, deterministic=True))
    successes = 0
    for scenario in scenarios:
        env.reset_scenario(scenario)
        successes += int(rollout(env, planner).success)
    return 100.0 * successes / len(scenarios)


def write_curve(curve: list[tuple[int, float, float]], path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CURVE_HEADER)
        for step, ret, psr in curve:
            writer.writerow([step, repr(float(ret)), repr(float(psr))])
    return path


# ═══════════════════════════════════════════════════════════
# Checkpoint state
# ═══════════════════════════════════════════════════════════


def _extra_state(state: _LoopState, mode: Method, seed: int, selector: np.random.Generator) -> dict[str, np.ndarray]:
    return {
        "mode": np.array(mode.value),
        "seed": np.array(seed),
        "step": np.array(state.step),
        "episode": np.array(state.episode),
        "eval_psr": np.array(state.eval_psr),
        "next_eval": np.array(state.next_eval),
        "next_checkpoint": np.array(state.next_checkpoint),
        "selector_rng": np.array(json.dumps(selector.bit_generator.state)),
        "curve": np.array(state.curve, dtype=np.float64).reshape(-1, 3),
    }


def _restore_state(
    extra: dict[str, np.ndarray], mode: Method, seed: int, selector: np.random.Generator,
) -> _LoopState:
    try:
        if str(extra["mode"]) != mode.value or int(extra["seed"]) != seed:
            raise CheckpointError(
                f"Checkpoint was trained as {extra['mode']} with seed {int(extra['seed'])}, "
                f"not {mode.value} with seed {seed}"
            )
        selector.bit_generator.state = json.loads(str(extra["selector_rng"]))
        return _LoopState(
            step=int(extra["step"]),
            episode=int(extra["episode"]),
            eval_psr=float(extra["eval_psr"]),
            next_eval=int(extra["next_eval"]),
            next_checkpoint=int(extra["next_checkpoint"]),
            curve=[(int(s), float(r), float(p)) for s, r, p in extra["curve"]],
        )
    except KeyError as e:
        raise CheckpointError(f"Checkpoint lacks trainer state {e}") from e


# ═══════════════════════════════════════════════════════════
# Training
# ═══════════════════════════════════════════════════════════


def train(
    config: AppConfig, mode: Method, budget_steps: int, out_dir: Path,
    env_factory: EnvFactory = ParkingEnv, resume: Optional[Path] = None,
    seed: Optional[int] = None,
) -> TrainResult:
    """Train a SAC policy for ``budget_steps`` environment steps.

    Args:
        config: Application configuration.
        mode: HYBRID_RL (RS first, masked policy otherwise) or PURE_SAC.
        budget_steps: Total environment steps (including resumed ones).
        out_dir: Directory for the curve CSV and checkpoints.
        env_factory: Builds the environment from the config.
        resume: Checkpoint to continue from.
        seed: Run seed; defaults to ``config.sac.seed``.

    Raises:
        CheckpointError: If ``resume`` cannot be loaded or belongs to another run.
        TrainingDivergedError: If an update produces a non-finite loss.
    """
    seed = config.sac.seed if seed is None else seed
    tcfg = config.training
    out_dir = Path(out_dir)
    selector = np.random.default_rng([seed, 3])

    if resume is not None:
        agent, extra = SacAgent.load(resume, config)
        state = _restore_state(extra, mode, seed, selector)
        logger.info("Resuming %s training at step %d (episode %d)", mode.value, state.step, state.episode)
    else:
        agent = SacAgent(config, seed=seed)
        state = _LoopState(next_eval=tcfg.eval_interval, next_checkpoint=tcfg.checkpoint_interval)

    train_pool, eval_pool = scenario_pools(config, seed)
    env = env_factory(config)
    monitor = TrainingMonitor(interval=tcfg.monitor_interval)

    def policy(obs: np.ndarray) -> Action:
        if state.step < tcfg.warmup_steps:
            return agent.random_action()
        return agent.policy_sample(obs)[0]

    def on_step(obs: np.ndarray, decision: PlannerDecision, result: StepResult) -> None:
        terminal = result.outcome in (Outcome.SUCCESS, Outcome.COLLISION)
        agent.store(obs, decision.action, result.reward, result.observation.as_vector(), terminal)
        state.step += 1
        if (
            state.step >= tcfg.warmup_steps
            and state.step % tcfg.update_every == 0
            and len(agent.buffer) >= config.sac.batch_size
        ):
            try:
                report = agent.update(agent.buffer.sample(config.sac.batch_size))
            except TrainingDivergedError as e:
                monitor.record_fault(e.step, e.losses)
                raise
            monitor.record_losses(report.as_dict())

    planner = make_planner(config, mode, policy)
    logger.info(
        "Training %s for %d steps (pool %d, eval %d, warmup %d)",
        mode.value, budget_steps, len(train_pool), len(eval_pool), tcfg.warmup_steps,
    )

    while state.step < budget_steps:
        scenario = train_pool[int(selector.integers(len(train_pool)))]
        env.reset_scenario(scenario)
        record = rollout(env, planner, max_steps=budget_steps - state.step, on_step=on_step)
        state.episode += 1
        monitor.record_episode(
            state.step, record.episode_return, record.outcome, record.gear_shifts,
            record.rs_steps, record.rl_steps,
        )

        if state.step >= state.next_eval:
            state.eval_psr = evaluate_psr(agent, mode, eval_pool, config, env_factory)
            state.next_eval += tcfg.eval_interval * max(1, (state.step - state.next_eval) // tcfg.eval_interval + 1)
            logger.info("Step %d: eval PSR %.1f%%", state.step, state.eval_psr)
        state.curve.append((state.step, record.episode_return, state.eval_psr))

        if state.step >= state.next_checkpoint:
            state.next_checkpoint += tcfg.checkpoint_interval * max(
                1, (state.step - state.next_checkpoint) // tcfg.checkpoint_interval + 1,
            )
            agent.save(
                out_dir / "checkpoints" / f"step_{state.step:07d}.npz",
                _extra_state(state, mode, seed, selector),
            )

    write_curve(state.curve, out_dir / CURVE_FILE)
    final = agent.save(out_dir / FINAL_CHECKPOINT, _extra_state(state, mode, seed, selector))
    logger.info(
        "✅ Training done: %d steps, %d episodes, %d updates, last eval PSR %s",
        state.step, state.episode, agent.updates, state.eval_psr,
    )
    return TrainResult(agent, state.curve, final, agent.updates)
