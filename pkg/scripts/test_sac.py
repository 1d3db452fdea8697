"""Parking Planner — SAC Test Script.

Verifies the learning stack:
  1. MLP gradients against finite differences
  2. Replay buffer and observation encoder
  3. Policy sampling, log-densities and action bounds
  4. Critic targets, actor gradients, Polyak averaging and update sanity
  5. Checkpoint round trip
  6. Training monitor

Run: python scripts/test_sac.py
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
from src.learning.encoder import make_encoder
from src.learning.mlp import Mlp, gradient_check
from src.learning.monitor import TrainingMonitor
from src.learning.replay import Batch, ReplayBuffer, Transition
from src.learning.sac import SacAgent
from src.sim.kinematics import check_action
from src.utils.errors import CheckpointError, TrainingDivergedError
from src.utils.logger import get_logger

logger = get_logger(__name__)

# ── Test counters ─────────────────────────────────────────
_passed = 0
_failed = 0

_BASE = load_config()
CONFIG = replace(
    _BASE,
    sim=replace(_BASE.sim, n_beams=8),
    sac=replace(_BASE.sac, hidden_width=16, batch_size=8, buffer_capacity=100),
)
OBS_DIM = CONFIG.sim.observation_size


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


def _random_obs(rng: np.random.Generator) -> np.ndarray:
    beams = rng.uniform(0.0, CONFIG.sim.max_range, size=CONFIG.sim.n_beams)
    heading = rng.uniform(-math.pi, math.pi)
    target = [rng.uniform(-8.0, 8.0), rng.uniform(-8.0, 8.0), math.sin(heading), math.cos(heading)]
    ego = [rng.uniform(-2.0, 2.0), rng.uniform(-0.6, 0.6)]
    return np.concatenate([beams, target, ego])


def _fill(agent: SacAgent, n: int, seed: int, done_every: int = 5) -> None:
    rng = np.random.default_rng(seed)
    for i in range(n):
        agent.store(
            _random_obs(rng), agent.random_action(), float(rng.normal()),
            _random_obs(rng), i % done_every == done_every - 1,
        )


def _actor_gradient_error(agent: SacAgent, seed: int, h: float = 1e-6) -> float:
    """Max relative error of the actor gradient on a 4-transition batch with pinned noise."""
    rng = np.random.default_rng(seed)
    enc = np.stack([agent.encoder.encode(_random_obs(rng)) for _ in range(4)])
    eps = 0.5 * rng.standard_normal((4, 2))
    _, analytic, _ = agent._actor_gradients(enc, eps)

    def loss() -> float:
        draw = agent._draw(enc, eps)
        x = np.concatenate([enc, draw.squashed], axis=1)
        q_min = np.minimum(agent.q1(x), agent.q2(x))[:, 0]
        return float(np.mean(agent.alpha * draw.log_prob - q_min))

    worst = 0.0
    for p, g in zip(agent.actor.params, analytic):
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            up = loss()
            flat[j] = orig - h
            down = loss()
            flat[j] = orig
            numeric = (up - down) / (2.0 * h)
            denom = abs(numeric) + abs(gflat[j])
            if denom < 1e-7:
                continue
            worst = max(worst, abs(numeric - gflat[j]) / denom)
    return worst


def test_gradients() -> None:
    logger.info("═══ Test 1: MLP Gradients ═══")
    for seed in range(5):
        net = Mlp([5, 8, 8, 3], np.random.default_rng(seed))
        err = gradient_check(net, eps=1e-6, seed=seed)
        check(f"Seed {seed}: backprop vs finite differences (rel err {err:.1e})", err < 1e-4)

    wide = Mlp([OBS_DIM + 2, 16, 16, 1], np.random.default_rng(9))
    check("Critic-shaped network passes the check", gradient_check(wide, seed=9) < 1e-4)
    check("Single layer rejected", _raises(ValueError, Mlp, [4]))

    src_net = Mlp([3, 4, 2], np.random.default_rng(1))
    target = src_net.copy()
    check("copy() is independent", target.params[0] is not src_net.params[0]
          and all(np.array_equal(a, b) for a, b in zip(target.params, src_net.params)))


def test_replay_and_encoder() -> None:
    logger.info("═══ Test 2: Replay Buffer & Encoder ═══")
    buffer = ReplayBuffer(3, 2, 1, np.random.default_rng(0))
    check("Sampling an empty buffer raises", _raises(ValueError, buffer.sample, 4))
    for i in range(5):
        buffer.add(Transition(np.full(2, i), np.array([i]), float(i), np.full(2, i + 1), False))
    check("Ring buffer caps at capacity", len(buffer) == 3)
    batch = buffer.sample(64)
    check("Oldest transitions overwritten", set(batch.reward.tolist()) <= {2.0, 3.0, 4.0})
    check("Batch shapes", batch.obs.shape == (64, 2) and batch.action.shape == (64, 1) and len(batch) == 64)

    again = ReplayBuffer(3, 2, 1, np.random.default_rng(0))
    for i in range(5):
        again.add(Transition(np.full(2, i), np.array([i]), float(i), np.full(2, i + 1), False))
    check("Sampling reproducible from the seed", np.array_equal(again.sample(64).reward, batch.reward))
    check("Empty transition list rejected", _raises(ValueError, Batch.from_transitions, []))

    encoder = make_encoder("beams", CONFIG)
    obs = _random_obs(np.random.default_rng(3))
    enc = encoder.encode(obs)
    check("Beams scaled into [0, 1]", bool(np.all((enc[:8] >= 0.0) & (enc[:8] <= 1.0))))
    check("Batch encoding matches single", np.array_equal(encoder.encode(np.stack([obs, obs]))[1], enc))
    check("Wrong length rejected", _raises(ValueError, encoder.encode, obs[:-1]))
    bad = obs.copy()
    bad[0] = np.nan
    check("Non-finite observation rejected", _raises(ValueError, encoder.encode, bad))
    check("Unknown encoder rejected", _raises(ValueError, make_encoder, "lidar3d", CONFIG))


def test_policy() -> None:
    logger.info("═══ Test 3: Policy Sampling ═══")
    agent = SacAgent(CONFIG, seed=4)
    rng = np.random.default_rng(4)

    worst = 0.0
    in_bounds = True
    for _ in range(50):
        obs = _random_obs(rng)
        action, logp = agent.policy_sample(obs)
        worst = max(worst, abs(agent.log_prob(obs, action) - logp))
        in_bounds &= not _raises(ValueError, check_action, action, CONFIG.vehicle)
    check(f"log_prob recomputation within 1e-9 (worst {worst:.1e})", worst < 1e-9)
    check("Sampled actions within vehicle limits", in_bounds)

    saturated = SacAgent(CONFIG, seed=4)
    saturated.actor.params[-1][:2] += 100.0
    action, logp = saturated.policy_sample(_random_obs(rng))
    check("Saturated policy stays strictly inside the limits",
          abs(action.velocity) < CONFIG.vehicle.max_speed and abs(action.steering) < CONFIG.vehicle.max_steer)
    check("Saturated log-density finite", math.isfinite(logp))

    obs = _random_obs(rng)
    check("Deterministic action is repeatable", agent.deterministic_action(obs) == agent.deterministic_action(obs))
    check("act(deterministic=True) uses the mean", agent.act(obs, deterministic=True) == agent.deterministic_action(obs))

    twin_a, twin_b = SacAgent(CONFIG, seed=11), SacAgent(CONFIG, seed=11)
    check("Same seed → same samples", twin_a.policy_sample(obs) == twin_b.policy_sample(obs))


def test_updates() -> None:
    logger.info("═══ Test 4: Critic Targets & Updates ═══")
    agent = SacAgent(CONFIG, seed=5)
    _fill(agent, 40, seed=5)

    batch = agent.buffer.sample(16)
    terminal = Batch(batch.obs, batch.action, batch.reward, batch.next_obs, np.ones(16))
    check("Terminal target == reward alone (no entropy term)",
          np.array_equal(agent.critic_target(terminal), batch.reward))
    check("Non-terminal target bootstraps", not np.array_equal(
        agent.critic_target(Batch(batch.obs, batch.action, batch.reward, batch.next_obs, np.zeros(16))),
        batch.reward,
    ))

    before = [p.copy() for p in agent.q1_target.params]
    report = agent.update(agent.buffer.sample(CONFIG.sac.batch_size))
    tau = CONFIG.sac.tau
    worst = max(
        float(np.max(np.abs(t - (old * (1.0 - tau) + tau * q))))
        for t, old, q in zip(agent.q1_target.params, before, agent.q1.params)
    )
    check(f"Polyak target update within 1e-12 (max dev {worst:.1e})", worst < 1e-12)
    check("Update counter advances", report.update == 1 == agent.updates)
    check("Temperature stays positive", agent.alpha > 0.0)

    worst = _actor_gradient_error(SacAgent(CONFIG, seed=8), seed=8)
    check(f"Actor gradient vs finite differences, fixed noise (rel err {worst:.1e})", worst < 1e-4)

    fast = replace(CONFIG, sac=replace(CONFIG.sac, lr=1e-3))
    learner = SacAgent(fast, seed=6)
    rng = np.random.default_rng(6)
    transitions = [
        Transition(learner.encoder.encode(_random_obs(rng)), rng.uniform(-1.0, 1.0, 2),
                   float(rng.uniform(-1.0, 1.0)), learner.encoder.encode(_random_obs(rng)), True)
        for _ in range(32)
    ]
    fixed = Batch.from_transitions(transitions)
    first = learner.update(fixed).critic_loss
    for _ in range(300):
        last = learner.update(fixed).critic_loss
    check(f"Critic fits fixed terminal targets ({first:.3f} → {last:.3f})", last < 0.5 * first)

    raw = Batch(np.stack([_random_obs(rng) for _ in range(4)]), np.zeros((4, 2)), np.zeros(4),
                np.stack([_random_obs(rng) for _ in range(4)]), np.zeros(4))
    check("encoded_batch normalizes observations", np.all(agent.encoded_batch(raw).obs[:, :8] <= 1.0))

    broken = Batch(batch.obs, batch.action, np.full(16, np.nan), batch.next_obs, batch.done)
    check("Non-finite loss raises TrainingDivergedError",
          _raises(TrainingDivergedError, SacAgent(CONFIG, seed=7).update, broken))


def test_checkpoints() -> None:
    logger.info("═══ Test 5: Checkpoints ═══")
    agent = SacAgent(CONFIG, seed=8)
    _fill(agent, 30, seed=8)
    for _ in range(3):
        agent.update(agent.buffer.sample(CONFIG.sac.batch_size))

    with tempfile.TemporaryDirectory() as tmp:
        path = agent.save(Path(tmp) / "ckpt" / "agent.npz", extra={"env_steps": np.array(123)})
        loaded, extra = SacAgent.load(path, CONFIG)
        check("Extra trainer state restored", int(extra["env_steps"]) == 123)
        check("Network weights restored", all(
            np.array_equal(a, b) for name in ("actor", "q1", "q2", "q1_target", "q2_target")
            for a, b in zip(getattr(agent, name).params, getattr(loaded, name).params)
        ))
        check("Temperature and counters restored", loaded.alpha == agent.alpha and loaded.updates == 3)
        check("Replay buffer restored", len(loaded.buffer) == len(agent.buffer) == 30)

        a = agent.update(agent.buffer.sample(CONFIG.sac.batch_size))
        b = loaded.update(loaded.buffer.sample(CONFIG.sac.batch_size))
        check("Resumed agent continues bit-identically", a == b)
        obs = _random_obs(np.random.default_rng(1))
        check("Random streams restored", agent.policy_sample(obs) == loaded.policy_sample(obs))

        wider = replace(CONFIG, sac=replace(CONFIG.sac, hidden_width=32))
        check("Shape mismatch → CheckpointError", _raises(CheckpointError, SacAgent.load, path, wider))
        check("Missing file → CheckpointError", _raises(CheckpointError, SacAgent.load, Path(tmp) / "nope.npz", CONFIG))
        garbage = Path(tmp) / "garbage.npz"
        garbage.write_text("not a checkpoint", encoding="utf-8")
        check("Corrupt file → CheckpointError", _raises(CheckpointError, SacAgent.load, garbage, CONFIG))


def test_monitor() -> None:
    logger.info("═══ Test 6: Training Monitor ═══")
    monitor = TrainingMonitor(interval=2, max_history=3)
    check("Empty monitor", monitor.get_status()["episodes"] == 0 and math.isnan(monitor.get_status()["recent_mean_return"]))
    monitor.record_episode(step=10, episode_return=1.0, outcome="SUCCESS", gear_shifts=1, rs_steps=3, rl_steps=1)
    monitor.record_episode(step=20, episode_return=-1.0, outcome="COLLISION", gear_shifts=3)
    status = monitor.get_status()
    check("Success rate 50%", status["recent_success_rate"] == 50.0)
    check("Mean return 0", status["recent_mean_return"] == 0.0)
    check("RS share over recent steps", status["recent_rs_share"] == 0.75)
    for step in range(3):
        monitor.record_episode(step=30 + step, episode_return=0.0, outcome="TIMEOUT", gear_shifts=0)
    check("History bounded, totals kept", monitor.get_status()["recent_success_rate"] == 0.0
          and monitor.total_episodes == 5 and monitor.total_successes == 1)
    monitor.record_fault(7, {"critic_loss": float("nan")})
    check("Faults counted", monitor.get_status()["faults"] == 1)


def run_all_tests() -> None:
    logger.info("╔══════════════════════════════════════════╗")
    logger.info("║  Parking Planner — SAC Tests             ║")
    logger.info("╚══════════════════════════════════════════╝")

    test_gradients()
    test_replay_and_encoder()
    test_policy()
    test_updates()
    test_checkpoints()
    test_monitor()

    logger.info("═══════════════════════════════════════════")
    logger.info("  Results: %d passed, %d failed", _passed, _failed)
    logger.info("═══════════════════════════════════════════")

    if _failed > 0:
        logger.error("Some tests failed!")
        sys.exit(1)
    else:
        logger.info("🎉 All SAC tests passed!")


if __name__ == "__main__":
    run_all_tests()
