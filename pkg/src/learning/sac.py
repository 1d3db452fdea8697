"""Parking Planner — Soft Actor-Critic Agent.

Tanh-squashed Gaussian actor, twin Q critics with Polyak-averaged targets
and an automatically tuned entropy temperature, all on the numpy MLPs of
:mod:`src.learning.mlp`.

Actions are normalized to [-1, 1]² inside the networks and scaled by
(max_speed, max_steer) on the way out. The log-density of a returned
action includes both the tanh correction and the scaling Jacobian.

Usage:
    agent = SacAgent(config)
    action, log_prob = agent.policy_sample(obs)
    report = agent.update(agent.buffer.sample(config.sac.batch_size))
"""

from __future__ import annotations

import io
import json
import math
import zipfile
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Optional

import numpy as np

from src.config import AppConfig
from src.learning.encoder import ObservationEncoder, make_encoder
from src.learning.mlp import Adam, Mlp
from src.learning.replay import Batch, ReplayBuffer, Transition
from src.sim.kinematics import Action
from src.utils.errors import CheckpointError, TrainingDivergedError
from src.utils.logger import get_logger

logger = get_logger(__name__)

# ── Constants ─────────────────────────────────────────────
CHECKPOINT_FORMAT_VERSION = 1
ACTION_DIM = 2
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
# tanh(15) < 1 in float64, keeping scaled actions strictly inside the bounds
_PRE_TANH_LIMIT = 15.0
_NETWORKS = ("actor", "q1", "q2", "q1_target", "q2_target")


@dataclass(frozen=True)
class LossReport:
    """Scalar diagnostics of one update."""

    critic_loss: float
    actor_loss: float
    alpha_loss: float
    alpha: float
    mean_q: float
    update: int

    def as_dict(self) -> dict[str, float]:
        return {
            "critic_loss": self.critic_loss,
            "actor_loss": self.actor_loss,
            "alpha_loss": self.alpha_loss,
        }


def _log1m_tanh2(u: np.ndarray) -> np.ndarray:
    """log(1 − tanh²u) without cancellation."""
    return 2.0 * (math.log(2.0) - u - np.logaddexp(0.0, -2.0 * u))


@dataclass(frozen=True, eq=False)
class _PolicyDraw:
    obs: np.ndarray
    cache: Any
    u: np.ndarray
    squashed: np.ndarray
    log_prob: np.ndarray
    eps: np.ndarray
    std: np.ndarray
    std_clipped: np.ndarray
    u_clipped: np.ndarray


class SacAgent:
    """Actor, twin critics, temperature, optimizers and replay buffer.

    Args:
        config: Application configuration (``sac`` and ``vehicle`` sections).
        encoder: Observation encoder; defaults to the beam encoder.
        seed: Overrides ``config.sac.seed``.
    """

    def __init__(
        self, config: AppConfig, encoder: Optional[ObservationEncoder] = None,
        seed: Optional[int] = None,
    ) -> None:
        self.config = config
        self.cfg = config.sac
        self.encoder = encoder or make_encoder("beams", config)
        self.seed = self.cfg.seed if seed is None else seed
        self.rng = np.random.default_rng(self.seed)
        self.scale = np.array([config.vehicle.max_speed, config.vehicle.max_steer])

        n_in, h = self.encoder.output_size, self.cfg.hidden_width
        init_rng = np.random.default_rng([self.seed, 1])
        self.actor = Mlp([n_in, h, h, 2 * ACTION_DIM], init_rng)
        self.q1 = Mlp([n_in + ACTION_DIM, h, h, 1], init_rng)
        self.q2 = Mlp([n_in + ACTION_DIM, h, h, 1], init_rng)
        self.q1_target = self.q1.copy()
        self.q2_target = self.q2.copy()
        self.log_alpha = np.array([math.log(self.cfg.alpha_init)])

        self.actor_opt = Adam(self.actor.params, self.cfg.lr)
        self.q1_opt = Adam(self.q1.params, self.cfg.lr)
        self.q2_opt = Adam(self.q2.params, self.cfg.lr)
        self.alpha_opt = Adam([self.log_alpha], self.cfg.lr)

        self.buffer = ReplayBuffer(
            self.cfg.buffer_capacity, n_in, ACTION_DIM, np.random.default_rng([self.seed, 2]),
        )
        self.updates = 0

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha[0]))

    # ── Policy ───────────────────────────────────────────

    def _draw(self, enc: np.ndarray, eps: Optional[np.ndarray] = None) -> _PolicyDraw:
        out, cache = self.actor.forward(enc)
        mu, raw_log_std = out[:, :ACTION_DIM], out[:, ACTION_DIM:]
        log_std = np.clip(raw_log_std, self.cfg.log_std_min, self.cfg.log_std_max)
        std = np.exp(log_std)
        if eps is None:
            eps = self.rng.standard_normal(mu.shape)
        raw_u = mu + std * eps
        u = np.clip(raw_u, -_PRE_TANH_LIMIT, _PRE_TANH_LIMIT)
        log_prob = np.sum(
            -0.5 * ((u - mu) / std) ** 2 - log_std - _HALF_LOG_2PI - _log1m_tanh2(u) - np.log(self.scale),
            axis=1,
        )
        return _PolicyDraw(
            obs=enc, cache=cache, u=u, squashed=np.tanh(u), log_prob=log_prob, eps=eps, std=std,
            std_clipped=(raw_log_std != log_std), u_clipped=(raw_u != u),
        )

    def _to_action(self, squashed: np.ndarray) -> Action:
        v, d = squashed * self.scale
        return Action(float(v), float(d))

    def policy_sample(self, obs: np.ndarray) -> tuple[Action, float]:
        """Stochastic action and its log-density.

        Raises:
            ValueError: If the observation is malformed or non-finite.
        """
        draw = self._draw(self.encoder.encode(obs)[None, :])
        return self._to_action(draw.squashed[0]), float(draw.log_prob[0])

    def deterministic_action(self, obs: np.ndarray) -> Action:
        """tanh(mean) scaled to the vehicle limits."""
        out = self.actor(self.encoder.encode(obs)[None, :])
        return self._to_action(np.tanh(out[0, :ACTION_DIM]))

    def log_prob(self, obs: np.ndarray, action: Action) -> float:
        """Recompute the policy density at an action returned by :meth:`policy_sample`."""
        out = self.actor(self.encoder.encode(obs)[None, :])[0]
        mu = out[:ACTION_DIM]
        log_std = np.clip(out[ACTION_DIM:], self.cfg.log_std_min, self.cfg.log_std_max)
        squashed = np.clip(action.as_array() / self.scale, -1.0 + 1e-16, 1.0 - 1e-16)
        u = np.arctanh(squashed)
        z = (u - mu) / np.exp(log_std)
        return float(np.sum(
            -0.5 * z ** 2 - log_std - _HALF_LOG_2PI - _log1m_tanh2(u) - np.log(self.scale),
        ))

    def act(self, obs: np.ndarray, deterministic: bool = False) -> Action:
        return self.deterministic_action(obs) if deterministic else self.policy_sample(obs)[0]

    def random_action(self) -> Action:
        """Uniform action over the vehicle limits (warm-up exploration)."""
        return self._to_action(self.rng.uniform(-1.0, 1.0, size=ACTION_DIM))

    # ── Learning ─────────────────────────────────────────

    def _critic_input(self, enc_obs: np.ndarray, squashed: np.ndarray) -> np.ndarray:
        return np.concatenate([enc_obs, squashed], axis=1)

    def critic_target(self, batch: Batch) -> np.ndarray:
        """Entropy-augmented Bellman target of an encoded batch.

        Non-terminal rows get r + γ · (min(Q1', Q2') − α · log π) at a fresh
        next-state action. A terminal row's target is the reward alone: the
        entropy bonus sits inside the bootstrap and is masked with it.
        """
        draw = self._draw(batch.next_obs)
        x = self._critic_input(batch.next_obs, draw.squashed)
        q_next = np.minimum(self.q1_target(x), self.q2_target(x))[:, 0]
        soft = q_next - self.alpha * draw.log_prob
        return batch.reward + self.cfg.gamma * (1.0 - batch.done) * soft

    def store(self, obs: np.ndarray, action: Action, reward: float, next_obs: np.ndarray, done: bool) -> None:
        """Add an executed transition to the replay buffer (observations stored encoded)."""
        self.buffer.add(Transition(
            self.encoder.encode(obs), action.as_array() / self.scale, reward,
            self.encoder.encode(next_obs), done,
        ))

    def _actor_gradients(
        self, enc: np.ndarray, eps: Optional[np.ndarray] = None,
    ) -> tuple[float, list[np.ndarray], _PolicyDraw]:
        """Actor loss mean(alpha · log π − min(Q1, Q2)) and its parameter gradients.

        The critics are held fixed. ``eps`` pins the reparameterization noise.
        """
        n = enc.shape[0]
        alpha = self.alpha
        draw = self._draw(enc, eps)
        xa = self._critic_input(enc, draw.squashed)
        q1, c1 = self.q1.forward(xa)
        q2, c2 = self.q2.forward(xa)
        use_q1 = (q1[:, 0] <= q2[:, 0])[:, None]
        q_min = np.where(use_q1, q1, q2)[:, 0]
        ones = np.ones((n, 1))
        _, g1 = self.q1.backward(c1, ones * use_q1)
        _, g2 = self.q2.backward(c2, ones * ~use_q1)
        dq_da = (g1 + g2)[:, -ACTION_DIM:]

        actor_loss = float(np.mean(alpha * draw.log_prob - q_min))
        tanh_u = draw.squashed
        d_u = (alpha * 2.0 * tanh_u - dq_da * (1.0 - tanh_u ** 2)) / n
        d_u = np.where(draw.u_clipped, 0.0, d_u)
        d_log_std = d_u * draw.std * draw.eps - alpha / n
        d_log_std = np.where(draw.std_clipped, 0.0, d_log_std)
        grads, _ = self.actor.backward(draw.cache, np.concatenate([d_u, d_log_std], axis=1))
        return actor_loss, grads, draw

    def update(self, batch: Batch) -> LossReport:
        """One gradient step on both critics, the actor and the temperature.

        ``batch`` holds encoded observations and normalized actions as
        produced by :meth:`store`, or raw ones via :meth:`encoded_batch`.

        Raises:
            ValueError: If the batch is empty.
            TrainingDivergedError: If any loss or network weight is non-finite.
        """
        n = len(batch)
        if n == 0:
            raise ValueError("update() needs a non-empty batch")

        # Critics
        y = self.critic_target(batch)
        x = self._critic_input(batch.obs, batch.action)
        critic_loss = 0.0
        mean_q = 0.0
        for net, opt in ((self.q1, self.q1_opt), (self.q2, self.q2_opt)):
            q, cache = net.forward(x)
            err = q[:, 0] - y
            critic_loss += 0.5 * float(np.mean(err ** 2))
            mean_q += 0.5 * float(np.mean(q))
            grads, _ = net.backward(cache, (err / n)[:, None])
            opt.step(net.params, grads)

        # Actor
        actor_loss, grads, draw = self._actor_gradients(batch.obs)
        self.actor_opt.step(self.actor.params, grads)

        # Temperature
        entropy_gap = draw.log_prob + self.cfg.target_entropy
        alpha_loss = float(-np.mean(self.log_alpha[0] * entropy_gap))
        self.alpha_opt.step([self.log_alpha], [np.array([-np.mean(entropy_gap)])])

        self.q1_target.soft_update(self.q1, self.cfg.tau)
        self.q2_target.soft_update(self.q2, self.cfg.tau)
        self.updates += 1

        report = LossReport(critic_loss, actor_loss, alpha_loss, self.alpha, mean_q, self.updates)
        finite_losses = all(math.isfinite(v) for v in report.as_dict().values())
        if not finite_losses or not all(net.all_finite() for net in (self.actor, self.q1, self.q2)):
            raise TrainingDivergedError(self.updates, report.as_dict())
        return report

    def encoded_batch(self, batch: Batch) -> Batch:
        """Encode raw observations and normalize raw actions of a batch."""
        return Batch(
            self.encoder.encode(batch.obs), batch.action / self.scale, batch.reward,
            self.encoder.encode(batch.next_obs), batch.done,
        )

    # ── Checkpoints ──────────────────────────────────────

    def save(self, path: Path, extra: Optional[dict[str, np.ndarray]] = None) -> Path:
        """Write a versioned ``.npz`` checkpoint.

        Args:
            path: Destination file (written as given, parents created).
            extra: Additional arrays (trainer state) stored with a ``extra_`` prefix.

        Raises:
            CheckpointError: If the file cannot be written.
        """
        arrays: dict[str, Any] = {
            "format_version": np.array(CHECKPOINT_FORMAT_VERSION),
            "sac_config": np.array(json.dumps(asdict(self.cfg), sort_keys=True)),
            "encoder": np.array(self.encoder.name),
            "rng_state": np.array(json.dumps(self.rng.bit_generator.state)),
            "updates": np.array(self.updates),
            "log_alpha": self.log_alpha.copy(),
        }
        for name in _NETWORKS:
            net: Mlp = getattr(self, name)
            arrays[f"{name}_sizes"] = np.array(net.sizes)
            for i, p in enumerate(net.params):
                arrays[f"{name}_p{i}"] = p
        for name, opt in self._optimizers().items():
            arrays[f"{name}_t"] = np.array(opt.t)
            for i, (m, v) in enumerate(zip(opt.m, opt.v)):
                arrays[f"{name}_m{i}"] = m
                arrays[f"{name}_v{i}"] = v
        arrays.update(self.buffer.state_arrays())
        arrays["buffer_rng_state"] = np.array(json.dumps(self.buffer.rng.bit_generator.state))
        for key, value in (extra or {}).items():
            arrays[f"extra_{key}"] = np.asarray(value)

        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "wb") as f:
                np.savez(f, **arrays)
        except OSError as e:
            raise CheckpointError(f"Cannot write checkpoint {path}: {e}") from e
        logger.info("Checkpoint saved: %s (update %d, %d transitions)", path, self.updates, len(self.buffer))
        return path

    def _optimizers(self) -> dict[str, Adam]:
        return {
            "actor_opt": self.actor_opt, "q1_opt": self.q1_opt,
            "q2_opt": self.q2_opt, "alpha_opt": self.alpha_opt,
        }

    @classmethod
    def load(cls, path: Path, config: AppConfig) -> tuple[SacAgent, dict[str, np.ndarray]]:
        """Restore an agent and the ``extra`` arrays stored with it.

        Raises:
            CheckpointError: If the file is missing, unreadable, of another
                format version or built for different network shapes.
        """
        path = Path(path)
        try:
            with open(path, "rb") as f:
                data = dict(np.load(io.BytesIO(f.read()), allow_pickle=False))
        except (OSError, ValueError, EOFError, zipfile.BadZipFile) as e:
            raise CheckpointError(f"Cannot read checkpoint {path}: {e}") from e

        version = int(data.get("format_version", -1))
        if version != CHECKPOINT_FORMAT_VERSION:
            raise CheckpointError(f"Checkpoint {path} has format version {version}, expected {CHECKPOINT_FORMAT_VERSION}")

        stored_cfg = json.loads(str(data["sac_config"]))
        agent = cls(config, make_encoder(str(data["encoder"]), config), seed=int(stored_cfg["seed"]))
        try:
            for name in _NETWORKS:
                net: Mlp = getattr(agent, name)
                if list(data[f"{name}_sizes"]) != net.sizes:
                    raise CheckpointError(
                        f"Checkpoint {path}: {name} sizes {list(data[f'{name}_sizes'])} != {net.sizes}"
                    )
                net.params = [data[f"{name}_p{i}"].copy() for i in range(len(net.params))]
            for name, opt in agent._optimizers().items():
                opt.t = int(data[f"{name}_t"])
                opt.m = [data[f"{name}_m{i}"].copy() for i in range(len(opt.m))]
                opt.v = [data[f"{name}_v{i}"].copy() for i in range(len(opt.v))]
            agent.log_alpha = data["log_alpha"].copy()
            agent.updates = int(data["updates"])
            agent.rng.bit_generator.state = json.loads(str(data["rng_state"]))
            agent.buffer.load_state_arrays(data)
            agent.buffer.rng.bit_generator.state = json.loads(str(data["buffer_rng_state"]))
        except KeyError as e:
            raise CheckpointError(f"Checkpoint {path} is missing entry {e}") from e

        extra = {k[len("extra_"):]: v for k, v in data.items() if k.startswith("extra_")}
        logger.info("Checkpoint loaded: %s (update %d)", path, agent.updates)
        return agent, extra
