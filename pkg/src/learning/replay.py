"""Parking Planner — Replay Buffer.

Fixed-capacity ring buffer of transitions backed by preallocated numpy
arrays. Sampling draws uniform indices from the buffer's own generator so
a run is reproducible from (seed, insertion order).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np


@dataclass(frozen=True, eq=False)
class Transition:
    """One environment step as stored for off-policy learning.

    ``action`` is the executed action (after masking), not the raw sample.
    """

    obs: np.ndarray
    action: np.ndarray
    reward: float
    next_obs: np.ndarray
    done: bool


@dataclass(frozen=True, eq=False)
class Batch:
    """Column-stacked transitions."""

    obs: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    next_obs: np.ndarray
    done: np.ndarray

    def __len__(self) -> int:
        return int(self.reward.shape[0])

    @classmethod
    def from_transitions(cls, transitions: list[Transition]) -> Batch:
        if not transitions:
            raise ValueError("Batch needs at least one transition")
        return cls(
            obs=np.stack([t.obs for t in transitions]).astype(np.float64),
            action=np.stack([t.action for t in transitions]).astype(np.float64),
            reward=np.array([t.reward for t in transitions], dtype=np.float64),
            next_obs=np.stack([t.next_obs for t in transitions]).astype(np.float64),
            done=np.array([float(t.done) for t in transitions], dtype=np.float64),
        )


class ReplayBuffer:
    """Uniform-sampling ring buffer.

    Args:
        capacity: Maximum number of transitions kept (oldest overwritten).
        obs_dim: Observation vector length.
        act_dim: Action vector length.
        rng: Generator used by :meth:`sample`.
    """

    def __init__(self, capacity: int, obs_dim: int, act_dim: int, rng: np.random.Generator) -> None:
        if capacity < 1:
            raise ValueError("ReplayBuffer capacity must be >= 1")
        self.capacity = capacity
        self.rng = rng
        self._obs = np.zeros((capacity, obs_dim))
        self._action = np.zeros((capacity, act_dim))
        self._reward = np.zeros(capacity)
        self._next_obs = np.zeros((capacity, obs_dim))
        self._done = np.zeros(capacity)
        self._cursor = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def add(self, transition: Transition) -> None:
        i = self._cursor
        self._obs[i] = transition.obs
        self._action[i] = transition.action
        self._reward[i] = transition.reward
        self._next_obs[i] = transition.next_obs
        self._done[i] = float(transition.done)
        self._cursor = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size: int) -> Batch:
        """Uniform sample with replacement.

        Raises:
            ValueError: If the buffer is empty.
        """
        if self._size == 0:
            raise ValueError("Cannot sample from an empty replay buffer")
        idx = self.rng.integers(0, self._size, size=batch_size)
        return Batch(
            self._obs[idx].copy(), self._action[idx].copy(), self._reward[idx].copy(),
            self._next_obs[idx].copy(), self._done[idx].copy(),
        )

    # ── Checkpoint support ───────────────────────────────

    def state_arrays(self) -> dict[str, Any]:
        n = self._size
        return {
            "buffer_obs": self._obs[:n].copy(),
            "buffer_action": self._action[:n].copy(),
            "buffer_reward": self._reward[:n].copy(),
            "buffer_next_obs": self._next_obs[:n].copy(),
            "buffer_done": self._done[:n].copy(),
            "buffer_cursor": np.array(self._cursor),
        }

    def load_state_arrays(self, arrays: dict[str, Any]) -> None:
        n = int(arrays["buffer_reward"].shape[0])
        if n > self.capacity:
            raise ValueError(f"Stored buffer holds {n} transitions, capacity is {self.capacity}")
        self._obs[:n] = arrays["buffer_obs"]
        self._action[:n] = arrays["buffer_action"]
        self._reward[:n] = arrays["buffer_reward"]
        self._next_obs[:n] = arrays["buffer_next_obs"]
        self._done[:n] = arrays["buffer_done"]
        self._size = n
        self._cursor = int(arrays["buffer_cursor"])
