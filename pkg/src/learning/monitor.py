"""Parking Planner — Training Monitor.

Bounded in-memory history of finished training episodes and loss faults.
Logs a rolling summary every ``interval`` episodes.

Usage:
    monitor = TrainingMonitor(interval=20)
    monitor.record_episode(step=1200, episode_return=3.4, outcome="SUCCESS", gear_shifts=1)
    status = monitor.get_status()
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass
from typing import Any

from src.utils.logger import get_logger

logger = get_logger(__name__)


@dataclass
class _EpisodeRecord:
    """One finished training episode."""
    step: int
    episode_return: float
    success: bool
    gear_shifts: int
    rs_steps: int
    rl_steps: int


@dataclass
class _FaultRecord:
    """A non-finite loss event."""
    update: int
    losses: dict[str, float]


class TrainingMonitor:
    """Rolling success rate, mean return and gear shifts of recent episodes.

    Attributes:
        total_episodes: Episodes recorded since creation.
        total_successes: Successful episodes since creation.
    """

    def __init__(self, interval: int = 20, max_history: int = 100) -> None:
        self.interval = interval
        self.start_time = time.monotonic()
        self._episodes: deque[_EpisodeRecord] = deque(maxlen=max_history)
        self._faults: deque[_FaultRecord] = deque(maxlen=max_history)
        self.total_episodes = 0
        self.total_successes = 0
        self.last_losses: dict[str, float] = {}

    def record_episode(
        self, step: int, episode_return: float, outcome: str, gear_shifts: int,
        rs_steps: int = 0, rl_steps: int = 0,
    ) -> None:
        record = _EpisodeRecord(step, episode_return, outcome == "SUCCESS", gear_shifts, rs_steps, rl_steps)
        self._episodes.append(record)
        self.total_episodes += 1
        self.total_successes += int(record.success)
        if self.total_episodes % self.interval == 0:
            self._log_summary()

    def record_losses(self, losses: dict[str, float]) -> None:
        self.last_losses = dict(losses)

    def record_fault(self, update: int, losses: dict[str, float]) -> None:
        """Record a non-finite loss; training halts right after."""
        self._faults.append(_FaultRecord(update, dict(losses)))
        logger.error(
            "Non-finite loss at update %d: %s", update,
            ", ".join(f"{k}={v}" for k, v in sorted(losses.items())),
        )

    def get_status(self) -> dict[str, Any]:
        recent = list(self._episodes)
        n = len(recent)
        return {
            "episodes": self.total_episodes,
            "successes": self.total_successes,
            "recent_success_rate": (100.0 * sum(r.success for r in recent) / n) if n else 0.0,
            "recent_mean_return": (sum(r.episode_return for r in recent) / n) if n else math.nan,
            "recent_mean_shifts": (sum(r.gear_shifts for r in recent) / n) if n else math.nan,
            "recent_rs_share": self._rs_share(recent),
            "faults": len(self._faults),
            "elapsed_s": round(time.monotonic() - self.start_time, 1),
        }

    @staticmethod
    def _rs_share(records: list[_EpisodeRecord]) -> float:
        total = sum(r.rs_steps + r.rl_steps for r in records)
        return sum(r.rs_steps for r in records) / total if total else 0.0

    def _log_summary(self) -> None:
        status = self.get_status()
        last_step = self._episodes[-1].step if self._episodes else 0
        logger.info(
            "📈 Episode %d (step %d): success %.1f%%, return %.2f, shifts %.2f, RS share %.2f",
            status["episodes"], last_step, status["recent_success_rate"],
            status["recent_mean_return"], status["recent_mean_shifts"], status["recent_rs_share"],
        )
        if self.last_losses:
            logger.debug(
                "Last losses: %s", ", ".join(f"{k}={v:.4f}" for k, v in sorted(self.last_losses.items())),
            )
