"""Parking Planner — Observation Encoders.

Maps a raw observation vector (beams, target_rel, ego) to the network
input. Encoders are registered by name so another representation can be
added without touching the agent.
"""

from __future__ import annotations

from typing import Callable, Protocol

import numpy as np

from src.config import AppConfig


class ObservationEncoder(Protocol):
    name: str
    output_size: int

    def encode(self, obs: np.ndarray) -> np.ndarray: ...


class BeamEncoder:
    """Scales beams and target offsets by max_range and ego terms by vehicle limits.

    Works on a single vector or a (B, n) batch.
    """

    name = "beams"

    def __init__(self, n_beams: int, max_range: float, max_speed: float, max_steer: float) -> None:
        self.n_beams = n_beams
        self.output_size = n_beams + 6
        scale = np.ones(self.output_size)
        scale[:n_beams] = max_range
        scale[n_beams:n_beams + 2] = max_range
        scale[n_beams + 4] = max_speed
        scale[n_beams + 5] = max_steer
        self._scale = scale

    def encode(self, obs: np.ndarray) -> np.ndarray:
        obs = np.asarray(obs, dtype=np.float64)
        if obs.shape[-1] != self.output_size:
            raise ValueError(f"Expected observation length {self.output_size}, got {obs.shape[-1]}")
        if not np.all(np.isfinite(obs)):
            raise ValueError("Observation contains non-finite values")
        return obs / self._scale


_REGISTRY: dict[str, Callable[[AppConfig], ObservationEncoder]] = {
    BeamEncoder.name: lambda cfg: BeamEncoder(
        cfg.sim.n_beams, cfg.sim.max_range, cfg.vehicle.max_speed, cfg.vehicle.max_steer,
    ),
}


def make_encoder(name: str, config: AppConfig) -> ObservationEncoder:
    """Build a registered encoder.

    Raises:
        ValueError: If no encoder is registered under ``name``.
    """
    try:
        return _REGISTRY[name](config)
    except KeyError:
        raise ValueError(f"Unknown observation encoder '{name}' (known: {sorted(_REGISTRY)})") from None
