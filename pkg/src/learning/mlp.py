"""Parking Planner — Fully-Connected Networks.

Double-precision multilayer perceptrons with ReLU hidden layers and a
linear output, hand-written reverse-mode gradients, and an Adam optimizer.
Weights are stored as (in, out) matrices so a batch ``x`` of shape (B, in)
maps to ``x @ W + b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


@dataclass
class ForwardCache:
    """Layer inputs and pre-activations kept for the backward pass."""

    inputs: list[np.ndarray] = field(default_factory=list)
    pre_acts: list[np.ndarray] = field(default_factory=list)


class Mlp:
    """MLP with ReLU hidden layers.

    Args:
        sizes: Layer widths, input first and output last (at least two).
        rng: Generator for the uniform ±1/sqrt(fan_in) initialization.
    """

    def __init__(self, sizes: Sequence[int], rng: Optional[np.random.Generator] = None) -> None:
        if len(sizes) < 2 or min(sizes) < 1:
            raise ValueError(f"Mlp needs at least two positive layer sizes, got {list(sizes)}")
        self.sizes = [int(s) for s in sizes]
        rng = rng or np.random.default_rng(0)
        self.params: list[np.ndarray] = []
        for fan_in, fan_out in zip(self.sizes, self.sizes[1:]):
            bound = 1.0 / math.sqrt(fan_in)
            self.params.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.params.append(rng.uniform(-bound, bound, size=fan_out))

    @property
    def n_layers(self) -> int:
        return len(self.sizes) - 1

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
        h = np.atleast_2d(np.asarray(x, dtype=np.float64))
        cache = ForwardCache()
        for i in range(self.n_layers):
            w, b = self.params[2 * i], self.params[2 * i + 1]
            cache.inputs.append(h)
            z = h @ w + b
            cache.pre_acts.append(z)
            h = np.maximum(z, 0.0) if i < self.n_layers - 1 else z
        return h, cache

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache: ForwardCache, grad_out: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
        """Gradients of a scalar loss w.r.t. parameters and network input.

        Args:
            cache: Cache from the matching :meth:`forward` call.
            grad_out: dLoss/dOutput, shape (B, out).

        Returns:
            (parameter gradients aligned with ``params``, dLoss/dInput).
        """
        grads: list[np.ndarray] = [np.empty(0)] * len(self.params)
        g = np.asarray(grad_out, dtype=np.float64)
        for i in reversed(range(self.n_layers)):
            if i < self.n_layers - 1:
                g = g * (cache.pre_acts[i] > 0.0)
            grads[2 * i] = cache.inputs[i].T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.params[2 * i].T
        return grads, g

    def copy(self) -> Mlp:
        clone = Mlp.__new__(Mlp)
        clone.sizes = list(self.sizes)
        clone.params = [p.copy() for p in self.params]
        return clone

    def soft_update(self, source: Mlp, tau: float) -> None:
        """Polyak step: self ← tau · source + (1 − tau) · self."""
        for target, p in zip(self.params, source.params):
            target *= 1.0 - tau
            target += tau * p

    def all_finite(self) -> bool:
        return all(bool(np.all(np.isfinite(p))) for p in self.params)


class Adam:
    """Adam optimizer over a fixed list of parameter arrays (updated in place)."""

    def __init__(
        self, params: Sequence[np.ndarray], lr: float,
        betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8,
    ) -> None:
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def gradient_check(net: Mlp, eps: float = 1e-6, seed: int = 0, batch: int = 4) -> float:
    """Max relative error between backprop and central-difference gradients.

    The loss is 0.5 · ||net(x) − t||² on a random batch. Entries where both
    gradients are below 1e-10 in magnitude count as exact.
    """
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(batch, net.sizes[0]))
    t = rng.normal(size=(batch, net.sizes[-1]))

    def loss() -> float:
        return 0.5 * float(np.sum((net(x) - t) ** 2))

    out, cache = net.forward(x)
    analytic, _ = net.backward(cache, out - t)

    worst = 0.0
    for p, g in zip(net.params, analytic):
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + eps
            up = loss()
            flat[j] = orig - eps
            down = loss()
            flat[j] = orig
            numeric = (up - down) / (2.0 * eps)
            denom = abs(numeric) + abs(gflat[j])
            if denom < 1e-10:
                continue
            worst = max(worst, abs(numeric - gflat[j]) / denom)
    return worst
