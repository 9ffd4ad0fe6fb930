"""Adam optimizer and the cosine warm-restart learning-rate schedule."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ArgumentError, TrainingError
from .tensor import Parameter


def cosine_warm_restarts(lr0: float, t0: int, t_mult: int, step: int) -> float:
    """Learning rate at ``step`` for cosine annealing with warm restarts.

    Each cycle i spans ``t0 * t_mult**i`` steps; within a cycle at offset t
    the rate is ``lr0 * (1 + cos(pi * t / T_i)) / 2``, so every restart
    boundary returns exactly ``lr0``.
    """
    if lr0 <= 0:
        raise ArgumentError(f"lr0 must be positive, got {lr0}")
    if t0 < 1 or t_mult < 1:
        raise ArgumentError(f"t0 and t_mult must be >= 1, got t0={t0}, t_mult={t_mult}")
    if step < 0:
        raise ArgumentError(f"step must be >= 0, got {step}")
    if t_mult == 1:
        t_i = t0
        t = step % t0
    else:
        cycle = int(math.floor(math.log((step / t0) * (t_mult - 1) + 1, t_mult)))
        start = t0 * (t_mult**cycle - 1) // (t_mult - 1)
        # guard against log rounding at cycle boundaries
        while start > step:
            cycle -= 1
            start = t0 * (t_mult**cycle - 1) // (t_mult - 1)
        while start + t0 * t_mult**cycle <= step:
            start += t0 * t_mult**cycle
            cycle += 1
        t_i = t0 * t_mult**cycle
        t = step - start
    return lr0 * (1.0 + math.cos(math.pi * t / t_i)) / 2.0


class Adam:
    """Adam with bias correction, acting on trainable parameters in place."""

    def __init__(
        self,
        params: list[Parameter],
        lr: float = 1e-3,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ):
        if lr <= 0:
            raise ArgumentError(f"learning rate must be positive, got {lr}")
        self.params = [p for p in params if p.trainable]
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.reset_grad()

    def step(self, lr: float | None = None) -> None:
        lr = self.lr if lr is None else lr
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            if g is None:
                continue
            if not np.all(np.isfinite(g)):
                raise TrainingError(f"non-finite gradient for parameter {p.name!r}")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)

    def state_arrays(self) -> dict[str, np.ndarray]:
        """Moment buffers keyed for checkpointing (names follow param order)."""
        out: dict[str, np.ndarray] = {}
        for i, p in enumerate(self.params):
            key = p.name or f"param{i}"
            out[f"adam.m.{key}"] = self.m[i]
            out[f"adam.v.{key}"] = self.v[i]
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray], t: int) -> None:
        self.t = t
        for i, p in enumerate(self.params):
            key = p.name or f"param{i}"
            self.m[i][...] = arrays[f"adam.m.{key}"]
            self.v[i][...] = arrays[f"adam.v.{key}"]
