"""Adam with bias correction and the linear warmup/decay schedule."""

from __future__ import annotations

import numpy as np

from hybridref import kernels
from hybridref.errors import ConfigError, TrainingError
from hybridref.tensor import Tensor


def lr_at(step: int, learning_rate: float, warmup_steps: int, total_steps: int) -> float:
    """Linear ramp 0 -> lr over `warmup_steps`, then linear decay to 0 at `total_steps`."""
    if warmup_steps >= total_steps:
        raise ConfigError(f"warmup_steps ({warmup_steps}) must be < total_steps ({total_steps})")
    if not 0 <= step <= total_steps:
        raise ConfigError(f"step {step} outside [0, {total_steps}]")
    if warmup_steps > 0 and step < warmup_steps:
        return learning_rate * step / warmup_steps
    return learning_rate * (total_steps - step) / (total_steps - warmup_steps)


class Adam:
    """Standard Adam over a named parameter dict; state lives per name."""

    def __init__(self, params: dict[str, Tensor], beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = dict(params)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = {n: np.zeros_like(p.data) for n, p in self.params.items()}
        self.v = {n: np.zeros_like(p.data) for n, p in self.params.items()}

    def step(self, lr: float) -> None:
        self.t += 1
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                g = np.zeros_like(p.data)
            elif not np.all(np.isfinite(g)):
                raise TrainingError(f"non-finite gradient in parameter {name!r}")
            assert p.data.flags["C_CONTIGUOUS"]
            kernels.adam_update(
                p.data.reshape(-1), np.ascontiguousarray(g).reshape(-1),
                self.m[name].reshape(-1), self.v[name].reshape(-1),
                lr, self.beta1, self.beta2, self.eps, self.t,
            )
