"""Adam with bias correction under a cosine learning-rate schedule."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core.types import ValidationError
from .layers import ParamStore


@dataclass(frozen=True)
class OptimizerConfig:
    lr0: float = 2.0e-4
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    total_steps: int = 1
    schedule: str = "cosine"

    def __post_init__(self):
        if self.lr0 <= 0:
            raise ValidationError(f"lr0 must be > 0, got {self.lr0}")
        if self.total_steps < 1:
            raise ValidationError(f"total_steps must be >= 1, got {self.total_steps}")
        if self.schedule != "cosine":
            raise ValidationError(f"unknown schedule {self.schedule!r}")


def lr_at(step: int, cfg: OptimizerConfig) -> float:
    # Past total_steps the rate clamps to 0 rather than going negative.
    s = min(max(step, 0), cfg.total_steps)
    return cfg.lr0 * 0.5 * (1.0 + np.cos(np.pi * s / cfg.total_steps))


def adam_step(store: ParamStore, step: int, cfg: OptimizerConfig) -> float:
    """One update over every parameter with a populated gradient.

    Bias correction uses t = step + 1 so the first call (step 0) runs at
    lr0. Gradients are cleared afterwards. Returns the rate applied.
    """
    lr = lr_at(step, cfg)
    b1, b2 = cfg.betas
    t = step + 1
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for p in store:
        g = p.value.grad
        if g is None:
            continue
        p.m = b1 * p.m + (1.0 - b1) * g
        p.v = b2 * p.v + (1.0 - b2) * (g * g)
        p.value.data -= lr * (p.m / c1) / (np.sqrt(p.v / c2) + cfg.eps)
        p.value.grad = None
    return float(lr)
