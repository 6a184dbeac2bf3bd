"""Noise schedule and deterministic DDIM sampling for action chunks.

The schedule lives entirely in numpy; only the noise-prediction network
itself runs on the autodiff tape. The sampler takes a plain callable
``predict(x, ks) -> eps_hat`` so training code and checkpoint-loading
code can wrap the model however they like.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from ..core.types import ValidationError
from .config import PolicyConfig


@dataclass(frozen=True)
class DiffusionSchedule:
    betas: np.ndarray
    alphas: np.ndarray
    alpha_bars: np.ndarray

    def __post_init__(self):
        b = self.betas
        if b.ndim != 1 or len(b) < 2:
            raise ValidationError("betas must be a 1-D array with >= 2 entries")
        if not (np.all(b > 0) and np.all(b < 1)):
            raise ValidationError("betas must lie strictly inside (0, 1)")
        if not np.all(np.diff(b) > 0):
            raise ValidationError("betas must be strictly increasing")
        ab = self.alpha_bars
        if not np.all(np.diff(ab) < 0):
            raise ValidationError("alpha_bars must be strictly decreasing")
        if not (np.all(ab > 0) and np.all(ab < 1)):
            raise ValidationError("alpha_bars must lie strictly inside (0, 1)")


def make_schedule(cfg: PolicyConfig) -> DiffusionSchedule:
    betas = np.linspace(cfg.beta_start, cfg.beta_end, cfg.diffusion_train_steps)
    alphas = 1.0 - betas
    return DiffusionSchedule(
        betas=betas, alphas=alphas, alpha_bars=np.cumprod(alphas)
    )


def add_noise(
    x0: np.ndarray, ks: np.ndarray, eps: np.ndarray, sched: DiffusionSchedule
) -> np.ndarray:
    """Forward-noise clean chunks x0 at per-sample steps ks."""
    ab = sched.alpha_bars[ks][:, None]
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps


def ddim_step_indices(train_steps: int, n_steps: int) -> List[int]:
    """Evenly strided descending step indices, e.g. [99, 89, ..., 9]."""
    if train_steps % n_steps != 0:
        raise ValidationError(
            f"{n_steps} sampling steps do not evenly divide {train_steps}"
        )
    stride = train_steps // n_steps
    return list(range(train_steps - 1, -1, -stride))


def ddim_denoise(
    x: np.ndarray,
    steps: List[int],
    sched: DiffusionSchedule,
    predict: Callable[[np.ndarray, np.ndarray], np.ndarray],
    clip: float | None = 1.0,
) -> np.ndarray:
    """Deterministic (eta = 0) DDIM from noise x down to a clean chunk.

    After the last listed step the trajectory jumps straight to the
    predicted x0 (alpha_bar treated as 1), so the return value is a
    clean sample rather than a residually-noisy one.

    Each intermediate x0 estimate is clamped to [-clip, clip]: the
    targets live in the normalized action box, and without the clamp a
    bad early estimate can push the trajectory off the training
    distribution faster than later steps can pull it back. Pass
    clip=None for unbounded targets.
    """
    n = x.shape[0]
    for i, k in enumerate(steps):
        ab = sched.alpha_bars[k]
        eps_hat = predict(x, np.full(n, k, dtype=np.int64))
        x0_pred = (x - np.sqrt(1.0 - ab) * eps_hat) / np.sqrt(ab)
        if clip is not None:
            x0_pred = np.clip(x0_pred, -clip, clip)
        ab_prev = sched.alpha_bars[steps[i + 1]] if i + 1 < len(steps) else 1.0
        x = np.sqrt(ab_prev) * x0_pred + np.sqrt(1.0 - ab_prev) * eps_hat
    return x
