"""Normalization statistics over a demonstration dataset.

Actions and proprio use per-dimension min/max and map to [-1, 1]
(the diffusion-policy convention); visual proxies use per-dimension
mean/std. Degenerate dimensions (max == min, or zero variance) are
handled so that normalization maps them to 0 and never divides by zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import Demonstration, ValidationError


@dataclass
class NormalizationStats:
    action_min: np.ndarray   # (4,)
    action_max: np.ndarray
    proprio_min: np.ndarray  # (4,)
    proprio_max: np.ndarray
    visual_mean: np.ndarray  # (10,)
    visual_std: np.ndarray   # (10,), strictly positive

    def validate(self) -> None:
        for lo, hi, name in (
            (self.action_min, self.action_max, "action"),
            (self.proprio_min, self.proprio_max, "proprio"),
        ):
            if np.any(hi < lo):
                raise ValidationError(f"{name} stats have max < min")
        if np.any(self.visual_std <= 0):
            raise ValidationError("visual_std must be strictly positive")

    def to_dict(self) -> dict:
        return {
            "action_min": self.action_min.tolist(),
            "action_max": self.action_max.tolist(),
            "proprio_min": self.proprio_min.tolist(),
            "proprio_max": self.proprio_max.tolist(),
            "visual_mean": self.visual_mean.tolist(),
            "visual_std": self.visual_std.tolist(),
        }

    @staticmethod
    def from_dict(d: dict) -> "NormalizationStats":
        return NormalizationStats(
            **{k: np.asarray(d[k], dtype=np.float64) for k in (
                "action_min", "action_max", "proprio_min", "proprio_max",
                "visual_mean", "visual_std")}
        )


def compute_stats(dataset: list[Demonstration]) -> NormalizationStats:
    """Reduce a dataset to normalization statistics.

    Order-insensitive: min/max exactly, mean/std within float tolerance
    (computed over the full concatenation, not per-episode averages).
    """
    if not dataset:
        raise ValidationError("compute_stats: empty dataset")
    actions = np.concatenate([d.action_array() for d in dataset])
    proprio = np.concatenate([d.proprio_array() for d in dataset])
    visual = np.concatenate([d.visual_array() for d in dataset])
    std = visual.std(axis=0)
    std = np.where(std > 0.0, std, 1.0)
    return NormalizationStats(
        action_min=actions.min(axis=0),
        action_max=actions.max(axis=0),
        proprio_min=proprio.min(axis=0),
        proprio_max=proprio.max(axis=0),
        visual_mean=visual.mean(axis=0),
        visual_std=std,
    )


def normalize(x: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Min-max map to [-1, 1]; dimensions with hi == lo map to 0.

    Works on (d,) vectors and (n, d) row stacks alike.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != lo.shape[0]:
        raise ValidationError(
            f"normalize: dim {x.shape[-1]} does not match stats dim {lo.shape[0]}"
        )
    span = hi - lo
    safe = np.where(span > 0.0, span, 1.0)
    z = 2.0 * (x - lo) / safe - 1.0
    return np.where(span > 0.0, z, 0.0)


def denormalize(z: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Inverse of `normalize` on non-degenerate dimensions.

    Degenerate dimensions recover the (single) data value lo == hi.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.shape[-1] != lo.shape[0]:
        raise ValidationError(
            f"denormalize: dim {z.shape[-1]} does not match stats dim {lo.shape[0]}"
        )
    span = hi - lo
    return np.where(span > 0.0, (z + 1.0) * span / 2.0 + lo, lo)


def standardize(x: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    """Z-score by mean/std stats (used for visual-proxy rows)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != mean.shape[0]:
        raise ValidationError(
            f"standardize: dim {x.shape[-1]} does not match stats dim {mean.shape[0]}"
        )
    # Zero-variance dims carry no signal; map them to 0 rather than nan.
    centered = x - mean
    return np.divide(
        centered, std, out=np.zeros_like(centered), where=std > 0
    )
