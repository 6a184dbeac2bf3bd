"""Policy hyperparameters."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..core.types import ValidationError
from ..sampler import SamplerConfig


@dataclass(frozen=True)
class PolicyConfig:
    horizon: int = 8
    action_dim: int = 4
    exec_horizon: int = 8
    d_low: int = 32
    d_high: int = 64
    d_fuse: int = 64
    d_lan: int = 16
    attention_heads: int = 2
    diffusion_train_steps: int = 100
    ddim_steps: int = 10
    beta_start: float = 1e-4
    beta_end: float = 0.02
    alpha_loss: float = 1.0
    beta_loss: float = 0.1
    epochs: int = 300
    batch: int = 128
    sampler: SamplerConfig = field(default_factory=SamplerConfig)

    def __post_init__(self):
        if not 1 <= self.exec_horizon <= self.horizon:
            raise ValidationError(
                f"exec_horizon {self.exec_horizon} outside [1, {self.horizon}]"
            )
        if self.diffusion_train_steps % self.ddim_steps != 0:
            raise ValidationError(
                f"ddim_steps {self.ddim_steps} must divide "
                f"diffusion_train_steps {self.diffusion_train_steps}"
            )
        if not 0 < self.beta_start < self.beta_end < 1:
            raise ValidationError(
                f"beta schedule [{self.beta_start}, {self.beta_end}] invalid"
            )
        if self.epochs < 1 or self.batch < 1:
            raise ValidationError("epochs and batch must be >= 1")
        if self.alpha_loss < 0 or self.beta_loss < 0:
            raise ValidationError("loss weights must be >= 0")

    @property
    def chunk_dim(self) -> int:
        return self.horizon * self.action_dim

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "action_dim": self.action_dim,
            "exec_horizon": self.exec_horizon,
            "d_low": self.d_low,
            "d_high": self.d_high,
            "d_fuse": self.d_fuse,
            "d_lan": self.d_lan,
            "attention_heads": self.attention_heads,
            "diffusion_train_steps": self.diffusion_train_steps,
            "ddim_steps": self.ddim_steps,
            "beta_start": self.beta_start,
            "beta_end": self.beta_end,
            "alpha_loss": self.alpha_loss,
            "beta_loss": self.beta_loss,
            "epochs": self.epochs,
            "batch": self.batch,
            "sampler": {
                "k_high": self.sampler.k_high,
                "local_window": self.sampler.local_window,
                "low_history_cap": self.sampler.low_history_cap,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PolicyConfig":
        d = dict(d)
        samp = d.pop("sampler", {})
        return cls(sampler=SamplerConfig(**samp), **d)
