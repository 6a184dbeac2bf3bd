"""Diffusion action policy with cycle-aware history conditioning."""

from .checkpoint import CheckpointBundle, load_checkpoint, save_checkpoint
from .config import PolicyConfig
from .diffusion import (
    DiffusionSchedule,
    add_noise,
    ddim_denoise,
    ddim_step_indices,
    make_schedule,
)
from .model import PolicyModel, PreparedInput, prepare_input
from .runtime import HOME_DWELL, HOME_RADIUS, act, act_raw, rollout
from .training import (
    PreparedDemo,
    TrainSample,
    assemble_sample,
    batch_loss,
    prepare_demo,
    progress_accuracy,
    sample_draws,
    train,
)

__all__ = [
    "CheckpointBundle",
    "load_checkpoint",
    "save_checkpoint",
    "PolicyConfig",
    "DiffusionSchedule",
    "add_noise",
    "ddim_denoise",
    "ddim_step_indices",
    "make_schedule",
    "PolicyModel",
    "PreparedInput",
    "prepare_input",
    "HOME_DWELL",
    "HOME_RADIUS",
    "act",
    "act_raw",
    "rollout",
    "PreparedDemo",
    "TrainSample",
    "assemble_sample",
    "batch_loss",
    "prepare_demo",
    "progress_accuracy",
    "sample_draws",
    "train",
]
