from .dataset import episode_cycle_counts, generate_dataset, generate_demos
from .expert import DWELL_STEPS, GenerationError, scripted_expert
from .sim import EnvState, reset, step
from .tasks import (
    Box,
    EpisodeParams,
    HammerParams,
    ShakeParams,
    StirParams,
    TaskSpec,
    draw_episode_params,
    nominal_amplitude,
)

__all__ = [
    "Box",
    "DWELL_STEPS",
    "EnvState",
    "EpisodeParams",
    "GenerationError",
    "HammerParams",
    "ShakeParams",
    "StirParams",
    "TaskSpec",
    "draw_episode_params",
    "episode_cycle_counts",
    "generate_dataset",
    "generate_demos",
    "nominal_amplitude",
    "reset",
    "scripted_expert",
    "step",
]
