from .episode_io import (
    ParseError,
    atomic_write_bytes,
    atomic_write_text,
    load_dataset,
    read_episode,
    read_manifest,
    write_episode,
    write_manifest,
)
from .stats import (
    NormalizationStats,
    compute_stats,
    denormalize,
    normalize,
    standardize,
)
from .types import (
    ACTION_DIM,
    PROPRIO_DIM,
    TASK_IDS,
    VISUAL_DIM,
    ActionChunk,
    Demonstration,
    Instruction,
    ObsFrame,
    ProgressLabel,
    ProprioFrame,
    ValidationError,
    VisualProxy,
    progress_label,
)

__all__ = [
    "ACTION_DIM",
    "PROPRIO_DIM",
    "TASK_IDS",
    "VISUAL_DIM",
    "ActionChunk",
    "Demonstration",
    "Instruction",
    "NormalizationStats",
    "ObsFrame",
    "ParseError",
    "ProgressLabel",
    "ProprioFrame",
    "ValidationError",
    "VisualProxy",
    "atomic_write_bytes",
    "atomic_write_text",
    "compute_stats",
    "denormalize",
    "load_dataset",
    "normalize",
    "progress_label",
    "read_episode",
    "read_manifest",
    "standardize",
    "write_episode",
    "write_manifest",
]
