"""Domain value types shared across the library.

All numeric state is float64. Types are plain dataclasses with explicit
validation methods rather than validating constructors, so bulk
deserialization can build first and check once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TASK_IDS = ("shake", "hammer", "stir")

VISUAL_DIM = 10
PROPRIO_DIM = 4
ACTION_DIM = 4


class ValidationError(ValueError):
    """A domain invariant does not hold."""


def _as_vec(x, n: int, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.shape != (n,):
        raise ValidationError(f"{name}: expected shape ({n},), got {v.shape}")
    return v


@dataclass
class ProprioFrame:
    """Low-overhead observation: end-effector position and gripper opening."""

    ee_pos: np.ndarray  # (3,) meters
    gripper: float      # 0 closed .. 1 open

    def __post_init__(self):
        self.ee_pos = _as_vec(self.ee_pos, 3, "ee_pos")
        self.gripper = float(self.gripper)

    def validate(self) -> None:
        if not np.all(np.isfinite(self.ee_pos)) or not np.isfinite(self.gripper):
            raise ValidationError("proprio contains non-finite values")
        if not 0.0 <= self.gripper <= 1.0:
            raise ValidationError(f"gripper {self.gripper} outside [0, 1]")

    def as_array(self) -> np.ndarray:
        out = np.empty(PROPRIO_DIM)
        out[:3] = self.ee_pos
        out[3] = self.gripper
        return out


@dataclass
class VisualProxy:
    """High-overhead observation stand-in: a 10-dim scene summary vector.

    Layout: object position (3), object velocity per step (3),
    object minus end-effector offset (3), contact flag (1).
    """

    object_pos: np.ndarray
    object_vel: np.ndarray
    ee_to_object: np.ndarray
    contact_flag: float

    def __post_init__(self):
        self.object_pos = _as_vec(self.object_pos, 3, "object_pos")
        self.object_vel = _as_vec(self.object_vel, 3, "object_vel")
        self.ee_to_object = _as_vec(self.ee_to_object, 3, "ee_to_object")
        self.contact_flag = float(self.contact_flag)

    def validate(self) -> None:
        for name in ("object_pos", "object_vel", "ee_to_object"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValidationError(f"{name} contains non-finite values")
        if self.contact_flag not in (0.0, 1.0):
            raise ValidationError(f"contact_flag {self.contact_flag} is not 0 or 1")

    def as_array(self) -> np.ndarray:
        out = np.empty(VISUAL_DIM)
        out[0:3] = self.object_pos
        out[3:6] = self.object_vel
        out[6:9] = self.ee_to_object
        out[9] = self.contact_flag
        return out

    @staticmethod
    def from_array(v: np.ndarray) -> "VisualProxy":
        v = _as_vec(v, VISUAL_DIM, "visual")
        return VisualProxy(v[0:3], v[3:6], v[6:9], v[9])


@dataclass
class ObsFrame:
    """One timestep of observation: frame index, proprio, visual proxy."""

    t: int
    proprio: ProprioFrame
    visual: VisualProxy

    def validate(self) -> None:
        if self.t < 0:
            raise ValidationError(f"frame index {self.t} is negative")
        self.proprio.validate()
        self.visual.validate()


@dataclass(frozen=True)
class Instruction:
    """Task command: which task, and how many cycles to perform."""

    task_id: str
    target_cycles: int

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.task_id not in TASK_IDS:
            raise ValidationError(f"unknown task_id {self.task_id!r}")
        if not 1 <= self.target_cycles <= 8:
            raise ValidationError(
                f"target_cycles {self.target_cycles} outside [1, 8]"
            )


@dataclass
class ActionChunk:
    """A horizon x 4 block of future action targets (ee position + gripper)."""

    actions: np.ndarray

    def __post_init__(self):
        self.actions = np.asarray(self.actions, dtype=np.float64)
        if self.actions.ndim != 2 or self.actions.shape[1] != ACTION_DIM:
            raise ValidationError(
                f"actions: expected (horizon, {ACTION_DIM}), got {self.actions.shape}"
            )

    @property
    def horizon(self) -> int:
        return self.actions.shape[0]


@dataclass
class Demonstration:
    """One annotated expert episode."""

    instruction: Instruction
    frames: list[ObsFrame]
    actions: list[np.ndarray]       # per-step expert targets, each (4,)
    cycles_done: list[int]          # completed cycles at each step
    episode_len: int = field(default=0)

    def __post_init__(self):
        if self.episode_len == 0:
            self.episode_len = len(self.frames)
        self.actions = [_as_vec(a, ACTION_DIM, "action") for a in self.actions]
        self.cycles_done = [int(c) for c in self.cycles_done]

    def validate(self) -> None:
        self.instruction.validate()
        n = self.episode_len
        if not (len(self.frames) == len(self.actions) == len(self.cycles_done) == n):
            raise ValidationError(
                "length mismatch: frames=%d actions=%d cycles_done=%d episode_len=%d"
                % (len(self.frames), len(self.actions), len(self.cycles_done), n)
            )
        if n == 0:
            raise ValidationError("empty demonstration")
        for i, f in enumerate(self.frames):
            if f.t != i:
                raise ValidationError(f"frame {i} has index {f.t}, expected {i}")
            f.validate()
        for a in self.actions:
            if not np.all(np.isfinite(a)):
                raise ValidationError("action contains non-finite values")
        c = self.cycles_done
        if c[0] != 0:
            raise ValidationError(f"cycles_done starts at {c[0]}, expected 0")
        if any(b < a for a, b in zip(c, c[1:])):
            raise ValidationError("cycles_done is not non-decreasing")
        if c[-1] != self.instruction.target_cycles:
            raise ValidationError(
                f"cycles_done ends at {c[-1]}, expected {self.instruction.target_cycles}"
            )

    def proprio_array(self) -> np.ndarray:
        """(episode_len, 4) array of proprio rows."""
        return np.stack([f.proprio.as_array() for f in self.frames])

    def visual_array(self) -> np.ndarray:
        """(episode_len, 10) array of visual-proxy rows."""
        return np.stack([f.visual.as_array() for f in self.frames])

    def action_array(self) -> np.ndarray:
        """(episode_len, 4) array of expert action targets."""
        return np.stack(self.actions)


@dataclass(frozen=True)
class ProgressLabel:
    """Normalized position within an episode and its 10-way class index."""

    b: float
    y: int


def progress_label(t: int, episode_len: int) -> ProgressLabel:
    """Progress of frame `t` in an episode of `episode_len` frames.

    b runs 0 at the first frame to 1 at the last; y discretizes b into
    ten uniform bins, with b = 1.0 clamped into the top bin.
    """
    if episode_len < 1:
        raise ValidationError(f"episode_len {episode_len} < 1")
    if not 0 <= t < episode_len:
        raise ValidationError(f"frame index {t} outside [0, {episode_len})")
    b = t / max(episode_len - 1, 1)
    y = min(int(10.0 * b), 9)
    return ProgressLabel(b=b, y=y)
