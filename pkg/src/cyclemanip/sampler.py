"""History sampling: fixed-shape policy inputs from arbitrary-length histories.

High-overhead frames are picked sparsely (exponential cluster near the
present plus right-sided binary coverage of the past); low-overhead
proprio history is kept densely as pose differences. All functions are
pure and stateless.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core.types import Instruction, ObsFrame, ProprioFrame, ValidationError


@dataclass(frozen=True)
class SamplerConfig:
    k_high: int = 6
    local_window: int = 8
    low_history_cap: int = 512

    def __post_init__(self):
        if self.k_high < 2 or self.k_high % 2 != 0:
            raise ValidationError(f"k_high must be even and >= 2, got {self.k_high}")
        if self.local_window < 1:
            raise ValidationError(f"local_window must be >= 1, got {self.local_window}")
        if self.low_history_cap < self.local_window:
            raise ValidationError(
                f"low_history_cap {self.low_history_cap} < local_window {self.local_window}"
            )


@dataclass
class PolicyInput:
    high_frames: np.ndarray   # (k_high, 10), rows in index order
    high_indices: list[int]   # ascending, each in [0, t]
    low_diffs: np.ndarray     # (L, 4), L <= low_history_cap
    low_recent: np.ndarray    # (local_window, 4) raw proprio
    instruction: Instruction


def sample_high_indices(t: int, k: int) -> list[int]:
    """Indices of the k high-overhead frames to keep at time t.

    Early episode (t+1 <= k): [0]*(k-(t+1)) + [0..t]. Otherwise the union
    of an exponential cluster ending at t and right-half midpoints of
    [0,t], deduplicated and topped up downward from t. Pure in (t, k).
    """
    if k < 2 or k % 2 != 0:
        raise ValidationError(f"k must be even and >= 2, got {k}")
    if t < 0:
        raise ValidationError(f"t must be >= 0, got {t}")
    if t + 1 <= k:
        return [0] * (k - (t + 1)) + list(range(t + 1))
    chosen = {t - (2 ** j - 1) for j in range(k // 2)}
    chosen |= {t - t // (2 ** j) for j in range(1, k // 2 + 1)}
    chosen = {i for i in chosen if 0 <= i <= t}
    cursor = t
    while len(chosen) < k:
        while cursor in chosen:
            cursor -= 1
        chosen.add(cursor)
    return sorted(chosen)


def pose_diffs(proprio, n_max: int | None = None) -> np.ndarray:
    """Per-step pose differences, (n, 4).

    Accepts an (n, 4) array or a sequence of proprio frames. d_0 is
    zero only at the true episode start; when n_max caps the output,
    the oldest retained entry stays a genuine difference.
    """
    if isinstance(proprio, np.ndarray):
        arr = np.asarray(proprio, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise ValidationError("pose_diffs needs a non-empty (n, d) array")
    else:
        frames = list(proprio)
        if not frames:
            raise ValidationError("pose_diffs needs a non-empty sequence")
        arr = np.stack([p.as_array() for p in frames])
    d = np.zeros_like(arr)
    d[1:] = arr[1:] - arr[:-1]
    if n_max is not None and len(d) > n_max:
        d = d[-n_max:]
    return d


def build_policy_input(
    history: list[ObsFrame],
    instruction: Instruction,
    cfg: SamplerConfig,
    no_history: bool = False,
) -> PolicyInput:
    """Assemble the fixed-shape policy operand from an observation history.

    `no_history` is the short-window ablation: the sparse slots all hold
    the current frame and the dense history is cut to the local window.
    """
    if not history:
        raise ValidationError("build_policy_input needs a non-empty history")
    t = history[-1].t
    base = history[0].t
    if no_history:
        high_idx = [t] * cfg.k_high
    else:
        high_idx = sample_high_indices(t, cfg.k_high)
    # Positions are relative to the first retained frame; anything older
    # than the retained window falls back to the oldest frame.
    high_frames = np.stack(
        [history[max(i - base, 0)].visual.as_array() for i in high_idx]
    )

    proprio = [f.proprio for f in history]
    cap = cfg.local_window if no_history else cfg.low_history_cap
    diffs = pose_diffs(proprio, n_max=cap)

    m = cfg.local_window
    recent = [f.proprio.as_array() for f in history[-m:]]
    while len(recent) < m:
        recent.insert(0, history[0].proprio.as_array().copy())
    low_recent = np.stack(recent)

    return PolicyInput(
        high_frames=high_frames,
        high_indices=high_idx,
        low_diffs=diffs,
        low_recent=low_recent,
        instruction=instruction,
    )
