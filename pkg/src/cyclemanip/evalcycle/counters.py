"""Cycle counters: windowed peaks, contact hysteresis, angle unwrapping.

All three are pure functions of the input signal, so a trajectory always
produces the same report.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core.types import ValidationError

TWO_PI = 2.0 * np.pi
# Angle sums over a closed path land within float rounding of an exact
# multiple of 2*pi; the guard keeps floor() from undercounting.
_ANGLE_TOL = 1e-9


@dataclass(frozen=True)
class CounterConfig:
    kind: str  # peaks | contacts | revolutions
    window: int = 5
    prominence: float = 0.03
    engage: float = 0.005
    release: float = 0.02

    def __post_init__(self):
        if self.kind not in ("peaks", "contacts", "revolutions"):
            raise ValidationError(f"unknown counter kind {self.kind!r}")
        if self.window < 1:
            raise ValidationError(f"window must be >= 1, got {self.window}")
        if self.prominence <= 0:
            raise ValidationError(f"prominence must be > 0, got {self.prominence}")
        if not (self.release > self.engage > 0):
            raise ValidationError(
                f"need release > engage > 0, got {self.release} / {self.engage}"
            )


@dataclass(frozen=True)
class CycleEvent:
    index: int  # 1-based cycle ordinal
    t: int      # frame of completion


def count_peaks(signal, cfg: CounterConfig) -> list[CycleEvent]:
    """Windowed peak events in a scalar signal.

    Index i is a peak iff it strictly dominates the w frames to its left,
    weakly dominates the w frames to its right (so the leftmost sample of
    a plateau wins), and rises at least `prominence` above the windowed
    minimum. Indices within w of either end are ineligible.
    """
    s = np.asarray(signal, dtype=np.float64)
    w = cfg.window
    n = s.size
    events: list[CycleEvent] = []
    for i in range(w, n - w):
        seg = s[i - w:i + w + 1]
        if not (s[i] > seg[:w]).all():
            continue
        if not (s[i] >= seg[w + 1:]).all():
            continue
        if s[i] - seg.min() < cfg.prominence:
            continue
        events.append(CycleEvent(index=len(events) + 1, t=i))
    return events


def count_contacts(dist, cfg: CounterConfig) -> list[CycleEvent]:
    """Hysteresis contact counter over a tool-to-surface distance signal.

    FREE -> CONTACT at dist <= engage; CONTACT -> FREE at dist >= release,
    emitting one event at the releasing frame. Values inside the band
    change nothing, and a trailing contact without release is not counted.
    """
    events: list[CycleEvent] = []
    in_contact = False
    for t, d in enumerate(np.asarray(dist, dtype=np.float64)):
        if not in_contact and d <= cfg.engage:
            in_contact = True
        elif in_contact and d >= cfg.release:
            in_contact = False
            events.append(CycleEvent(index=len(events) + 1, t=t))
    return events


def count_revolutions(xy, center) -> tuple[int, list[CycleEvent], bool]:
    """Signed-angle revolution count of a planar path about a center.

    Returns (count, events, degenerate). Per-step angle deltas are
    wrapped to (-pi, pi] and accumulated; count = floor(|total| / 2pi),
    and the k-th event lands on the first frame where the accumulated
    magnitude reaches k full turns (only turns that survive to the end
    are reported, so count always equals len(events)). Points within
    1e-9 of the center are skipped; if every point is degenerate the
    count is 0 with the degenerate flag set.
    """
    pts = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
    c = np.asarray(center, dtype=np.float64).reshape(2)
    rel = pts - c
    keep = np.hypot(rel[:, 0], rel[:, 1]) > 1e-9
    frames = np.flatnonzero(keep)
    if frames.size == 0:
        return 0, [], True
    theta = np.arctan2(rel[keep, 1], rel[keep, 0])
    d = np.diff(theta)
    d = (d + np.pi) % TWO_PI - np.pi
    d[d == -np.pi] = np.pi
    cum = np.abs(np.concatenate([[0.0], np.cumsum(d)]))
    count = int(np.floor(cum[-1] / TWO_PI + _ANGLE_TOL))
    events = []
    for k in range(1, count + 1):
        hit = np.flatnonzero(cum >= k * TWO_PI - _ANGLE_TOL)[0]
        events.append(CycleEvent(index=k, t=int(frames[hit])))
    return count, events, False
