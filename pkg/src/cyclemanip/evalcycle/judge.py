"""Episode judgment and metrics aggregation."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..core.types import Instruction, ObsFrame, ValidationError
from ..env.tasks import TaskSpec, nominal_amplitude
from .counters import CounterConfig, CycleEvent, count_contacts, count_peaks, count_revolutions

HOME_TOLERANCE = 0.05  # meters


@dataclass(frozen=True)
class CycleReport:
    task_id: str
    target_cycles: int
    counted_cycles: int
    events: tuple[CycleEvent, ...]
    completed: bool
    success: bool

    def to_dict(self) -> dict:
        return {
            "task": self.task_id,
            "target": self.target_cycles,
            "counted": self.counted_cycles,
            "events": [{"index": e.index, "t": e.t} for e in self.events],
            "completed": self.completed,
            "success": self.success,
        }


@dataclass(frozen=True)
class MetricsSummary:
    trials: int
    suc: float
    cyc: float

    def to_dict(self) -> dict:
        return {"trials": self.trials, "suc": self.suc, "cyc": self.cyc}


def default_counter_config(spec: TaskSpec) -> CounterConfig:
    if spec.task_id == "shake":
        return CounterConfig(kind="peaks", window=5,
                             prominence=0.6 * nominal_amplitude(spec))
    if spec.task_id == "hammer":
        return CounterConfig(kind="contacts", engage=0.005, release=0.02)
    return CounterConfig(kind="revolutions")


def judge_episode(
    traj: list[ObsFrame],
    spec: TaskSpec,
    instruction: Instruction,
    cfg: CounterConfig | None = None,
    home_tolerance: float = HOME_TOLERANCE,
) -> CycleReport:
    """Count cycles in a trajectory and judge success.

    Signals: shake counts peaks of the object's height; hammer counts
    hysteresis release events of the striking height above the anvil
    plane; stir counts end-effector revolutions about the bowl position
    seen at the first frame. Completion requires finishing at the start
    pose before t_max (and, for shake, an open gripper at the end).
    """
    if not traj:
        raise ValidationError("empty trajectory")
    if instruction.task_id != spec.task_id:
        raise ValidationError(
            f"instruction task {instruction.task_id!r} vs spec {spec.task_id!r}"
        )
    if cfg is None:
        cfg = default_counter_config(spec)

    if spec.task_id == "shake":
        z = [f.visual.object_pos[2] for f in traj]
        events = count_peaks(z, cfg)
        counted = len(events)
    elif spec.task_id == "hammer":
        dist = [f.proprio.ee_pos[2] - spec.hammer.z_anvil for f in traj]
        events = count_contacts(dist, cfg)
        counted = len(events)
    elif spec.task_id == "stir":
        xy = [f.proprio.ee_pos[:2] for f in traj]
        center = traj[0].visual.object_pos[:2]
        counted, events, _ = count_revolutions(xy, center)
    else:
        raise ValidationError(f"unknown task {spec.task_id!r}")

    home = traj[0].proprio.ee_pos
    at_home = float(np.linalg.norm(traj[-1].proprio.ee_pos - home)) <= home_tolerance
    completed = at_home and len(traj) < spec.t_max
    if spec.task_id == "shake":
        completed = completed and traj[-1].proprio.gripper > 0.5
    success = completed and counted == instruction.target_cycles
    return CycleReport(
        task_id=spec.task_id,
        target_cycles=instruction.target_cycles,
        counted_cycles=counted,
        events=tuple(events),
        completed=completed,
        success=success,
    )


def report_from_dict(d: dict) -> CycleReport:
    """Inverse of CycleReport.to_dict."""
    return CycleReport(
        task_id=d["task"],
        target_cycles=int(d["target"]),
        counted_cycles=int(d["counted"]),
        events=tuple(CycleEvent(index=int(e["index"]), t=int(e["t"]))
                     for e in d["events"]),
        completed=bool(d["completed"]),
        success=bool(d["success"]),
    )


def aggregate(reports: list[CycleReport]) -> MetricsSummary:
    if not reports:
        raise ValidationError("aggregate needs at least one report")
    suc = float(np.mean([r.success for r in reports]))
    cyc = float(np.mean([abs(r.counted_cycles - r.target_cycles) for r in reports]))
    return MetricsSummary(trials=len(reports), suc=suc, cyc=cyc)


def render_table(rows: list[tuple[str, MetricsSummary]]) -> str:
    """Fixed-column text table of Suc./Cyc. metrics, one row per label."""
    label_w = max([len(r[0]) for r in rows] + [len("run")])
    head = f"{'run':<{label_w}}  {'trials':>6}  {'Suc.':>6}  {'Cyc.':>6}"
    lines = [head, "-" * len(head)]
    for label, m in rows:
        lines.append(
            f"{label:<{label_w}}  {m.trials:>6d}  {m.suc:>6.2f}  {m.cyc:>6.2f}"
        )
    return "\n".join(lines)


def reports_to_json(reports: list[CycleReport], summary: MetricsSummary) -> str:
    doc = {
        "summary": summary.to_dict(),
        "reports": [r.to_dict() for r in reports],
    }
    return json.dumps(doc, separators=(",", ":"), sort_keys=False) + "\n"
