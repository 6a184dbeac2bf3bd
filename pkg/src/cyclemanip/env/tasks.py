"""Task specifications: workspace geometry, per-task parameters, jitter."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core.types import TASK_IDS, ValidationError
from ..rng import derive_rng


@dataclass(frozen=True)
class Box:
    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def __post_init__(self):
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        if lo.shape != (3,) or hi.shape != (3,):
            raise ValidationError("box corners must be 3-vectors")
        if not (lo <= hi).all():
            raise ValidationError(f"box lo {self.lo} exceeds hi {self.hi}")

    def contains(self, p, tol: float = 0.0) -> bool:
        p = np.asarray(p)
        return bool((p >= np.asarray(self.lo) - tol).all()
                    and (p <= np.asarray(self.hi) + tol).all())

    def contains_box(self, other: "Box") -> bool:
        return self.contains(other.lo) and self.contains(other.hi)

    def clamp(self, p) -> np.ndarray:
        return np.clip(np.asarray(p, dtype=np.float64),
                       np.asarray(self.lo), np.asarray(self.hi))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(np.asarray(self.lo), np.asarray(self.hi))

    def to_dict(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi)}

    @classmethod
    def from_dict(cls, d: dict) -> "Box":
        return cls(lo=tuple(d["lo"]), hi=tuple(d["hi"]))


def _range_pair(v, name: str) -> tuple[float, float]:
    lo, hi = float(v[0]), float(v[1])
    if not lo <= hi:
        raise ValidationError(f"{name} range [{lo}, {hi}] is inverted")
    return lo, hi


@dataclass(frozen=True)
class ShakeParams:
    grasp_region: Box = Box((0.50, 0.50, 0.08), (0.70, 0.70, 0.16))
    shake_height: tuple[float, float] = (0.32, 0.38)
    amplitude: tuple[float, float] = (0.05, 0.10)
    period: tuple[int, int] = (10, 20)


@dataclass(frozen=True)
class HammerParams:
    anvil_region: Box = Box((0.55, 0.55, 0.10), (0.75, 0.75, 0.10))
    z_anvil: float = 0.10
    lift_height: tuple[float, float] = (0.08, 0.15)
    period: tuple[int, int] = (10, 20)  # even periods only; bottom lands on a sample


@dataclass(frozen=True)
class StirParams:
    bowl_region: Box = Box((0.55, 0.55, 0.10), (0.75, 0.75, 0.14))
    radius: tuple[float, float] = (0.05, 0.08)
    period: tuple[int, int] = (10, 20)


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    home_pos: tuple[float, float, float] = (0.20, 0.20, 0.30)
    home_jitter: float = 0.02
    workspace: Box = Box((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))
    v_max: float = 0.04
    g_max: float = 0.25
    grasp_dist: float = 0.03
    contact_eps: float = 0.005
    t_max: int = 600
    shake: ShakeParams = ShakeParams()
    hammer: HammerParams = HammerParams()
    stir: StirParams = StirParams()

    def __post_init__(self):
        if self.task_id not in TASK_IDS:
            raise ValidationError(f"unknown task {self.task_id!r}")
        if self.v_max <= 0 or self.g_max <= 0 or self.grasp_dist <= 0:
            raise ValidationError("v_max, g_max, grasp_dist must be > 0")
        if self.t_max < 1:
            raise ValidationError(f"t_max must be >= 1, got {self.t_max}")
        if not self.workspace.contains(self.home_pos):
            raise ValidationError("home_pos outside workspace")
        regions = {
            "shake": self.shake.grasp_region,
            "hammer": self.hammer.anvil_region,
            "stir": self.stir.bowl_region,
        }
        if not self.workspace.contains_box(regions[self.task_id]):
            raise ValidationError(f"{self.task_id} region outside workspace")
        for rng_pair, name in (
            (self.shake.amplitude, "amplitude"),
            (self.shake.shake_height, "shake_height"),
            (self.hammer.lift_height, "lift_height"),
            (self.stir.radius, "radius"),
        ):
            lo, hi = _range_pair(rng_pair, name)
            if lo <= 0:
                raise ValidationError(f"{name} must be > 0, got {lo}")
        for per, name in (
            (self.shake.period, "shake period"),
            (self.hammer.period, "hammer period"),
            (self.stir.period, "stir period"),
        ):
            lo, hi = per
            if not (1 <= lo <= hi):
                raise ValidationError(f"{name} range [{lo}, {hi}] invalid")

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "home_pos": list(self.home_pos),
            "home_jitter": self.home_jitter,
            "workspace": self.workspace.to_dict(),
            "v_max": self.v_max,
            "g_max": self.g_max,
            "grasp_dist": self.grasp_dist,
            "contact_eps": self.contact_eps,
            "t_max": self.t_max,
            "shake": {
                "grasp_region": self.shake.grasp_region.to_dict(),
                "shake_height": list(self.shake.shake_height),
                "amplitude": list(self.shake.amplitude),
                "period": list(self.shake.period),
            },
            "hammer": {
                "anvil_region": self.hammer.anvil_region.to_dict(),
                "z_anvil": self.hammer.z_anvil,
                "lift_height": list(self.hammer.lift_height),
                "period": list(self.hammer.period),
            },
            "stir": {
                "bowl_region": self.stir.bowl_region.to_dict(),
                "radius": list(self.stir.radius),
                "period": list(self.stir.period),
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TaskSpec":
        kw = dict(
            task_id=d["task_id"],
            home_pos=tuple(d.get("home_pos", (0.20, 0.20, 0.30))),
            home_jitter=float(d.get("home_jitter", 0.02)),
            v_max=float(d.get("v_max", 0.04)),
            g_max=float(d.get("g_max", 0.25)),
            grasp_dist=float(d.get("grasp_dist", 0.03)),
            contact_eps=float(d.get("contact_eps", 0.005)),
            t_max=int(d.get("t_max", 600)),
        )
        if "workspace" in d:
            kw["workspace"] = Box.from_dict(d["workspace"])
        if "shake" in d:
            s = d["shake"]
            kw["shake"] = ShakeParams(
                grasp_region=Box.from_dict(s["grasp_region"]) if "grasp_region" in s
                else ShakeParams().grasp_region,
                shake_height=tuple(s.get("shake_height", (0.32, 0.38))),
                amplitude=tuple(s.get("amplitude", (0.05, 0.10))),
                period=tuple(s.get("period", (10, 20))),
            )
        if "hammer" in d:
            h = d["hammer"]
            kw["hammer"] = HammerParams(
                anvil_region=Box.from_dict(h["anvil_region"]) if "anvil_region" in h
                else HammerParams().anvil_region,
                z_anvil=float(h.get("z_anvil", 0.10)),
                lift_height=tuple(h.get("lift_height", (0.08, 0.15))),
                period=tuple(h.get("period", (10, 20))),
            )
        if "stir" in d:
            st = d["stir"]
            kw["stir"] = StirParams(
                bowl_region=Box.from_dict(st["bowl_region"]) if "bowl_region" in st
                else StirParams().bowl_region,
                radius=tuple(st.get("radius", (0.05, 0.08))),
                period=tuple(st.get("period", (10, 20))),
            )
        return cls(**kw)


@dataclass(frozen=True)
class EpisodeParams:
    """Realized per-episode parameters after jitter."""
    home: tuple[float, float, float]
    object_start: tuple[float, float, float]
    period: int
    amplitude: float = 0.0      # shake
    shake_height: float = 0.0   # shake
    lift_height: float = 0.0    # hammer
    radius: float = 0.0         # stir


def nominal_amplitude(spec: TaskSpec) -> float:
    lo, hi = spec.shake.amplitude
    return 0.5 * (lo + hi)


def draw_episode_params(spec: TaskSpec, seed: int) -> EpisodeParams:
    """Jittered episode parameters, coupled so every motion is trackable.

    Per-step displacement of the scripted cycle must stay under v_max, so
    shake amplitude is capped at 0.95 * v_max * P / (2*pi) and stir radius
    at 0.95 * v_max / (2*sin(pi/P)) for the drawn period P.
    """
    rng = derive_rng(seed, "episode")
    home = spec.workspace.clamp(
        np.asarray(spec.home_pos)
        + rng.uniform(-spec.home_jitter, spec.home_jitter, size=3)
    )
    if spec.task_id == "shake":
        p = int(rng.integers(spec.shake.period[0], spec.shake.period[1] + 1))
        a_lo, a_hi = spec.shake.amplitude
        a_cap = 0.95 * spec.v_max * p / (2.0 * np.pi)
        if a_cap < a_lo:
            raise ValidationError(
                f"amplitude floor {a_lo} untrackable at period {p} (cap {a_cap:.4f})"
            )
        amp = float(rng.uniform(a_lo, min(a_hi, a_cap)))
        height = float(rng.uniform(*spec.shake.shake_height))
        obj = spec.shake.grasp_region.sample(rng)
        return EpisodeParams(home=tuple(home), object_start=tuple(obj),
                             period=p, amplitude=amp, shake_height=height)
    if spec.task_id == "hammer":
        lo, hi = spec.hammer.period
        evens = [q for q in range(lo, hi + 1) if q % 2 == 0]
        if not evens:
            raise ValidationError(f"no even period in [{lo}, {hi}]")
        p = int(rng.choice(evens))
        l_lo, l_hi = spec.hammer.lift_height
        l_cap = 0.95 * spec.v_max * (p // 2)
        if l_cap < l_lo:
            raise ValidationError(
                f"lift floor {l_lo} untrackable at period {p} (cap {l_cap:.4f})"
            )
        lift = float(rng.uniform(l_lo, min(l_hi, l_cap)))
        xy = spec.hammer.anvil_region.sample(rng)
        obj = np.array([xy[0], xy[1], spec.hammer.z_anvil])
        return EpisodeParams(home=tuple(home), object_start=tuple(obj),
                             period=p, lift_height=lift)
    p = int(rng.integers(spec.stir.period[0], spec.stir.period[1] + 1))
    r_lo, r_hi = spec.stir.radius
    r_cap = 0.95 * spec.v_max / (2.0 * np.sin(np.pi / p))
    if r_cap < r_lo:
        raise ValidationError(
            f"radius floor {r_lo} untrackable at period {p} (cap {r_cap:.4f})"
        )
    radius = float(rng.uniform(r_lo, min(r_hi, r_cap)))
    center = spec.stir.bowl_region.sample(rng)
    return EpisodeParams(home=tuple(home), object_start=tuple(center),
                         period=p, radius=radius)
