"""Kinematic environment: velocity-clamped point effector, rate-limited
gripper, grasp/release rules, rigid attachment. No physics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core.types import ObsFrame, ProprioFrame, ValidationError, VisualProxy
from .tasks import EpisodeParams, TaskSpec, draw_episode_params


@dataclass(frozen=True)
class EnvState:
    t: int
    ee_pos: np.ndarray
    gripper: float
    object_pos: np.ndarray
    object_prev: np.ndarray
    grasped: bool
    params: EpisodeParams


def _observe(spec: TaskSpec, state: EnvState) -> ObsFrame:
    contact = 0.0
    if spec.task_id == "hammer" and state.ee_pos[2] <= spec.hammer.z_anvil + spec.contact_eps:
        contact = 1.0
    return ObsFrame(
        t=state.t,
        proprio=ProprioFrame(ee_pos=state.ee_pos.copy(), gripper=state.gripper),
        visual=VisualProxy(
            object_pos=state.object_pos.copy(),
            object_vel=state.object_pos - state.object_prev,
            ee_to_object=state.object_pos - state.ee_pos,
            contact_flag=contact,
        ),
    )


def reset(spec: TaskSpec, target_cycles: int, seed: int) -> tuple[EnvState, ObsFrame]:
    if not 1 <= target_cycles <= 8:
        raise ValidationError(f"target_cycles must be in [1, 8], got {target_cycles}")
    params = draw_episode_params(spec, seed)
    obj = np.asarray(params.object_start, dtype=np.float64)
    state = EnvState(
        t=0,
        ee_pos=np.asarray(params.home, dtype=np.float64),
        gripper=1.0,
        object_pos=obj.copy(),
        object_prev=obj.copy(),
        grasped=False,
        params=params,
    )
    return state, _observe(spec, state)


def step(spec: TaskSpec, state: EnvState, action) -> tuple[EnvState, ObsFrame]:
    """Advance one step toward an absolute (ee target, gripper target).

    Displacement is clamped to v_max along its direction; a reachable
    target is hit exactly (assigned, not integrated) so scripted paths
    stay analytically clean. The gripper moves at most g_max per step.
    """
    a = np.asarray(action, dtype=np.float64).reshape(-1)
    if a.shape != (4,) or not np.isfinite(a).all():
        raise ValidationError(f"action must be 4 finite numbers, got {a!r}")
    target, target_g = a[:3], float(a[3])

    delta = target - state.ee_pos
    dist = float(np.linalg.norm(delta))
    if dist <= spec.v_max:
        ee = target.copy()
    else:
        ee = state.ee_pos + delta * (spec.v_max / dist)
    ee = spec.workspace.clamp(ee)

    if abs(target_g - state.gripper) <= spec.g_max:
        grip = float(np.clip(target_g, 0.0, 1.0))
    else:
        grip = float(np.clip(
            state.gripper + np.sign(target_g - state.gripper) * spec.g_max, 0.0, 1.0))

    grasped = state.grasped
    if grasped and grip > 0.5:
        grasped = False
    elif (not grasped and grip < 0.5
          and float(np.linalg.norm(ee - state.object_pos)) < spec.grasp_dist):
        grasped = True

    obj = ee.copy() if grasped else state.object_pos.copy()
    new = EnvState(
        t=state.t + 1,
        ee_pos=ee,
        gripper=grip,
        object_pos=obj,
        object_prev=state.object_pos.copy(),
        grasped=grasped,
        params=state.params,
    )
    return new, _observe(spec, new)
