"""Inference: chunk prediction and closed-loop rollout."""

from __future__ import annotations

from typing import List, Optional, Sequence

import numpy as np

from ..core.stats import denormalize
from ..core.types import ActionChunk, Instruction, ObsFrame
from ..env.sim import reset, step
from ..env.tasks import TaskSpec
from ..rng import derive_rng, derive_seed
from ..sampler import build_policy_input
from .checkpoint import CheckpointBundle
from .diffusion import ddim_denoise, ddim_step_indices, make_schedule
from .model import prepare_input

HOME_RADIUS = 0.05
HOME_DWELL = 10


def act_raw(
    history: Sequence[ObsFrame],
    instruction: Instruction,
    bundle: CheckpointBundle,
    seed: int,
    ddim_steps: Optional[int] = None,
) -> np.ndarray:
    """Normalized action chunk (1, chunk_dim) for the given history.

    Deterministic in (history, instruction, checkpoint, seed): the
    initial noise is derived from the seed and the last frame index,
    and DDIM runs with eta = 0.
    """
    cfg = bundle.cfg
    no_history = bool(bundle.meta.get("no_history", False))
    pin = build_policy_input(
        history, instruction, cfg.sampler, no_history=no_history
    )
    sample = prepare_input(pin, bundle.stats, cfg)
    cond, _ = bundle.model.encode_batch([sample])

    rng = derive_rng(seed, "act", history[-1].t)
    x = rng.standard_normal((1, cfg.chunk_dim))
    sched = make_schedule(cfg)
    steps = ddim_step_indices(
        cfg.diffusion_train_steps, ddim_steps or cfg.ddim_steps
    )

    def predict(xk: np.ndarray, ks: np.ndarray) -> np.ndarray:
        return bundle.model.predict_noise(xk, ks, cond).data

    return ddim_denoise(x, steps, sched, predict)


def act(
    history: Sequence[ObsFrame],
    instruction: Instruction,
    bundle: CheckpointBundle,
    seed: int,
) -> ActionChunk:
    """Denormalized action chunk. The sampler clamps its running x0
    estimate to the normalized action box, so rows land inside the
    training action range by construction."""
    cfg = bundle.cfg
    raw = act_raw(history, instruction, bundle, seed)
    rows = raw.reshape(cfg.horizon, cfg.action_dim)
    actions = denormalize(rows, bundle.stats.action_min, bundle.stats.action_max)
    return ActionChunk(actions=actions)


def rollout(
    spec: TaskSpec,
    instruction: Instruction,
    bundle: CheckpointBundle,
    seed: int,
    t_max: Optional[int] = None,
) -> List[ObsFrame]:
    """Run the policy closed-loop from a fresh episode.

    Each predicted chunk is executed for exec_horizon steps before
    re-planning. The episode ends early once the end effector, having
    left the home ball, sits inside it for HOME_DWELL consecutive
    frames; otherwise it is cut at exactly t_max frames.
    """
    limit = spec.t_max if t_max is None else t_max
    state, obs = reset(spec, instruction.target_cycles, derive_seed(seed, "env"))
    frames: List[ObsFrame] = [obs]
    home = frames[0].proprio.ee_pos
    left_home = False
    dwell = 0
    while len(frames) < limit:
        chunk = act(frames, instruction, bundle, seed)
        for action in chunk.actions[: bundle.cfg.exec_horizon]:
            state, obs = step(spec, state, action)
            frames.append(obs)
            dist = float(np.linalg.norm(obs.proprio.ee_pos - home))
            if dist > HOME_RADIUS:
                left_home = True
                dwell = 0
            elif left_home:
                dwell += 1
                if dwell >= HOME_DWELL:
                    return frames
            if len(frames) >= limit:
                return frames
    return frames
