"""Dataset preparation and the training loop.

Anchors are every frame of every demonstration (stride 1). Each anchor
pairs the histories visible at that frame with the next `horizon`
actions, back-padded by repeating the final action near the episode
end. Noise draws are a pure function of (sample content, epoch, seed),
so duplicated anchors receive identical noise and the loss is invariant
to dataset order.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..core.stats import NormalizationStats, normalize, standardize
from ..core.types import Demonstration, progress_label
from ..nn.optim import OptimizerConfig, adam_step
from ..nn.tensor import (
    Tensor,
    add,
    backward,
    cross_entropy_loss,
    mse_loss,
    scale,
)
from ..rng import derive_rng
from ..sampler import sample_high_indices
from .config import PolicyConfig
from .diffusion import DiffusionSchedule, add_noise, make_schedule
from .model import TASK_INDEX, PolicyModel, PreparedInput

HOLDOUT_EVERY = 20


@dataclass
class PreparedDemo:
    """Per-demo normalized arrays shared by all of its anchors."""

    task_idx: int
    cycle_idx: int
    visual_std: np.ndarray
    proprio_norm: np.ndarray
    diffs_norm: np.ndarray
    actions_norm: np.ndarray
    episode_len: int


@dataclass
class TrainSample:
    inp: PreparedInput
    chunk: np.ndarray
    y: int
    content_digest: bytes


def prepare_demo(demo: Demonstration, stats: NormalizationStats) -> PreparedDemo:
    proprio_norm = normalize(
        demo.proprio_array(), stats.proprio_min, stats.proprio_max
    )
    diffs = np.zeros_like(proprio_norm)
    diffs[1:] = np.diff(proprio_norm, axis=0)
    return PreparedDemo(
        task_idx=TASK_INDEX[demo.instruction.task_id],
        cycle_idx=demo.instruction.target_cycles - 1,
        visual_std=standardize(
            demo.visual_array(), stats.visual_mean, stats.visual_std
        ),
        proprio_norm=proprio_norm,
        diffs_norm=diffs,
        actions_norm=normalize(
            demo.action_array(), stats.action_min, stats.action_max
        ),
        episode_len=demo.episode_len,
    )


def assemble_sample(
    p: PreparedDemo, t: int, cfg: PolicyConfig, no_history: bool
) -> TrainSample:
    k = cfg.sampler.k_high
    m = cfg.sampler.local_window
    length = p.episode_len

    if no_history:
        idx = [t] * k
        cap = m
    else:
        idx = sample_high_indices(t, k)
        cap = cfg.sampler.low_history_cap
    high = p.visual_std[np.asarray(idx)]

    lo = max(0, t + 1 - cap)
    diffs = p.diffs_norm[lo : t + 1]

    lo_r = t - m + 1
    if lo_r < 0:
        pad = np.repeat(p.proprio_norm[:1], -lo_r, axis=0)
        recent = np.concatenate([pad, p.proprio_norm[: t + 1]], axis=0)
    else:
        recent = p.proprio_norm[lo_r : t + 1]
    recent = recent.reshape(-1)

    a_idx = np.minimum(np.arange(t, t + cfg.horizon), length - 1)
    chunk = p.actions_norm[a_idx].reshape(-1)
    y = progress_label(t, length).y

    h = hashlib.sha256()
    h.update(high.tobytes())
    h.update(diffs.tobytes())
    h.update(recent.tobytes())
    h.update(chunk.tobytes())
    h.update(struct.pack("<qqq", p.task_idx, p.cycle_idx, y))
    inp = PreparedInput(
        task_idx=p.task_idx,
        cycle_idx=p.cycle_idx,
        high=high,
        diffs=diffs,
        recent=recent,
    )
    return TrainSample(inp=inp, chunk=chunk, y=y, content_digest=h.digest())


def sample_draws(
    s: TrainSample, epoch: int, seed: int, n_steps: int, chunk_dim: int
) -> Tuple[int, np.ndarray]:
    """Diffusion step and noise for one sample, tied to its content."""
    h = hashlib.sha256()
    h.update(s.content_digest)
    h.update(struct.pack("<qq", epoch, seed))
    rng = np.random.default_rng(int.from_bytes(h.digest()[:8], "little"))
    return int(rng.integers(0, n_steps)), rng.standard_normal(chunk_dim)


def batch_loss(
    model: PolicyModel,
    samples: Sequence[TrainSample],
    draws: Sequence[Tuple[int, np.ndarray]],
    sched: DiffusionSchedule,
    alpha: float,
    beta: float,
) -> Tuple[Tensor, float, float]:
    """Weighted denoising + progress loss over one batch.

    Returns (loss tensor, mse value, ce value). With beta == 0 the CE
    branch is kept out of the graph entirely so the loss value equals
    the bare MSE bit for bit.
    """
    cond, f_lh = model.encode_batch([s.inp for s in samples])
    x0 = np.stack([s.chunk for s in samples], axis=0)
    ks = np.array([d[0] for d in draws], dtype=np.int64)
    eps = np.stack([d[1] for d in draws], axis=0)
    x_k = add_noise(x0, ks, eps, sched)
    eps_hat = model.predict_noise(x_k, ks, cond)
    mse = mse_loss(eps_hat, Tensor(eps))

    ys = np.array([s.y for s in samples], dtype=np.int64)
    logits = model.progress_logits(f_lh)
    ce = cross_entropy_loss(logits, ys)

    if beta == 0.0:
        loss = mse if alpha == 1.0 else scale(mse, alpha)
    else:
        loss = add(scale(mse, alpha), scale(ce, beta))
    return loss, float(mse.data[0, 0]), float(ce.data[0, 0])


def progress_accuracy(
    model: PolicyModel, samples: Sequence[TrainSample], batch: int = 256
) -> float:
    """Fraction of samples whose argmax progress bin matches the label."""
    if not samples:
        return float("nan")
    hits = 0
    for i in range(0, len(samples), batch):
        part = samples[i : i + batch]
        _, f_lh = model.encode_batch([s.inp for s in part])
        logits = model.progress_logits(f_lh).data
        pred = np.argmax(logits, axis=1)
        hits += int(np.sum(pred == np.array([s.y for s in part])))
    return hits / len(samples)


def train(
    demos: Sequence[Demonstration],
    stats: NormalizationStats,
    cfg: PolicyConfig,
    seed: int,
    no_history: bool = False,
    on_epoch: Optional[Callable[[int, int, float], None]] = None,
) -> Tuple[PolicyModel, dict, List[dict]]:
    """Train a policy; returns (model, metadata, curve rows).

    Every optimizer step appends one curve row
    {step, lr, loss, mse, ce}. Anchors at positions divisible-by-20
    (offset 7) are held out of training and scored for progress
    accuracy afterwards.
    """
    prepared = [prepare_demo(d, stats) for d in demos]
    all_samples: List[TrainSample] = []
    for p in prepared:
        for t in range(p.episode_len):
            all_samples.append(assemble_sample(p, t, cfg, no_history))
    holdout = [s for i, s in enumerate(all_samples) if i % HOLDOUT_EVERY == 7]
    train_set = [s for i, s in enumerate(all_samples) if i % HOLDOUT_EVERY != 7]
    if not train_set:
        raise ValueError("no training anchors")

    steps_per_epoch = math.ceil(len(train_set) / cfg.batch)
    total_steps = cfg.epochs * steps_per_epoch
    ocfg = OptimizerConfig(total_steps=total_steps)
    model = PolicyModel(cfg, seed)
    sched = make_schedule(cfg)

    curve: List[dict] = []
    step = 0
    for epoch in range(cfg.epochs):
        perm = derive_rng(seed, "shuffle", epoch).permutation(len(train_set))
        epoch_loss = 0.0
        for b in range(steps_per_epoch):
            batch_idx = perm[b * cfg.batch : (b + 1) * cfg.batch]
            samples = [train_set[i] for i in batch_idx]
            draws = [
                sample_draws(
                    s, epoch, seed, cfg.diffusion_train_steps, cfg.chunk_dim
                )
                for s in samples
            ]
            loss, mse_v, ce_v = batch_loss(
                model, samples, draws, sched, cfg.alpha_loss, cfg.beta_loss
            )
            backward(loss)
            lr = adam_step(model.store, step, ocfg)
            curve.append(
                {
                    "step": step,
                    "lr": lr,
                    "loss": float(loss.data[0, 0]),
                    "mse": mse_v,
                    "ce": ce_v,
                }
            )
            epoch_loss += float(loss.data[0, 0])
            step += 1
        if on_epoch is not None:
            on_epoch(epoch, step, epoch_loss / steps_per_epoch)

    acc = progress_accuracy(model, holdout) if holdout else None
    meta = {
        "seed": seed,
        "no_history": bool(no_history),
        "beta_loss": cfg.beta_loss,
        "epochs": cfg.epochs,
        "train_anchors": len(train_set),
        "holdout_anchors": len(holdout),
        "total_steps": total_steps,
        "final_loss": curve[-1]["loss"],
        "holdout_progress_accuracy": acc,
        "task_ids": sorted({d.instruction.task_id for d in demos}),
    }
    return model, meta, curve
