"""Conditioning encoder, progress head, and FiLM-modulated denoiser.

Batching strategy: every fixed-shape stage (frame MLPs, fusion, FiLM,
backbone) runs as one matmul across the whole batch. The variable-length
pose-diff sequences are packed into one row stack: embedding, layer norm
and key/value projections run on the stack, and a single packed-attention
op reads out the CLS row per sample. Only that row feeds the fusion MLP,
so the rest of the encoder block (o-projection, second norm, FFN) runs on
the (B, d) readout. Graph size stays independent of batch size and of
history length.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from ..core.stats import NormalizationStats, normalize, standardize
from ..core.types import TASK_IDS, ValidationError
from ..nn.layers import AttentionBlock, Dense, Embedding, ParamStore
from ..nn.tensor import (
    Tensor,
    add,
    concat,
    embedding_lookup,
    film,
    gelu,
    packed_cls_attention,
    reshape,
    sinusoidal_encoding,
    slice2d,
)
from ..rng import derive_rng
from ..sampler import PolicyInput
from .config import PolicyConfig

TASK_INDEX = {name: i for i, name in enumerate(TASK_IDS)}


@dataclass
class PreparedInput:
    """One sample after normalization, ready for the network.

    high    : (k_high, 10) standardized visual frames
    diffs   : (L, 4) pose diffs in normalized proprio units, L >= 1
    recent  : (4 * local_window,) flattened normalized proprio frames
    """

    task_idx: int
    cycle_idx: int
    high: np.ndarray
    diffs: np.ndarray
    recent: np.ndarray


def prepare_input(
    pin: PolicyInput, stats: NormalizationStats, cfg: PolicyConfig
) -> PreparedInput:
    high = standardize(pin.high_frames, stats.visual_mean, stats.visual_std)
    span = stats.proprio_max - stats.proprio_min
    factor = np.divide(2.0, span, out=np.zeros_like(span), where=span > 0)
    diffs = pin.low_diffs * factor
    recent = normalize(
        pin.low_recent, stats.proprio_min, stats.proprio_max
    ).reshape(-1)
    if pin.instruction.task_id not in TASK_INDEX:
        raise ValidationError(f"unknown task {pin.instruction.task_id!r}")
    return PreparedInput(
        task_idx=TASK_INDEX[pin.instruction.task_id],
        cycle_idx=pin.instruction.target_cycles - 1,
        high=high,
        diffs=diffs,
        recent=recent,
    )


class PolicyModel:
    """All parameters plus the forward passes that use them."""

    def __init__(self, cfg: PolicyConfig, seed: int):
        self.cfg = cfg
        rng = derive_rng(seed, "init")
        store = ParamStore()
        d_low = cfg.d_low
        d_high = cfg.d_high
        k = cfg.sampler.k_high
        m = cfg.sampler.local_window

        self.task_emb = Embedding(store, "task_emb", len(TASK_IDS), 8, rng)
        self.cycle_emb = Embedding(store, "cycle_emb", 8, 8, rng)

        self.high_frame = Dense(store, "high_frame", 10, d_high, rng)
        self.high_fuse = Dense(store, "high_fuse", k * d_high, d_high, rng)

        self.diff_embed = Dense(store, "diff_embed", 4, d_low, rng)
        self.cls = store.add("cls", rng.normal(0.0, 0.02, size=(1, d_low)))
        self.att = AttentionBlock(store, "att", d_low, cfg.attention_heads, rng)
        self.recent_proj = Dense(store, "recent_proj", 4 * m, d_low, rng)

        fuse_in = 2 * d_low + d_high
        self.fuse1 = Dense(store, "fuse1", fuse_in, 2 * cfg.d_fuse, rng)
        self.fuse2 = Dense(store, "fuse2", 2 * cfg.d_fuse, cfg.d_fuse, rng)
        self.prog = Dense(store, "prog", cfg.d_fuse, 10, rng)

        self.t_proj = Dense(store, "t_proj", 32, 64, rng)
        cond_dim = cfg.d_lan + cfg.d_fuse
        self.film1 = Dense(store, "film1", cond_dim + 64, 128, rng)
        self.film2 = Dense(store, "film2", 128, 512, rng)
        self.bb1 = Dense(store, "bb1", cfg.chunk_dim, 128, rng)
        self.bb2 = Dense(store, "bb2", 128, 128, rng)
        self.bb3 = Dense(store, "bb3", 128, cfg.chunk_dim, rng)
        self.store = store

    def encode_batch(
        self, samples: Sequence[PreparedInput]
    ) -> Tuple[Tensor, Tensor]:
        """Returns (cond (B, 80), f_lh (B, 64))."""
        cfg = self.cfg
        n = len(samples)
        k = cfg.sampler.k_high

        high_all = np.concatenate([s.high for s in samples], axis=0)
        h = gelu(self.high_frame(Tensor(high_all)))
        f_h = gelu(self.high_fuse(reshape(h, n, k * cfg.d_high)))

        # Pack every sample's diff rows into one stack. The CLS row is the
        # same parameter for every sample and carries no position code, so
        # its query/key/value projections are computed once; the attention
        # readout of that row is all the downstream network consumes, and
        # the residual plus FFN tail of the block runs on the (B, d) readout.
        lens = [s.diffs.shape[0] for s in samples]
        diff_all = np.concatenate([s.diffs for s in samples], axis=0)
        pos_full = sinusoidal_encoding(np.arange(max(lens)), cfg.d_low)
        pos_all = np.concatenate([pos_full[:ln] for ln in lens], axis=0)
        rows = add(self.diff_embed(Tensor(diff_all)), Tensor(pos_all))

        att = self.att
        rows_n = att.ln1(rows)
        cls_n = att.ln1(self.cls.value)
        att_out = packed_cls_attention(
            att.q(cls_n),
            att.k(cls_n),
            att.v(cls_n),
            att.k(rows_n),
            att.v(rows_n),
            lens,
            att.heads,
        )
        x2 = add(self.cls.value, att.o(att_out))
        cls_feat = add(x2, att.f2(gelu(att.f1(att.ln2(x2)))))

        recent_all = np.stack([s.recent for s in samples], axis=0)
        rec_feat = gelu(self.recent_proj(Tensor(recent_all)))

        fused = concat([cls_feat, rec_feat, f_h], axis=1)
        f_lh = self.fuse2(gelu(self.fuse1(fused)))

        task_idx = np.array([s.task_idx for s in samples], dtype=np.int64)
        cycle_idx = np.array([s.cycle_idx for s in samples], dtype=np.int64)
        f_lan = concat(
            [
                embedding_lookup(self.task_emb.table.value, task_idx),
                embedding_lookup(self.cycle_emb.table.value, cycle_idx),
            ],
            axis=1,
        )
        cond = concat([f_lan, f_lh], axis=1)
        return cond, f_lh

    def progress_logits(self, f_lh: Tensor) -> Tensor:
        return self.prog(f_lh)

    def predict_noise(
        self, x_k: np.ndarray, ks: np.ndarray, cond: Tensor
    ) -> Tensor:
        """eps_hat (B, chunk_dim) for noisy chunks x_k at steps ks."""
        n = x_k.shape[0]
        t_emb = gelu(self.t_proj(Tensor(sinusoidal_encoding(ks, 32))))
        g = self.film2(gelu(self.film1(concat([cond, t_emb], axis=1))))
        ones = Tensor(np.ones((n, 128)))
        # FiLM scales start at identity: gamma = 1 + raw output.
        g1 = add(slice2d(g, 0, n, 0, 128), ones)
        b1 = slice2d(g, 0, n, 128, 256)
        g2 = add(slice2d(g, 0, n, 256, 384), ones)
        b2 = slice2d(g, 0, n, 384, 512)

        h = gelu(self.bb1(Tensor(x_k)))
        h = film(h, g1, b1)
        h = gelu(self.bb2(h))
        h = film(h, g2, b2)
        return self.bb3(h)
