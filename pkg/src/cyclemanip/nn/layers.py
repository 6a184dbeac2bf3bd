"""Parameter registry and the layer zoo used by the policy nets."""

from __future__ import annotations

import numpy as np

from ..core.types import ValidationError
from .tensor import (
    Tensor,
    add,
    affine,
    concat,
    embedding_lookup,
    gelu,
    layer_norm,
    matmul,
    scale,
    slice2d,
    softmax,
    transpose,
)


class Parameter:
    __slots__ = ("name", "value", "m", "v")

    def __init__(self, name: str, data: np.ndarray):
        self.name = name
        self.value = Tensor(data, leaf=True)
        self.m = np.zeros(self.value.shape)
        self.v = np.zeros(self.value.shape)


class ParamStore:
    """Ordered name -> Parameter registry; owns the checkpointable state."""

    def __init__(self):
        self._params: dict[str, Parameter] = {}

    def add(self, name: str, data: np.ndarray) -> Parameter:
        if name in self._params:
            raise ValidationError(f"duplicate parameter {name!r}")
        p = Parameter(name, data)
        self._params[name] = p
        return p

    def __getitem__(self, name: str) -> Parameter:
        return self._params[name]

    def __iter__(self):
        return iter(self._params.values())

    def __len__(self):
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def zero_grads(self) -> None:
        for p in self._params.values():
            p.value.grad = None

    def dead_params(self) -> list[str]:
        """Names whose gradient is absent or identically zero."""
        out = []
        for p in self._params.values():
            g = p.value.grad
            if g is None or not np.any(g):
                out.append(p.name)
        return out

    def shape_table(self) -> list[list]:
        return [[p.name, int(p.value.shape[0]), int(p.value.shape[1])]
                for p in self._params.values()]

    def to_blob(self) -> bytes:
        return b"".join(
            np.ascontiguousarray(p.value.data, dtype="<f8").tobytes()
            for p in self._params.values()
        )

    def load_blob(self, shape_table: list, blob: bytes) -> None:
        expect = sum(r * c for _, r, c in shape_table) * 8
        if len(blob) != expect:
            raise ValidationError(f"blob is {len(blob)} bytes, shapes need {expect}")
        mine = self.shape_table()
        if [list(row) for row in shape_table] != mine:
            raise ValidationError("checkpoint shape table does not match this model")
        off = 0
        for name, r, c in shape_table:
            n = r * c * 8
            arr = np.frombuffer(blob[off:off + n], dtype="<f8").reshape(r, c)
            # frombuffer views are read-only; copy so updates stay legal
            self._params[name].value.data = arr.copy()
            off += n


def init_dense(rng: np.random.Generator, nin: int, nout: int) -> np.ndarray:
    lim = np.sqrt(6.0 / (nin + nout))
    return rng.uniform(-lim, lim, size=(nin, nout))


def init_embedding(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    return rng.normal(0.0, 0.02, size=(n, d))


class Dense:
    def __init__(self, store: ParamStore, name: str, nin: int, nout: int,
                 rng: np.random.Generator, bias: bool = True):
        self.w = store.add(f"{name}.w", init_dense(rng, nin, nout))
        self.b = store.add(f"{name}.b", np.zeros((1, nout))) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        if self.b is None:
            return matmul(x, self.w.value)
        return affine(x, self.w.value, self.b.value)


class LayerNorm:
    def __init__(self, store: ParamStore, name: str, d: int):
        self.g = store.add(f"{name}.g", np.ones((1, d)))
        self.b = store.add(f"{name}.b", np.zeros((1, d)))

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.g.value, self.b.value)


class Embedding:
    def __init__(self, store: ParamStore, name: str, n: int, d: int,
                 rng: np.random.Generator):
        self.table = store.add(name, init_embedding(rng, n, d))

    def __call__(self, indices) -> Tensor:
        return embedding_lookup(self.table.value, indices)


class AttentionBlock:
    """Pre-norm encoder block: LN, multi-head self-attention, residual,
    LN, 4x gelu FFN, residual. No causal mask; the caller prepends CLS."""

    def __init__(self, store: ParamStore, name: str, d: int, heads: int,
                 rng: np.random.Generator):
        if d % heads != 0:
            raise ValidationError(f"width {d} not divisible by {heads} heads")
        self.d, self.heads = d, heads
        self.ln1 = LayerNorm(store, f"{name}.ln1", d)
        self.q = Dense(store, f"{name}.q", d, d, rng)
        # A key bias shifts every score in a softmax row equally, so its
        # gradient is identically zero; leave it out.
        self.k = Dense(store, f"{name}.k", d, d, rng, bias=False)
        self.v = Dense(store, f"{name}.v", d, d, rng)
        self.o = Dense(store, f"{name}.o", d, d, rng)
        self.ln2 = LayerNorm(store, f"{name}.ln2", d)
        self.f1 = Dense(store, f"{name}.ffn1", d, 4 * d, rng)
        self.f2 = Dense(store, f"{name}.ffn2", 4 * d, d, rng)

    def __call__(self, x: Tensor) -> Tensor:
        L, d = x.shape
        dh = d // self.heads
        h = self.ln1(x)
        q, k, v = self.q(h), self.k(h), self.v(h)
        outs = []
        for i in range(self.heads):
            qs = slice2d(q, 0, L, i * dh, (i + 1) * dh)
            ks = slice2d(k, 0, L, i * dh, (i + 1) * dh)
            vs = slice2d(v, 0, L, i * dh, (i + 1) * dh)
            att = softmax(scale(matmul(qs, transpose(ks)), 1.0 / np.sqrt(dh)))
            outs.append(matmul(att, vs))
        x2 = add(x, self.o(concat(outs, axis=1)))
        return add(x2, self.f2(gelu(self.f1(self.ln2(x2)))))
