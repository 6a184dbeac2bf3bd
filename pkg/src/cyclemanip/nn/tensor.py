"""Reverse-mode autodiff over 2-D float64 arrays.

Every value is a (rows, cols) matrix; scalars are (1, 1). Ops build a
tape; backward() walks it in reverse topological order and accumulates
gradients into leaves. Forward outputs are checked finite on creation.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erf

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT2PI = 1.0 / np.sqrt(2.0 * np.pi)


class ShapeError(ValueError):
    pass


class NumericError(FloatingPointError):
    pass


class Tensor:
    __slots__ = ("data", "grad", "needs_grad", "_parents", "_backward")

    def __init__(self, data, parents=(), backward=None, leaf=False):
        a = np.ascontiguousarray(data, dtype=np.float64)
        if a.ndim == 1:
            a = a.reshape(1, -1)
        if a.ndim != 2:
            raise ShapeError(f"tensors are 2-D, got shape {a.shape}")
        self.data = a
        self.grad = None
        self._parents = parents
        self._backward = backward
        self.needs_grad = leaf or any(p.needs_grad for p in parents)

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() on shape {self.shape}")
        return float(self.data[0, 0])

    def __repr__(self):
        return f"Tensor{self.shape}"


def constant(data) -> Tensor:
    return Tensor(data)


def _out(data, parents, backward, op: str) -> Tensor:
    if not any(p.needs_grad for p in parents):
        t = Tensor(data)
    else:
        t = Tensor(data, parents=tuple(parents), backward=backward)
    # Single-pass finiteness gate: a nan or inf in any cell drags the whole
    # sum to nan or inf (inf - inf is nan), so nothing non-finite slips by.
    # A false alarm would need the sum of genuine values to overflow 1e308,
    # far beyond anything these ops produce.
    if not math.isfinite(float(t.data.sum())):
        raise NumericError(f"non-finite output of {op}")
    return t


def _acc(t: Tensor, g: np.ndarray) -> None:
    if not t.needs_grad:
        return
    if t.grad is None:
        t.grad = np.array(g)
    else:
        t.grad += g


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    for ax in (0, 1):
        if shape[ax] == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _binary_shape(a: Tensor, b: Tensor, op: str):
    sa, sb = a.shape, b.shape
    for ax in (0, 1):
        if sa[ax] != sb[ax] and sa[ax] != 1 and sb[ax] != 1:
            raise ShapeError(f"{op}: shapes {sa} and {sb} do not broadcast")


def add(a: Tensor, b: Tensor) -> Tensor:
    _binary_shape(a, b, "add")

    def bwd(g):
        _acc(a, _unbroadcast(g, a.shape))
        _acc(b, _unbroadcast(g, b.shape))

    t = _out(a.data + b.data, (a, b), None, "add")
    t._backward = bwd if t._parents else None
    return t


def mul(a: Tensor, b: Tensor) -> Tensor:
    _binary_shape(a, b, "mul")
    data = a.data * b.data

    def bwd(g):
        _acc(a, _unbroadcast(g * b.data, a.shape))
        _acc(b, _unbroadcast(g * a.data, b.shape))

    t = _out(data, (a, b), None, "mul")
    t._backward = bwd if t._parents else None
    return t


def scale(a: Tensor, s: float) -> Tensor:
    s = float(s)
    t = _out(a.data * s, (a,), None, "scale")
    t._backward = (lambda g: _acc(a, g * s)) if t._parents else None
    return t


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dims differ, {a.shape} @ {b.shape}")
    data = a.data @ b.data

    def bwd(g):
        _acc(a, g @ b.data.T)
        _acc(b, a.data.T @ g)

    t = _out(data, (a, b), None, "matmul")
    t._backward = bwd if t._parents else None
    return t


def affine(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """x @ w + b with b broadcast over rows; one tape node."""
    if x.shape[1] != w.shape[0]:
        raise ShapeError(f"affine: inner dims differ, {x.shape} @ {w.shape}")
    if b.shape != (1, w.shape[1]):
        raise ShapeError(f"affine: bias shape {b.shape}, want (1, {w.shape[1]})")
    data = x.data @ w.data + b.data

    def bwd(g):
        _acc(x, g @ w.data.T)
        _acc(w, x.data.T @ g)
        _acc(b, g.sum(axis=0, keepdims=True))

    t = _out(data, (x, w, b), None, "affine")
    t._backward = bwd if t._parents else None
    return t


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0

    def bwd(g):
        _acc(a, g * mask)

    t = _out(a.data * mask, (a,), None, "relu")
    t._backward = bwd if t._parents else None
    return t


def gelu(a: Tensor) -> Tensor:
    """Exact erf form; smooth everywhere, which keeps gradcheck tight."""
    x = a.data
    cdf = 0.5 * (1.0 + erf(x * _INV_SQRT2))

    def bwd(g):
        pdf = _INV_SQRT2PI * np.exp(-0.5 * x * x)
        _acc(a, g * (cdf + x * pdf))

    t = _out(x * cdf, (a,), None, "gelu")
    t._backward = bwd if t._parents else None
    return t


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    d = x.shape[1]
    if gain.shape != (1, d) or bias.shape != (1, d):
        raise ShapeError(f"layer_norm: params {gain.shape}/{bias.shape} vs input {x.shape}")
    mu = x.data.mean(axis=1, keepdims=True)
    var = x.data.var(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv

    def bwd(g):
        gx_hat = g * gain.data
        _acc(
            x,
            inv * (gx_hat - gx_hat.mean(axis=1, keepdims=True)
                   - xhat * (gx_hat * xhat).mean(axis=1, keepdims=True)),
        )
        _acc(gain, (g * xhat).sum(axis=0, keepdims=True))
        _acc(bias, g.sum(axis=0, keepdims=True))

    t = _out(xhat * gain.data + bias.data, (x, gain, bias), None, "layer_norm")
    t._backward = bwd if t._parents else None
    return t


def softmax(a: Tensor) -> Tensor:
    z = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=1, keepdims=True)

    def bwd(g):
        _acc(a, y * (g - (g * y).sum(axis=1, keepdims=True)))

    t = _out(y, (a,), None, "softmax")
    t._backward = bwd if t._parents else None
    return t


def packed_cls_attention(
    q_cls: Tensor,
    k_cls: Tensor,
    v_cls: Tensor,
    k_rows: Tensor,
    v_rows: Tensor,
    lengths,
    heads: int,
) -> Tensor:
    """Multi-head attention readout of one shared query over packed blocks.

    k_rows/v_rows stack B variable-length key/value blocks along axis 0;
    lengths[i] is block i's row count. Each block is prefixed by the shared
    (1, d) k_cls/v_cls row, and the single (1, d) q_cls row attends over the
    prefixed block. Returns (B, d) with head readouts concatenated.

    One tape node covers the whole batch: the per-block softmaxes run in
    plain numpy here, so graph size stays independent of batch size and of
    the block lengths.
    """
    d = q_cls.shape[1]
    if heads < 1 or d % heads != 0:
        raise ShapeError(f"width {d} does not split into {heads} heads")
    for name, t in (("q_cls", q_cls), ("k_cls", k_cls), ("v_cls", v_cls)):
        if t.shape != (1, d):
            raise ShapeError(f"{name} must be (1, {d}), got {t.shape}")
    if k_rows.shape != v_rows.shape or k_rows.shape[1] != d:
        raise ShapeError(
            f"key/value rows disagree: {k_rows.shape} vs {v_rows.shape}"
        )
    lens = [int(x) for x in lengths]
    if not lens or min(lens) < 1:
        raise ShapeError("every block needs at least one row")
    if sum(lens) != k_rows.shape[0]:
        raise ShapeError(
            f"lengths sum to {sum(lens)} but rows have {k_rows.shape[0]}"
        )

    dh = d // heads
    inv = 1.0 / np.sqrt(dh)
    q = q_cls.data[0]
    kc = k_cls.data[0]
    vc = v_cls.data[0]
    K = k_rows.data
    V = v_rows.data
    nb = len(lens)
    out = np.empty((nb, d))
    probs: list[list[np.ndarray]] = []
    offsets: list[int] = []
    off = 0
    for i, ln in enumerate(lens):
        offsets.append(off)
        kb = K[off : off + ln]
        vb = V[off : off + ln]
        ps = []
        for h in range(heads):
            sl = slice(h * dh, (h + 1) * dh)
            s = np.empty(ln + 1)
            s[0] = q[sl] @ kc[sl]
            s[1:] = kb[:, sl] @ q[sl]
            s *= inv
            s -= s.max()
            p = np.exp(s)
            p /= p.sum()
            out[i, sl] = p[0] * vc[sl] + p[1:] @ vb[:, sl]
            ps.append(p)
        probs.append(ps)
        off += ln

    def bwd(g):
        dq = np.zeros(d)
        dkc = np.zeros(d)
        dvc = np.zeros(d)
        dK = np.zeros_like(K)
        dV = np.zeros_like(V)
        for i, ln in enumerate(lens):
            o0 = offsets[i]
            kb = K[o0 : o0 + ln]
            vb = V[o0 : o0 + ln]
            for h in range(heads):
                sl = slice(h * dh, (h + 1) * dh)
                p = probs[i][h]
                gh = g[i, sl]
                dvc[sl] += p[0] * gh
                dV[o0 : o0 + ln, sl] += np.outer(p[1:], gh)
                dp = np.empty(ln + 1)
                dp[0] = gh @ vc[sl]
                dp[1:] = vb[:, sl] @ gh
                ds = p * (dp - dp @ p)
                ds *= inv
                dq[sl] += ds[0] * kc[sl] + ds[1:] @ kb[:, sl]
                dkc[sl] += ds[0] * q[sl]
                dK[o0 : o0 + ln, sl] += np.outer(ds[1:], q[sl])
        _acc(q_cls, dq.reshape(1, d))
        _acc(k_cls, dkc.reshape(1, d))
        _acc(v_cls, dvc.reshape(1, d))
        _acc(k_rows, dK)
        _acc(v_rows, dV)

    t = _out(out, (q_cls, k_cls, v_cls, k_rows, v_rows), None, "packed_cls_attention")
    t._backward = bwd if t._parents else None
    return t


def concat(parts: list[Tensor], axis: int = 1) -> Tensor:
    if axis not in (0, 1):
        raise ShapeError(f"concat axis must be 0 or 1, got {axis}")
    other = 1 - axis
    w = parts[0].shape[other]
    for p in parts:
        if p.shape[other] != w:
            raise ShapeError(
                f"concat axis {axis}: shapes {[p.shape for p in parts]} disagree"
            )
    sizes = [p.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def bwd(g):
        for p, o0, o1 in zip(parts, offsets[:-1], offsets[1:]):
            piece = g[o0:o1, :] if axis == 0 else g[:, o0:o1]
            _acc(p, piece)

    t = _out(np.concatenate([p.data for p in parts], axis=axis), tuple(parts), None, "concat")
    t._backward = bwd if t._parents else None
    return t


def slice2d(a: Tensor, r0: int, r1: int, c0: int, c1: int) -> Tensor:
    n, m = a.shape
    if not (0 <= r0 < r1 <= n and 0 <= c0 < c1 <= m):
        raise ShapeError(f"slice [{r0}:{r1}, {c0}:{c1}] out of bounds for {a.shape}")

    def bwd(g):
        if a.grad is None:
            a.grad = np.zeros(a.shape)
        a.grad[r0:r1, c0:c1] += g

    t = _out(a.data[r0:r1, c0:c1].copy(), (a,), None, "slice")
    t._backward = bwd if t._parents else None
    return t


def reshape(a: Tensor, rows: int, cols: int) -> Tensor:
    if rows * cols != a.data.size:
        raise ShapeError(f"reshape {a.shape} -> ({rows}, {cols}) changes size")

    def bwd(g):
        _acc(a, g.reshape(a.shape))

    t = _out(a.data.reshape(rows, cols), (a,), None, "reshape")
    t._backward = bwd if t._parents else None
    return t


def transpose(a: Tensor) -> Tensor:
    def bwd(g):
        _acc(a, g.T)

    t = _out(a.data.T, (a,), None, "transpose")
    t._backward = bwd if t._parents else None
    return t


def embedding_lookup(table: Tensor, indices) -> Tensor:
    idx = np.asarray(indices, dtype=np.intp).reshape(-1)
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise ShapeError(f"embedding index out of range for table {table.shape}")

    def bwd(g):
        if table.grad is None:
            table.grad = np.zeros(table.shape)
        np.add.at(table.grad, idx, g)

    t = _out(table.data[idx], (table,), None, "embedding_lookup")
    t._backward = bwd if t._parents else None
    return t


def film(hidden: Tensor, gamma: Tensor, beta: Tensor) -> Tensor:
    """Feature-wise affine modulation: gamma * hidden + beta, same shapes."""
    if not (hidden.shape == gamma.shape == beta.shape):
        raise ShapeError(
            f"film: shapes {hidden.shape}/{gamma.shape}/{beta.shape} must match"
        )
    data = gamma.data * hidden.data + beta.data

    def bwd(g):
        _acc(hidden, g * gamma.data)
        _acc(gamma, g * hidden.data)
        _acc(beta, g)

    t = _out(data, (hidden, gamma, beta), None, "film")
    t._backward = bwd if t._parents else None
    return t


def mse_loss(pred: Tensor, target) -> Tensor:
    tgt = target.data if isinstance(target, Tensor) else np.asarray(target, dtype=np.float64)
    if tgt.shape != pred.shape:
        raise ShapeError(f"mse_loss: pred {pred.shape} vs target {tgt.shape}")
    diff = pred.data - tgt

    def bwd(g):
        _acc(pred, (2.0 * g[0, 0] / diff.size) * diff)

    t = _out([[float(np.mean(diff * diff))]], (pred,), None, "mse_loss")
    t._backward = bwd if t._parents else None
    return t


def cross_entropy_loss(logits: Tensor, labels) -> Tensor:
    """Mean CE of (n, c) logits against n integer class labels."""
    y = np.asarray(labels, dtype=np.intp).reshape(-1)
    n, c = logits.shape
    if y.size != n:
        raise ShapeError(f"cross_entropy: {n} logit rows vs {y.size} labels")
    if y.size and (y.min() < 0 or y.max() >= c):
        raise ShapeError(f"cross_entropy: label out of range [0, {c})")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = float(np.mean(lse[:, 0] - z[np.arange(n), y]))

    def bwd(g):
        p = np.exp(z - lse)
        p[np.arange(n), y] -= 1.0
        _acc(logits, (g[0, 0] / n) * p)

    t = _out([[loss]], (logits,), None, "cross_entropy")
    t._backward = bwd if t._parents else None
    return t


def sinusoidal_encoding(positions, d: int) -> np.ndarray:
    """Fixed sin/cos position code, (len(positions), d); d even."""
    if d % 2 != 0:
        raise ShapeError(f"encoding dim must be even, got {d}")
    pos = np.asarray(positions, dtype=np.float64).reshape(-1, 1)
    i = np.arange(d // 2, dtype=np.float64)[None, :]
    ang = pos / np.power(10000.0, 2.0 * i / d)
    out = np.empty((pos.shape[0], d))
    out[:, 0::2] = np.sin(ang)
    out[:, 1::2] = np.cos(ang)
    return out


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into .grad over the recorded tape."""
    if loss.shape != (1, 1):
        raise ShapeError(f"backward needs a scalar, got {loss.shape}")
    if not loss.needs_grad:
        return
    order: list[Tensor] = []
    seen = {id(loss)}
    stack: list[tuple[Tensor, iter]] = [(loss, iter(loss._parents))]
    while stack:
        node, it = stack[-1]
        advanced = False
        for p in it:
            if p.needs_grad and id(p) not in seen:
                seen.add(id(p))
                stack.append((p, iter(p._parents)))
                advanced = True
                break
        if not advanced:
            order.append(node)
            stack.pop()
    loss.grad = np.ones((1, 1))
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)
