"""Differentiable primitives: layers, activations, losses.

Every operation computes its forward result eagerly in float64 and, when
a tape is active and some input participates in differentiation, records
a node whose closure implements the exact reverse-mode rule. Forwards
without an active tape are pure numpy (inference path).
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import (
    ConfigurationError,
    DegenerateBatchError,
    DimensionError,
    EmptySequenceError,
    SequenceTooShortError,
)
from .rng import RngStream
from .tensor import Node, Tensor, active_tape

_TRACK_ATTR = "_tracked"


def _tracked(tape) -> set:
    t = getattr(tape, _TRACK_ATTR, None)
    if t is None:
        t = set()
        setattr(tape, _TRACK_ATTR, t)
    return t


def _emit(op: str, inputs: Sequence[Tensor], out_data: np.ndarray, backward_fn) -> Tensor:
    out = Tensor(out_data)
    tape = active_tape()
    if tape is not None:
        tracked = _tracked(tape)
        if any(t.requires_grad or id(t) in tracked for t in inputs):
            tape.record(Node(op, inputs, out, backward_fn))
            tracked.add(id(out))
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum out axes that numpy broadcasting expanded."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise / structural


def add(a: Tensor, b: Tensor) -> Tensor:
    def bwd(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _emit("add", (a, b), a.data + b.data, bwd)


def sub(a: Tensor, b: Tensor) -> Tensor:
    def bwd(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _emit("sub", (a, b), a.data - b.data, bwd)


def mul(a: Tensor, b: Tensor) -> Tensor:
    ad, bd = a.data, b.data

    def bwd(g):
        return _unbroadcast(g * bd, a.shape), _unbroadcast(g * ad, b.shape)

    return _emit("mul", (a, b), ad * bd, bwd)


def scale(a: Tensor, c: float) -> Tensor:
    def bwd(g):
        return (g * c,)

    return _emit("scale", (a,), a.data * c, bwd)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    ad, bd = a.data, b.data
    if ad.shape[-1] != bd.shape[-2]:
        raise DimensionError(f"matmul inner dims differ: {ad.shape} @ {bd.shape}")

    def bwd(g):
        ga = _unbroadcast(g @ bd.swapaxes(-1, -2), a.shape)
        gb = _unbroadcast(ad.swapaxes(-1, -2) @ g, b.shape)
        return ga, gb

    return _emit("matmul", (a, b), ad @ bd, bwd)


def reshape(a: Tensor, shape) -> Tensor:
    old = a.shape

    def bwd(g):
        return (g.reshape(old),)

    return _emit("reshape", (a,), a.data.reshape(shape), bwd)


def transpose(a: Tensor, axes) -> Tensor:
    inv = np.argsort(axes)

    def bwd(g):
        return (g.transpose(inv),)

    return _emit("transpose", (a,), a.data.transpose(axes), bwd)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bwd(g):
        slicer = [slice(None)] * g.ndim
        outs = []
        for i in range(len(sizes)):
            slicer[axis] = slice(offsets[i], offsets[i + 1])
            outs.append(g[tuple(slicer)])
        return tuple(outs)

    return _emit("concat", tuple(tensors), np.concatenate([t.data for t in tensors], axis=axis), bwd)


def mean(a: Tensor) -> Tensor:
    n = a.size

    def bwd(g):
        return (np.full(a.shape, float(g) / n),)

    return _emit("mean", (a,), np.asarray(a.data.mean()), bwd)


def total(a: Tensor) -> Tensor:
    """Sum of all elements (scalar output)."""

    def bwd(g):
        return (np.full(a.shape, float(g)),)

    return _emit("total", (a,), np.asarray(a.data.sum()), bwd)


def index_time(a: Tensor, t: int) -> Tensor:
    """Select one step from the time axis: (B, T, H) -> (B, H) or (T, H) -> (H,)."""
    axis = a.ndim - 2
    if axis < 0:
        raise DimensionError(f"index_time expects >= 2 dims, got shape {a.shape}")
    t_idx = t if t >= 0 else a.shape[axis] + t
    if not 0 <= t_idx < a.shape[axis]:
        raise DimensionError(f"time index {t} outside sequence of length {a.shape[axis]}")
    sl = (slice(None),) * axis + (t_idx,)

    def bwd(g):
        gx = np.zeros(a.shape)
        gx[sl] = g
        return (gx,)

    return _emit("index_time", (a,), a.data[sl], bwd)


# ---------------------------------------------------------------------------
# activations


def relu(a: Tensor) -> Tensor:
    pos = a.data > 0

    def bwd(g):
        return (g * pos,)

    return _emit("relu", (a,), np.where(pos, a.data, 0.0), bwd)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(a: Tensor) -> Tensor:
    s = _sigmoid(a.data)

    def bwd(g):
        return (g * s * (1.0 - s),)

    return _emit("sigmoid", (a,), s, bwd)


def tanh(a: Tensor) -> Tensor:
    t = np.tanh(a.data)

    def bwd(g):
        return (g * (1.0 - t * t),)

    return _emit("tanh", (a,), t, bwd)


def softmax(a: Tensor) -> Tensor:
    """Softmax over the last dimension, max-shifted for stability."""
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=-1, keepdims=True)

    def bwd(g):
        dot = (g * s).sum(axis=-1, keepdims=True)
        return ((g - dot) * s,)

    return _emit("softmax", (a,), s, bwd)


def activation(a: Tensor, kind: str) -> Tensor:
    if kind == "relu":
        return relu(a)
    if kind == "sigmoid":
        return sigmoid(a)
    if kind == "softmax_over_last_dim":
        return softmax(a)
    raise ConfigurationError(f"unknown activation kind: {kind!r}")


# ---------------------------------------------------------------------------
# layers


def linear(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Affine map over the last dimension; leading dims preserved."""
    xd, wd, bd = x.data, weight.data, bias.data
    if wd.ndim != 2 or bd.shape != (wd.shape[0],):
        raise DimensionError(f"linear params inconsistent: weight {wd.shape}, bias {bd.shape}")
    if xd.shape[-1] != wd.shape[1]:
        raise DimensionError(f"linear input dim {xd.shape[-1]} != weight in-dim {wd.shape[1]}")
    lead = xd.shape[:-1]
    x2 = xd.reshape(-1, wd.shape[1])
    out = (x2 @ wd.T + bd).reshape(*lead, wd.shape[0])

    def bwd(g):
        g2 = g.reshape(-1, wd.shape[0])
        gx = (g2 @ wd).reshape(xd.shape)
        gw = g2.T @ x2
        gb = g2.sum(axis=0)
        return gx, gw, gb

    return _emit("linear", (x, weight, bias), out, bwd)


def conv1d(x: Tensor, kernels: Tensor, bias: Tensor, stride: int) -> Tensor:
    """Valid (unpadded) strided 1D convolution along the time axis.

    x: (T, D_in) or (B, T, D_in); kernels: (K, D_in, k); bias: (K,).
    Output length T' = floor((T - k) / stride) + 1.
    """
    if not isinstance(stride, int) or stride < 1:
        raise ConfigurationError(f"stride must be a positive int, got {stride!r}")
    kd, bd = kernels.data, bias.data
    if kd.ndim != 3:
        raise DimensionError(f"kernels must be (K, D_in, k), got shape {kd.shape}")
    n_k, d_in, k = kd.shape
    if bd.shape != (n_k,):
        raise DimensionError(f"bias shape {bd.shape} != ({n_k},)")
    unbatched = x.ndim == 2
    xd = x.data[None] if unbatched else x.data
    if xd.ndim != 3:
        raise DimensionError(f"conv1d input must be 2D or 3D, got shape {x.shape}")
    if xd.shape[-1] != d_in:
        raise DimensionError(f"input channels {xd.shape[-1]} != kernel channels {d_in}")
    t_in = xd.shape[-2]
    if t_in < k:
        raise SequenceTooShortError(f"sequence length {t_in} < kernel size {k}")
    windows = sliding_window_view(xd, k, axis=-2)[..., ::stride, :, :]  # (B, T', D_in, k)
    out = np.einsum("btck,jck->btj", windows, kd) + bd
    t_out = out.shape[1]

    def bwd(g):
        if unbatched:
            g = g[None]
        gb = g.sum(axis=(0, 1))
        gk = np.einsum("btj,btck->jck", g, windows)
        dwin = np.einsum("btj,jck->btkc", g, kd)  # (B, T', k, D_in)
        gx = np.zeros_like(xd)
        idx = np.arange(t_out)[:, None] * stride + np.arange(k)[None, :]
        np.add.at(gx, (slice(None), idx), dwin)
        if unbatched:
            gx = gx[0]
        return gx, gk, gb

    return _emit("conv1d", (x, kernels, bias), out[0] if unbatched else out, bwd)


class BatchNormStats:
    """Running mean/variance buffers for one batch-norm layer."""

    def __init__(self, channels: int, momentum: float = 0.1):
        self.running_mean = np.zeros(channels, dtype=np.float64)
        self.running_var = np.ones(channels, dtype=np.float64)
        self.momentum = float(momentum)

    def copy(self) -> "BatchNormStats":
        other = BatchNormStats(self.running_mean.size, self.momentum)
        other.running_mean = self.running_mean.copy()
        other.running_var = self.running_var.copy()
        return other


def batch_norm1d(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    stats: BatchNormStats,
    eps: float = 1e-5,
    mode: str = "train",
) -> Tensor:
    """Per-channel normalization pooled over all leading (batch, time) axes.

    Train mode normalizes with current batch statistics and updates the
    running buffers; eval mode normalizes with the running buffers.
    """
    if eps <= 0:
        raise ConfigurationError(f"eps must be positive, got {eps}")
    xd = x.data
    channels = xd.shape[-1]
    if gamma.shape != (channels,) or beta.shape != (channels,):
        raise DimensionError(
            f"gamma/beta shapes {gamma.shape}/{beta.shape} do not match channel count {channels}"
        )
    axes = tuple(range(xd.ndim - 1))
    if mode == "train":
        n = int(np.prod(xd.shape[:-1]))
        if n < 2:
            raise DegenerateBatchError(f"batch norm needs >= 2 pooled samples, got {n}")
        mu = xd.mean(axis=axes)
        var = xd.var(axis=axes)
        inv = 1.0 / np.sqrt(var + eps)
        xhat = (xd - mu) * inv
        stats.running_mean = (1 - stats.momentum) * stats.running_mean + stats.momentum * mu
        unbiased = var * n / (n - 1)
        stats.running_var = (1 - stats.momentum) * stats.running_var + stats.momentum * unbiased

        def bwd(g):
            gg = (g * xhat).sum(axis=axes)
            gb = g.sum(axis=axes)
            mean_g = g.mean(axis=axes)
            mean_gx = (g * xhat).mean(axis=axes)
            gx = gamma.data * inv * (g - mean_g - xhat * mean_gx)
            return gx, gg, gb

    elif mode == "eval":
        inv = 1.0 / np.sqrt(stats.running_var + eps)
        xhat = (xd - stats.running_mean) * inv

        def bwd(g):
            gg = (g * xhat).sum(axis=axes)
            gb = g.sum(axis=axes)
            gx = g * gamma.data * inv
            return gx, gg, gb

    else:
        raise ConfigurationError(f"mode must be 'train' or 'eval', got {mode!r}")
    return _emit("batch_norm1d", (x, gamma, beta), gamma.data * xhat + beta.data, bwd)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize each slice over the last dimension, then scale/shift."""
    if eps <= 0:
        raise ConfigurationError(f"eps must be positive, got {eps}")
    xd = x.data
    d = xd.shape[-1]
    if d < 2:
        raise DimensionError(f"layer norm needs last dim >= 2, got {d}")
    if gamma.shape != (d,) or beta.shape != (d,):
        raise DimensionError(f"gamma/beta shapes must be ({d},)")
    mu = xd.mean(axis=-1, keepdims=True)
    var = xd.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (xd - mu) * inv

    def bwd(g):
        gg = (g * xhat).sum(axis=tuple(range(xd.ndim - 1)))
        gb = g.sum(axis=tuple(range(xd.ndim - 1)))
        dxhat = g * gamma.data  # gamma varies along the normalized axis
        mean_d = dxhat.mean(axis=-1, keepdims=True)
        mean_dx = (dxhat * xhat).mean(axis=-1, keepdims=True)
        gx = inv * (dxhat - mean_d - xhat * mean_dx)
        return gx, gg, gb

    return _emit("layer_norm", (x, gamma, beta), gamma.data * xhat + beta.data, bwd)


def max_mean_pool(x: Tensor) -> Tensor:
    """Collapse the time axis to (columnwise max || columnwise mean)."""
    xd = x.data
    if xd.ndim not in (2, 3):
        raise DimensionError(f"max_mean_pool expects (T, d) or (B, T, d), got {x.shape}")
    t = xd.shape[-2]
    if t == 0:
        raise EmptySequenceError("max_mean_pool on an empty sequence")
    d = xd.shape[-1]
    arg = xd.argmax(axis=-2)
    out = np.concatenate([xd.max(axis=-2), xd.mean(axis=-2)], axis=-1)

    def bwd(g):
        gmax = g[..., :d]
        gmean = g[..., d:]
        gx = np.zeros_like(xd)
        np.put_along_axis(gx, np.expand_dims(arg, -2), np.expand_dims(gmax, -2), axis=-2)
        gx += np.expand_dims(gmean, -2) / t
        return (gx,)

    return _emit("max_mean_pool", (x,), out, bwd)


def dropout(x: Tensor, p: float, mode: str, rng: Optional[RngStream] = None) -> Tensor:
    """Inverted dropout: train zeroes with prob p and rescales, eval is identity."""
    if not 0.0 <= p < 1.0:
        raise ConfigurationError(f"dropout probability must be in [0, 1), got {p}")
    if mode == "eval" or p == 0.0:
        return x
    if mode != "train":
        raise ConfigurationError(f"mode must be 'train' or 'eval', got {mode!r}")
    if rng is None:
        raise ConfigurationError("train-mode dropout requires an RngStream")
    keep = (rng.random(x.shape) >= p) / (1.0 - p)

    def bwd(g):
        return (g * keep,)

    return _emit("dropout", (x,), x.data * keep, bwd)


def multi_head_self_attention(
    x: Tensor,
    wq: Tensor,
    bq: Tensor,
    wk: Tensor,
    bk: Tensor,
    wv: Tensor,
    bv: Tensor,
    wo: Tensor,
    bo: Tensor,
    n_heads: int,
) -> Tensor:
    """Scaled dot-product self-attention over all positions (no mask).

    x: (T, d) or (B, T, d); all projections are (d, d) weights applied via
    ``linear`` so gradients flow through standard primitives.
    """
    d = x.shape[-1]
    if d % n_heads != 0:
        raise ConfigurationError(f"model dim {d} not divisible by head count {n_heads}")
    unbatched = x.ndim == 2
    if unbatched:
        x = reshape(x, (1,) + x.shape)
    b, t, _ = x.shape
    dh = d // n_heads

    def split_heads(z: Tensor) -> Tensor:
        return transpose(reshape(z, (b, t, n_heads, dh)), (0, 2, 1, 3))  # (B, h, T, dh)

    q = split_heads(linear(x, wq, bq))
    k = split_heads(linear(x, wk, bk))
    v = split_heads(linear(x, wv, bv))
    scores = scale(matmul(q, transpose(k, (0, 1, 3, 2))), 1.0 / math.sqrt(dh))
    attn = softmax(scores)  # (B, h, T, T), rows over key positions
    ctx = matmul(attn, v)  # (B, h, T, dh)
    merged = reshape(transpose(ctx, (0, 2, 1, 3)), (b, t, d))
    out = linear(merged, wo, bo)
    if unbatched:
        out = reshape(out, (t, d))
    return out


def lstm_sequence(x: Tensor, w: Tensor, u: Tensor, b: Tensor, reverse: bool = False) -> Tensor:
    """Gated LSTM over the time axis with zero initial state.

    x: (T, D) or (B, T, D); w: (D, 4H); u: (H, 4H); b: (4H,).
    Gate layout along the 4H axis is (input, forget, candidate, output).
    Returns hidden states per step in original time order, (B, T, H).
    The backward rule is a hand-rolled backpropagation through time.
    """
    wd, ud, bd = w.data, u.data, b.data
    if wd.ndim != 2 or ud.ndim != 2 or ud.shape[1] != wd.shape[1] or bd.shape != (wd.shape[1],):
        raise DimensionError(
            f"lstm params inconsistent: w {wd.shape}, u {ud.shape}, b {bd.shape}"
        )
    hidden = ud.shape[0]
    if wd.shape[1] != 4 * hidden:
        raise DimensionError(f"gate dim {wd.shape[1]} != 4 * hidden {hidden}")
    unbatched = x.ndim == 2
    xd = x.data[None] if unbatched else x.data
    if xd.shape[-1] != wd.shape[0]:
        raise DimensionError(f"input dim {xd.shape[-1]} != w in-dim {wd.shape[0]}")
    n_batch, t_len, _ = xd.shape
    if t_len < 1:
        raise EmptySequenceError("lstm on an empty sequence")

    order = range(t_len - 1, -1, -1) if reverse else range(t_len)
    pre = xd @ wd + bd  # (B, T, 4H)
    h = np.zeros((n_batch, hidden))
    c = np.zeros((n_batch, hidden))
    states = np.zeros((n_batch, t_len, hidden))
    saved = {}
    for t in order:
        a = pre[:, t] + h @ ud
        gi = _sigmoid(a[:, :hidden])
        gf = _sigmoid(a[:, hidden : 2 * hidden])
        gc = np.tanh(a[:, 2 * hidden : 3 * hidden])
        go = _sigmoid(a[:, 3 * hidden :])
        c_prev, h_prev = c, h
        c = gf * c_prev + gi * gc
        tc = np.tanh(c)
        h = go * tc
        states[:, t] = h
        saved[t] = (gi, gf, gc, go, c_prev, h_prev, tc)

    def bwd(g):
        if unbatched:
            g = g[None]
        dpre = np.zeros_like(pre)
        du = np.zeros_like(ud)
        dh_next = np.zeros((n_batch, hidden))
        dc_next = np.zeros((n_batch, hidden))
        for t in reversed(list(order)):
            gi, gf, gc, go, c_prev, h_prev, tc = saved[t]
            dh = g[:, t] + dh_next
            do = dh * tc
            dc = dc_next + dh * go * (1.0 - tc * tc)
            di = dc * gc
            dgc = dc * gi
            df = dc * c_prev
            dc_next = dc * gf
            da = np.concatenate(
                [
                    di * gi * (1.0 - gi),
                    df * gf * (1.0 - gf),
                    dgc * (1.0 - gc * gc),
                    do * go * (1.0 - go),
                ],
                axis=-1,
            )
            dpre[:, t] = da
            du += h_prev.T @ da
            dh_next = da @ ud.T
        gx = dpre @ wd.T
        gw = np.einsum("btd,btg->dg", xd, dpre)
        gb = dpre.sum(axis=(0, 1))
        if unbatched:
            gx = gx[0]
        return gx, gw, du, gb

    return _emit(
        "lstm_sequence", (x, w, u, b), states[0] if unbatched else states, bwd
    )


def recurrent_sequence(
    x: Tensor,
    w: Tensor,
    u: Tensor,
    b: Tensor,
    variant: str = "forward",
    w_rev: Optional[Tensor] = None,
    u_rev: Optional[Tensor] = None,
    b_rev: Optional[Tensor] = None,
) -> Tensor:
    """LSTM recurrence over a sequence; bidirectional concatenates a
    reversed pass (its own parameters) onto the forward states per step."""
    if variant == "forward":
        return lstm_sequence(x, w, u, b, reverse=False)
    if variant == "bidirectional":
        if w_rev is None or u_rev is None or b_rev is None:
            raise ConfigurationError("bidirectional variant needs reverse-pass parameters")
        fwd = lstm_sequence(x, w, u, b, reverse=False)
        rev = lstm_sequence(x, w_rev, u_rev, b_rev, reverse=True)
        return concat([fwd, rev], axis=-1)
    raise ConfigurationError(f"unknown recurrence variant: {variant!r}")


def bce_with_logits(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Elementwise binary cross-entropy from logits, log-sum-exp stable."""
    y = np.asarray(labels, dtype=np.float64)
    if y.shape != logits.shape:
        raise DimensionError(f"labels shape {y.shape} != logits shape {logits.shape}")
    if not np.all((y == 0) | (y == 1)):
        raise ConfigurationError("labels must be binary")
    z = logits.data
    loss = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))

    def bwd(g):
        return (g * (_sigmoid(z) - y),)

    return _emit("bce_with_logits", (logits,), loss, bwd)


def bce_loss(logit: Tensor, label: int) -> Tensor:
    """Scalar binary cross-entropy between one logit and a {0,1} label."""
    if label not in (0, 1):
        raise ConfigurationError(f"label must be 0 or 1, got {label!r}")
    return bce_with_logits(logit, np.full(logit.shape, float(label)))
