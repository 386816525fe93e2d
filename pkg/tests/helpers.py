"""Shared oracles and small builders used across the test suite."""

from __future__ import annotations

import math

import numpy as np


def conv1d_loop_oracle(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray, stride: int) -> np.ndarray:
    """Direct nested-loop convolution, independent of the vectorized path."""
    t_in, d_in = x.shape
    n_k, _, k = kernels.shape
    t_out = (t_in - k) // stride + 1
    out = np.zeros((t_out, n_k))
    for t in range(t_out):
        for j in range(n_k):
            acc = bias[j]
            for tau in range(k):
                for c in range(d_in):
                    acc += x[t * stride + tau, c] * kernels[j, c, tau]
            out[t, j] = acc
    return out


def linear_loop_oracle(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    lead = x.shape[:-1]
    x2 = x.reshape(-1, x.shape[-1])
    out = np.zeros((x2.shape[0], w.shape[0]))
    for i in range(x2.shape[0]):
        for j in range(w.shape[0]):
            acc = b[j]
            for c in range(x.shape[-1]):
                acc += x2[i, c] * w[j, c]
            out[i, j] = acc
    return out.reshape(*lead, w.shape[0])


def two_pass_stats(x: np.ndarray, axes: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    """Mean/variance from explicit two passes (sum, then squared deviations)."""
    n = int(np.prod([x.shape[a] for a in axes]))
    mu = x.sum(axis=axes) / n
    shape = [1 if i in axes else s for i, s in enumerate(x.shape)]
    dev = x - mu.reshape(shape)
    var = (dev * dev).sum(axis=axes) / n
    return mu, var


def attention_matrix_oracle(
    x: np.ndarray,
    wq: np.ndarray,
    bq: np.ndarray,
    wk: np.ndarray,
    bk: np.ndarray,
    wv: np.ndarray,
    bv: np.ndarray,
    wo: np.ndarray,
    bo: np.ndarray,
    n_heads: int,
) -> np.ndarray:
    """Single-sequence attention that materializes each head's full score matrix."""
    t, d = x.shape
    dh = d // n_heads
    q = x @ wq.T + bq
    k = x @ wk.T + bk
    v = x @ wv.T + bv
    heads = []
    for h in range(n_heads):
        sl = slice(h * dh, (h + 1) * dh)
        qh, kh, vh = q[:, sl], k[:, sl], v[:, sl]
        scores = np.zeros((t, t))
        for i in range(t):
            for j in range(t):
                scores[i, j] = float(qh[i] @ kh[j]) / math.sqrt(dh)
        weights = np.zeros_like(scores)
        for i in range(t):
            row = np.exp(scores[i] - scores[i].max())
            weights[i] = row / row.sum()
        heads.append(weights @ vh)
    merged = np.concatenate(heads, axis=-1)
    return merged @ wo.T + bo


def lstm_unrolled_oracle(
    x: np.ndarray, w: np.ndarray, u: np.ndarray, b: np.ndarray, reverse: bool = False
) -> np.ndarray:
    """Step-by-step LSTM recurrence written directly from the gate equations."""

    def sig(z):
        return 1.0 / (1.0 + np.exp(-z))

    t_len, _ = x.shape
    hidden = u.shape[0]
    h = np.zeros(hidden)
    c = np.zeros(hidden)
    states = np.zeros((t_len, hidden))
    order = range(t_len - 1, -1, -1) if reverse else range(t_len)
    for t in order:
        a = x[t] @ w + h @ u + b
        gi = sig(a[:hidden])
        gf = sig(a[hidden : 2 * hidden])
        gc = np.tanh(a[2 * hidden : 3 * hidden])
        go = sig(a[3 * hidden :])
        c = gf * c + gi * gc
        h = go * np.tanh(c)
        states[t] = h
    return states


def f1_confusion_oracle(preds: np.ndarray, labels: np.ndarray) -> float:
    """F1 from an explicitly tallied confusion matrix."""
    tp = fp = fn = 0
    for p, y in zip(preds, labels):
        if p == 1 and y == 1:
            tp += 1
        elif p == 1 and y == 0:
            fp += 1
        elif p == 0 and y == 1:
            fn += 1
    if tp == 0 and (fp > 0 or fn > 0):
        return 0.0
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)
