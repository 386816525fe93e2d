"""Central finite-difference gradient verification.

The probe only re-evaluates a tape-free forward closure, so it stays
independent of the reverse-mode path it is used to check.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor


def finite_difference_gradients(
    forward: Callable[[], float],
    wrt: Sequence[Tensor],
    epsilon: float = 1e-5,
) -> list[np.ndarray]:
    """Numerically differentiate ``forward()`` w.r.t. each tensor in ``wrt``.

    ``forward`` must be a zero-argument closure returning a float and must
    read the current contents of each tensor's ``data`` buffer.
    """
    grads = []
    for t in wrt:
        g = np.zeros_like(t.data)
        flat = t.data.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            f_plus = forward()
            flat[i] = orig - epsilon
            f_minus = forward()
            flat[i] = orig
            gflat[i] = (f_plus - f_minus) / (2.0 * epsilon)
        grads.append(g)
    return grads


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Worst-case elementwise error, relative above 1e-3 and absolute below.

    The 1e-3 floor keeps finite-difference roundoff on near-zero gradient
    entries from dominating the comparison.
    """
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-3)
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0
