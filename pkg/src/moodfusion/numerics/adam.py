"""Adam optimizer with L2 weight decay folded into the gradient."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ConfigurationError, DimensionError
from .tensor import Tensor


class AdamState:
    """First/second moment buffers plus the shared step counter."""

    def __init__(self, params: dict[str, Tensor]):
        self.step = 0
        self.m = {name: np.zeros_like(p.data) for name, p in params.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in params.items()}


def adam_step(
    params: dict[str, Tensor],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    weight_decay: float = 0.0,
) -> tuple[dict[str, Tensor], AdamState]:
    """Apply one bias-corrected Adam update in place.

    Weight decay enters as the classic L2 term ``grad + weight_decay * p``.
    The denominator uses the exact-correction epsilon ``eps * sqrt(1 - beta2^t)``,
    so the first step from a fresh state moves each scalar parameter by
    ``lr * g / (|g| + eps * sqrt(1 - beta2))``.
    """
    if lr <= 0 or eps <= 0:
        raise ConfigurationError("lr and eps must be positive")
    if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
        raise ConfigurationError("betas must lie in [0, 1)")
    if weight_decay < 0:
        raise ConfigurationError("weight_decay must be non-negative")
    state.step += 1
    t = state.step
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    eps_t = eps * math.sqrt(bc2)
    for name, p in params.items():
        g = grads[name]
        if g is None:
            raise ConfigurationError(f"missing gradient for parameter {name!r}")
        if g.shape != p.data.shape or state.m[name].shape != p.data.shape:
            raise DimensionError(
                f"shape mismatch for {name!r}: param {p.data.shape}, grad {g.shape}"
            )
        if weight_decay:
            g = g + weight_decay * p.data
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps_t)
    return params, state
