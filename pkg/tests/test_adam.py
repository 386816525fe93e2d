"""Adam update rule against its closed-form single-step algebra."""

import math

import numpy as np
import pytest

from moodfusion.errors import ConfigurationError, DimensionError
from moodfusion.numerics import AdamState, RngStream, Tensor, adam_step


def _setup(value):
    params = {"p": Tensor(np.asarray(value, dtype=np.float64), requires_grad=True)}
    return params, AdamState(params)


def test_zero_gradient_leaves_params_unchanged():
    params, state = _setup([1.0, -2.0, 3.5])
    before = params["p"].data.copy()
    adam_step(params, {"p": np.zeros(3)}, state, lr=0.01)
    np.testing.assert_array_equal(params["p"].data, before)
    assert state.step == 1


def test_weight_decay_first_step_moves_by_lr_sign():
    # grad = 0, decay w: effective gradient w*p, so the first step moves p by
    # -lr*sign(p) up to a tiny epsilon correction.
    lr, w = 0.05, 0.01
    params, state = _setup([2.0, -3.0])
    adam_step(params, {"p": np.zeros(2)}, state, lr=lr, weight_decay=w)
    moved = params["p"].data - np.array([2.0, -3.0])
    np.testing.assert_allclose(moved, [-lr, lr], rtol=1e-5)


def test_first_step_closed_form():
    lr, beta1, beta2, eps = 0.001, 0.9, 0.999, 1e-8
    g = 0.37
    params, state = _setup(5.0)
    adam_step(params, {"p": np.asarray(g)}, state, lr=lr, beta1=beta1, beta2=beta2, eps=eps)
    expected_step = lr * g / (abs(g) + eps * math.sqrt(1.0 - beta2))
    assert abs((5.0 - params["p"].item()) - expected_step) < 1e-15


def test_two_steps_match_recurrence():
    # Replay the published moment recurrences independently for two steps.
    lr, b1, b2, eps = 0.01, 0.9, 0.999, 1e-8
    grads = [0.5, -1.25]
    params, state = _setup(1.0)
    p = 1.0
    m = v = 0.0
    for t, g in enumerate(grads, start=1):
        adam_step(params, {"p": np.asarray(g)}, state, lr=lr, beta1=b1, beta2=b2, eps=eps)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mhat = m / (1 - b1**t)
        vhat = v / (1 - b2**t)
        p -= lr * mhat / (math.sqrt(vhat) + eps * math.sqrt(1 - b2**t))
    assert abs(params["p"].item() - p) < 1e-15
    assert state.step == 2


def test_moment_invariants():
    rng = RngStream(40)
    params = {"p": Tensor(rng.normal((4, 3)), requires_grad=True)}
    state = AdamState(params)
    for i in range(5):
        adam_step(params, {"p": rng.normal((4, 3))}, state, lr=0.01)
        assert state.step == i + 1
        assert np.all(state.v["p"] >= 0.0)
        assert state.m["p"].shape == params["p"].data.shape


def test_shape_mismatch_raises():
    params, state = _setup([1.0, 2.0])
    with pytest.raises(DimensionError):
        adam_step(params, {"p": np.zeros(3)}, state, lr=0.01)


def test_bad_hyperparameters_raise():
    params, state = _setup(1.0)
    with pytest.raises(ConfigurationError):
        adam_step(params, {"p": np.asarray(0.0)}, state, lr=-1.0)
    with pytest.raises(ConfigurationError):
        adam_step(params, {"p": np.asarray(0.0)}, state, lr=0.1, beta1=1.0)
