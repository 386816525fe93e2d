"""Float64 tensor primitives, reverse-mode differentiation, and Adam."""

from .adam import AdamState, adam_step
from .gradcheck import finite_difference_gradients, max_relative_error
from .ops import (
    BatchNormStats,
    activation,
    add,
    batch_norm1d,
    bce_loss,
    bce_with_logits,
    concat,
    conv1d,
    dropout,
    index_time,
    layer_norm,
    linear,
    lstm_sequence,
    matmul,
    max_mean_pool,
    mean,
    mul,
    multi_head_self_attention,
    recurrent_sequence,
    relu,
    reshape,
    scale,
    sigmoid,
    softmax,
    sub,
    tanh,
    total,
    transpose,
)
from .rng import RngStream
from .tensor import Node, Tape, Tensor, active_tape, backward, zero_grads

__all__ = [
    "AdamState",
    "BatchNormStats",
    "Node",
    "RngStream",
    "Tape",
    "Tensor",
    "activation",
    "active_tape",
    "adam_step",
    "add",
    "backward",
    "batch_norm1d",
    "bce_loss",
    "bce_with_logits",
    "concat",
    "conv1d",
    "dropout",
    "finite_difference_gradients",
    "index_time",
    "layer_norm",
    "linear",
    "lstm_sequence",
    "matmul",
    "max_mean_pool",
    "max_relative_error",
    "mean",
    "mul",
    "multi_head_self_attention",
    "recurrent_sequence",
    "relu",
    "reshape",
    "scale",
    "sigmoid",
    "softmax",
    "sub",
    "tanh",
    "total",
    "transpose",
    "zero_grads",
]
