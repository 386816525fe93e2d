"""Static-embedding fusion baselines.

Each baseline collapses every modality's sequence into a single vector
before any cross-modal interaction, which is exactly what separates them
from the dynamic fusion model:

- lstm_concat: final LSTM hidden state per modality, concatenated.
- bilstm_static_attention: bidirectional states pooled per modality by a
  learned softmax attention over time, then concatenated.
- lstm_tensor_fusion: final states augmented with a constant 1 and fused
  by the flattened three-way outer product.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ConfigurationError, ValidationError
from ..numerics import ops
from ..numerics.rng import RngStream
from ..numerics.tensor import Tensor
from .encoder import init_head_params
from .params import ModelParams, uniform_fan_in

BASELINE_VARIANTS = ("lstm_concat", "bilstm_static_attention", "lstm_tensor_fusion")


@dataclass(frozen=True)
class BaselineConfig:
    variant: str = "lstm_concat"
    hidden: int = 16
    attention_dim: int = 16
    head_hidden: tuple[int, ...] = (32,)
    dropout_fc: float = 0.4

    def validate(self) -> None:
        if self.variant not in BASELINE_VARIANTS:
            raise ConfigurationError(f"unknown baseline variant {self.variant!r}")
        if self.hidden < 1 or self.attention_dim < 1:
            raise ConfigurationError("hidden sizes must be positive")
        if not 0.0 <= self.dropout_fc < 1.0:
            raise ConfigurationError("dropout_fc must be in [0, 1)")

    def fused_dim(self) -> int:
        if self.variant == "lstm_concat":
            return 3 * self.hidden
        if self.variant == "bilstm_static_attention":
            return 3 * 2 * self.hidden
        return (self.hidden + 1) ** 3

    def to_json(self) -> dict:
        doc = dataclasses.asdict(self)
        doc["head_hidden"] = list(self.head_hidden)
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "BaselineConfig":
        doc = dict(doc)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValidationError(f"unknown baseline config fields: {sorted(unknown)}")
        if "head_hidden" in doc:
            doc["head_hidden"] = tuple(doc["head_hidden"])
        return cls(**doc)


def _init_lstm(params: ModelParams, prefix: str, in_dim: int, hidden: int, rng: RngStream) -> None:
    params.add(f"{prefix}/w", uniform_fan_in(rng, (in_dim, 4 * hidden), in_dim))
    params.add(f"{prefix}/u", uniform_fan_in(rng, (hidden, 4 * hidden), hidden))
    bias = np.zeros(4 * hidden)
    bias[hidden : 2 * hidden] = 1.0  # forget gate open at init
    params.add(f"{prefix}/b", bias)


class BaselineModel:
    def __init__(self, config: BaselineConfig, in_dims: dict[str, int], params: ModelParams):
        self.config = config
        self.in_dims = in_dims
        self.params = params
        self.head_prefix = "head"

    @classmethod
    def build(cls, config: BaselineConfig, in_dims: dict[str, int], rng: RngStream) -> "BaselineModel":
        config.validate()
        params = ModelParams()
        for m in sorted(in_dims):
            _init_lstm(params, f"lstm/{m}", in_dims[m], config.hidden, rng.substream(f"lstm/{m}"))
            if config.variant == "bilstm_static_attention":
                _init_lstm(params, f"lstm_rev/{m}", in_dims[m], config.hidden,
                           rng.substream(f"lstm_rev/{m}"))
                params.add(f"attn/{m}/w", uniform_fan_in(
                    rng.substream(f"attn/{m}"), (config.attention_dim, 2 * config.hidden),
                    2 * config.hidden))
                params.add(f"attn/{m}/b", np.zeros(config.attention_dim))
                params.add(f"attn/{m}/v", uniform_fan_in(
                    rng.substream(f"attnv/{m}"), (1, config.attention_dim), config.attention_dim))
                params.add(f"attn/{m}/c", np.zeros(1))
        init_head_params(params, "head", config.fused_dim(), config.head_hidden,
                         rng.substream("head"))
        return cls(config, dict(in_dims), params)

    def _static_vector(self, modality: str, x: Tensor) -> Tensor:
        """Collapse one modality's sequence into a single vector (B, ...)."""
        p = self.params
        cfg = self.config
        if cfg.variant == "bilstm_static_attention":
            states = ops.recurrent_sequence(
                x, p[f"lstm/{modality}/w"], p[f"lstm/{modality}/u"], p[f"lstm/{modality}/b"],
                variant="bidirectional",
                w_rev=p[f"lstm_rev/{modality}/w"], u_rev=p[f"lstm_rev/{modality}/u"],
                b_rev=p[f"lstm_rev/{modality}/b"],
            )  # (B, T, 2H)
            scores = ops.linear(
                ops.tanh(ops.linear(states, p[f"attn/{modality}/w"], p[f"attn/{modality}/b"])),
                p[f"attn/{modality}/v"], p[f"attn/{modality}/c"],
            )  # (B, T, 1)
            weights = ops.softmax(ops.reshape(scores, scores.shape[:-1]))  # (B, T)
            pooled = ops.matmul(ops.reshape(weights, weights.shape[:-1] + (1, weights.shape[-1])),
                                states)  # (B, 1, 2H)
            return ops.reshape(pooled, pooled.shape[:-2] + (pooled.shape[-1],))
        states = ops.lstm_sequence(
            x, p[f"lstm/{modality}/w"], p[f"lstm/{modality}/u"], p[f"lstm/{modality}/b"]
        )
        return ops.index_time(states, -1)  # final hidden state

    def _fuse(self, vectors: dict[str, Tensor]) -> Tensor:
        ordered = [vectors[m] for m in sorted(vectors)]
        if self.config.variant in ("lstm_concat", "bilstm_static_attention"):
            return ops.concat(ordered, axis=-1)
        # tensor fusion: augment with 1 and take the flattened outer product
        augmented = []
        for v in ordered:
            ones = Tensor(np.ones(v.shape[:-1] + (1,)))
            augmented.append(ops.concat([v, ones], axis=-1))
        a, b, c = augmented
        h1 = a.shape[-1]
        lead = a.shape[:-1]
        ra = ops.reshape(a, lead + (h1, 1, 1))
        rb = ops.reshape(b, lead + (1, h1, 1))
        rc = ops.reshape(c, lead + (1, 1, h1))
        outer = ops.mul(ops.mul(ra, rb), rc)
        return ops.reshape(outer, lead + (h1 ** 3,))

    def forward_logit(self, inputs: dict[str, Tensor], mode: str,
                      rng: Optional[RngStream] = None) -> Tensor:
        vectors = {m: self._static_vector(m, inputs[m]) for m in sorted(inputs)}
        fused = self._fuse(vectors)
        p = self.params
        h = fused
        for i in range(len(self.config.head_hidden)):
            h = ops.linear(h, p[f"head/fc{i}/weight"], p[f"head/fc{i}/bias"])
            h = ops.relu(h)
            h = ops.dropout(h, self.config.dropout_fc, mode, rng)
        h = ops.linear(h, p["head/out/weight"], p["head/out/bias"])
        return ops.reshape(h, h.shape[:-1])

    def predict_proba(self, inputs: dict[str, Tensor]) -> np.ndarray:
        return ops.sigmoid(self.forward_logit(inputs, "eval")).data
