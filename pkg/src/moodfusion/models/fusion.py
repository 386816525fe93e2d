"""Transformer-based dynamic attention fusion over per-frame embeddings.

The three unimodal embeddings are concatenated per frame along the
feature axis into one multimodal sequence, optionally tagged with
sinusoidal positional encodings, passed through post-norm transformer
blocks (self-attention -> add & norm -> feedforward -> add & norm), and
pooled (max || mean) into a fully-connected head with a single logit.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import AlignmentError, ConfigurationError, ValidationError
from ..numerics import ops
from ..numerics.rng import RngStream
from ..numerics.tensor import Tensor
from .encoder import ConvEncoder, EncoderConfig, PooledHead, init_head_params
from .params import ModelParams, uniform_fan_in


@dataclass(frozen=True)
class FusionConfig:
    n_layers: int = 1
    n_heads: int = 2
    ff_dim: int = 64
    head_hidden: tuple[int, ...] = (32,)
    dropout_fc: float = 0.4
    positional_encoding: bool = True
    layer_norm_eps: float = 1e-5

    def validate(self, d_model: int) -> None:
        if self.n_layers < 0:
            raise ConfigurationError("n_layers must be >= 0")
        if self.n_layers > 0 and d_model % self.n_heads != 0:
            raise ConfigurationError(
                f"model dim {d_model} not divisible by {self.n_heads} heads"
            )
        if not 0.0 <= self.dropout_fc < 1.0:
            raise ConfigurationError("dropout_fc must be in [0, 1)")

    def to_json(self) -> dict:
        doc = dataclasses.asdict(self)
        doc["head_hidden"] = list(self.head_hidden)
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "FusionConfig":
        doc = dict(doc)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValidationError(f"unknown fusion config fields: {sorted(unknown)}")
        if "head_hidden" in doc:
            doc["head_hidden"] = tuple(doc["head_hidden"])
        return cls(**doc)


def sinusoidal_positions(t_len: int, dim: int) -> np.ndarray:
    pe = np.zeros((t_len, dim))
    position = np.arange(t_len)[:, None].astype(np.float64)
    div = np.exp(np.arange(0, dim, 2) * (-np.log(10000.0) / dim))
    pe[:, 0::2] = np.sin(position * div)
    pe[:, 1::2] = np.cos(position * div[: pe[:, 1::2].shape[1]])
    return pe


def init_fusion_params(params: ModelParams, prefix: str, d_model: int,
                       config: FusionConfig, rng: RngStream) -> None:
    for layer in range(config.n_layers):
        base = f"{prefix}/block{layer}"
        for proj in ("wq", "wk", "wv", "wo"):
            params.add(f"{base}/attn/{proj}", uniform_fan_in(rng, (d_model, d_model), d_model))
            params.add(f"{base}/attn/{proj.replace('w', 'b')}", np.zeros(d_model))
        params.add(f"{base}/norm1/gamma", np.ones(d_model))
        params.add(f"{base}/norm1/beta", np.zeros(d_model))
        params.add(f"{base}/ff/w1", uniform_fan_in(rng, (config.ff_dim, d_model), d_model))
        params.add(f"{base}/ff/b1", np.zeros(config.ff_dim))
        params.add(f"{base}/ff/w2", uniform_fan_in(rng, (d_model, config.ff_dim), config.ff_dim))
        params.add(f"{base}/ff/b2", np.zeros(d_model))
        params.add(f"{base}/norm2/gamma", np.ones(d_model))
        params.add(f"{base}/norm2/beta", np.zeros(d_model))


class TransformerStack:
    def __init__(self, d_model: int, config: FusionConfig, params: ModelParams, prefix: str):
        self.d_model = d_model
        self.config = config
        self.params = params
        self.prefix = prefix

    def forward(self, x: Tensor) -> Tensor:
        p = self.params
        eps = self.config.layer_norm_eps
        for layer in range(self.config.n_layers):
            base = f"{self.prefix}/block{layer}"
            attn = ops.multi_head_self_attention(
                x,
                p[f"{base}/attn/wq"], p[f"{base}/attn/bq"],
                p[f"{base}/attn/wk"], p[f"{base}/attn/bk"],
                p[f"{base}/attn/wv"], p[f"{base}/attn/bv"],
                p[f"{base}/attn/wo"], p[f"{base}/attn/bo"],
                self.config.n_heads,
            )
            x = ops.layer_norm(ops.add(x, attn),
                               p[f"{base}/norm1/gamma"], p[f"{base}/norm1/beta"], eps)
            ff = ops.linear(ops.relu(ops.linear(x, p[f"{base}/ff/w1"], p[f"{base}/ff/b1"])),
                            p[f"{base}/ff/w2"], p[f"{base}/ff/b2"])
            x = ops.layer_norm(ops.add(x, ff),
                               p[f"{base}/norm2/gamma"], p[f"{base}/norm2/beta"], eps)
        return x


class DynamicFusionModel:
    """CNN encoders feeding a transformer over the concatenated multimodal sequence."""

    def __init__(self, encoders: dict[str, ConvEncoder], fusion_config: FusionConfig,
                 params: ModelParams):
        self.encoders = encoders
        self.config = fusion_config
        self.params = params
        self.d_model = sum(enc.config.embedding_dim for enc in encoders.values())
        self.stack = TransformerStack(self.d_model, fusion_config, params, "fusion")
        self.head = PooledHead(fusion_config.head_hidden, fusion_config.dropout_fc,
                               params, "fusion/head")

    @classmethod
    def build(cls, encoder_configs: dict[str, EncoderConfig], in_dims: dict[str, int],
              fusion_config: FusionConfig, rng: RngStream) -> "DynamicFusionModel":
        params = ModelParams()
        encoders = {
            m: ConvEncoder.build(m, in_dims[m], encoder_configs[m],
                                 rng.substream(f"encoder/{m}"), params=params,
                                 prefix=f"encoder/{m}")
            for m in sorted(encoder_configs)
        }
        d_model = sum(cfg.embedding_dim for cfg in encoder_configs.values())
        fusion_config.validate(d_model)
        init_fusion_params(params, "fusion", d_model, fusion_config, rng.substream("fusion"))
        init_head_params(params, "fusion/head", 2 * d_model, fusion_config.head_hidden,
                         rng.substream("fusion/head"))
        return cls(encoders, fusion_config, params)

    def adopt_encoder_values(self, pretrained: dict[str, ModelParams]) -> None:
        """Copy pretrained encoder weights (and norm stats) into this model."""
        for modality, source in pretrained.items():
            prefix = f"encoder/{modality}"
            for name, tensor in source.items():
                if name.startswith(prefix):
                    np.copyto(self.params[name].data, tensor.data)
            for name, stats in source.stats_items():
                if name.startswith(prefix):
                    own = self.params.bn_stats(name, stats.running_mean.size)
                    own.running_mean = stats.running_mean.copy()
                    own.running_var = stats.running_var.copy()
                    own.momentum = stats.momentum

    def freeze_encoders(self, frozen: bool = True) -> None:
        self.params.set_requires_grad("encoder/", not frozen)

    def encode(self, inputs: dict[str, Tensor], mode: str,
               rng: Optional[RngStream] = None) -> dict[str, Tensor]:
        return {m: enc.forward(inputs[m], mode, rng) for m, enc in self.encoders.items()}

    def fuse_forward(self, embeddings: dict[str, Tensor], mode: str,
                     rng: Optional[RngStream] = None) -> Tensor:
        """Per-frame feature-axis concatenation -> transformer -> pooled head logit."""
        ordered = [embeddings[m] for m in sorted(self.encoders)]
        t_lens = {e.shape[-2] for e in ordered}
        if len(t_lens) != 1:
            raise AlignmentError(f"embedding lengths differ across modalities: {t_lens}")
        x = ops.concat(ordered, axis=-1)
        if self.config.positional_encoding:
            pe = sinusoidal_positions(x.shape[-2], self.d_model)
            x = ops.add(x, Tensor(pe))
        x = self.stack.forward(x)
        return self.head.forward(x, mode, rng)

    def forward_logit(self, inputs: dict[str, Tensor], mode: str,
                      rng: Optional[RngStream] = None, encoder_mode: Optional[str] = None) -> Tensor:
        embeddings = self.encode(inputs, encoder_mode or mode, rng)
        return self.fuse_forward(embeddings, mode, rng)

    def predict_proba(self, inputs: dict[str, Tensor]) -> np.ndarray:
        return ops.sigmoid(self.forward_logit(inputs, "eval")).data
