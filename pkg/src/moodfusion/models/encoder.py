"""Unimodal convolutional encoders and their pooled classification heads.

An encoder is a stack of conv blocks (strided 1D convolution, optional
batch normalization, ReLU, dropout) producing a per-frame dynamic
embedding. The pretraining head flattens that embedding through max and
mean pooling into a fully-connected stack ending in a single logit; it is
discarded when the encoder feeds the fusion model.
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
from .params import ModelParams, uniform_fan_in


@dataclass(frozen=True)
class EncoderConfig:
    # (out_channels, kernel, stride) per conv block; identical strides across
    # modalities keep the embedding lengths aligned for fusion.
    layers: tuple[tuple[int, int, int], ...] = ((16, 5, 2), (16, 3, 2))
    use_batch_norm: bool = True
    dropout_p: float = 0.2
    head_hidden: tuple[int, ...] = (32,)

    @property
    def embedding_dim(self) -> int:
        return self.layers[-1][0]

    def output_frames(self, t_in: int) -> int:
        t = t_in
        for _, kernel, stride in self.layers:
            if t < kernel:
                raise ConfigurationError(
                    f"sequence of {t_in} frames too short for the conv stack"
                )
            t = (t - kernel) // stride + 1
        return t

    def validate(self) -> None:
        if not self.layers:
            raise ConfigurationError("encoder needs at least one conv layer")
        for ch, k, s in self.layers:
            if ch < 1 or k < 1 or s < 1:
                raise ConfigurationError(f"bad conv layer spec ({ch}, {k}, {s})")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigurationError("dropout_p must be in [0, 1)")

    def to_json(self) -> dict:
        doc = dataclasses.asdict(self)
        doc["layers"] = [list(layer) for layer in self.layers]
        doc["head_hidden"] = list(self.head_hidden)
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "EncoderConfig":
        doc = dict(doc)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValidationError(f"unknown encoder config fields: {sorted(unknown)}")
        if "layers" in doc:
            doc["layers"] = tuple(tuple(layer) for layer in doc["layers"])
        if "head_hidden" in doc:
            doc["head_hidden"] = tuple(doc["head_hidden"])
        return cls(**doc)


def init_encoder_params(
    params: ModelParams, prefix: str, in_dim: int, config: EncoderConfig, rng: RngStream
) -> None:
    config.validate()
    channels = in_dim
    for i, (out_ch, kernel, _stride) in enumerate(config.layers):
        fan_in = channels * kernel
        params.add(f"{prefix}/conv{i}/kernels", uniform_fan_in(rng, (out_ch, channels, kernel), fan_in))
        params.add(f"{prefix}/conv{i}/bias", np.zeros(out_ch))
        if config.use_batch_norm:
            params.add(f"{prefix}/bn{i}/gamma", np.ones(out_ch))
            params.add(f"{prefix}/bn{i}/beta", np.zeros(out_ch))
            params.bn_stats(f"{prefix}/bn{i}", out_ch)
        channels = out_ch


def init_head_params(
    params: ModelParams, prefix: str, in_dim: int, hidden: tuple[int, ...], rng: RngStream
) -> None:
    dim = in_dim
    for i, width in enumerate(hidden):
        params.add(f"{prefix}/fc{i}/weight", uniform_fan_in(rng, (width, dim), dim))
        params.add(f"{prefix}/fc{i}/bias", np.zeros(width))
        dim = width
    params.add(f"{prefix}/out/weight", uniform_fan_in(rng, (1, dim), dim))
    params.add(f"{prefix}/out/bias", np.zeros(1))


class ConvEncoder:
    def __init__(self, modality: str, in_dim: int, config: EncoderConfig,
                 params: ModelParams, prefix: str):
        self.modality = modality
        self.in_dim = in_dim
        self.config = config
        self.params = params
        self.prefix = prefix

    @classmethod
    def build(cls, modality: str, in_dim: int, config: EncoderConfig,
              rng: RngStream, params: Optional[ModelParams] = None,
              prefix: Optional[str] = None) -> "ConvEncoder":
        params = params if params is not None else ModelParams()
        prefix = prefix if prefix is not None else f"encoder/{modality}"
        init_encoder_params(params, prefix, in_dim, config, rng)
        return cls(modality, in_dim, config, params, prefix)

    def forward(self, x: Tensor, mode: str, rng: Optional[RngStream] = None) -> Tensor:
        """(B, T, D) or (T, D) -> per-frame embedding (B, T_e, d_m)."""
        if x.shape[-1] != self.in_dim:
            raise ConfigurationError(
                f"{self.modality} encoder expects {self.in_dim} features, got {x.shape[-1]}"
            )
        p = self.params
        h = x
        for i, (out_ch, _kernel, stride) in enumerate(self.config.layers):
            h = ops.conv1d(h, p[f"{self.prefix}/conv{i}/kernels"], p[f"{self.prefix}/conv{i}/bias"], stride)
            if self.config.use_batch_norm:
                stats = p.bn_stats(f"{self.prefix}/bn{i}", out_ch)
                h = ops.batch_norm1d(
                    h, p[f"{self.prefix}/bn{i}/gamma"], p[f"{self.prefix}/bn{i}/beta"], stats, mode=mode
                )
            h = ops.relu(h)
            h = ops.dropout(h, self.config.dropout_p, mode, rng)
        return h


class PooledHead:
    """max+mean pooling into a fully-connected stack ending in one logit."""

    def __init__(self, config_hidden: tuple[int, ...], dropout_p: float,
                 params: ModelParams, prefix: str):
        self.hidden = config_hidden
        self.dropout_p = dropout_p
        self.params = params
        self.prefix = prefix

    @classmethod
    def build(cls, in_dim: int, hidden: tuple[int, ...], dropout_p: float,
              rng: RngStream, params: ModelParams, prefix: str) -> "PooledHead":
        init_head_params(params, prefix, 2 * in_dim, hidden, rng)
        return cls(hidden, dropout_p, params, prefix)

    def forward(self, embedding: Tensor, mode: str, rng: Optional[RngStream] = None) -> Tensor:
        p = self.params
        h = ops.max_mean_pool(embedding)
        for i in range(len(self.hidden)):
            h = ops.linear(h, p[f"{self.prefix}/fc{i}/weight"], p[f"{self.prefix}/fc{i}/bias"])
            h = ops.relu(h)
            h = ops.dropout(h, self.dropout_p, mode, rng)
        h = ops.linear(h, p[f"{self.prefix}/out/weight"], p[f"{self.prefix}/out/bias"])
        return ops.reshape(h, h.shape[:-1])  # drop the singleton logit axis


class UnimodalClassifier:
    """Encoder plus pooled head; also the pretraining vehicle for encoders."""

    def __init__(self, encoder: ConvEncoder, head: PooledHead):
        self.encoder = encoder
        self.head = head
        self.params = encoder.params

    @classmethod
    def build(cls, modality: str, in_dim: int, config: EncoderConfig, rng: RngStream) -> "UnimodalClassifier":
        params = ModelParams()
        enc = ConvEncoder.build(modality, in_dim, config, rng.substream("encoder"),
                                params=params, prefix=f"encoder/{modality}")
        head = PooledHead.build(config.embedding_dim, config.head_hidden, config.dropout_p,
                                rng.substream("head"), params, prefix=f"head/{modality}")
        return cls(enc, head)

    def forward_logit(self, x: Tensor, mode: str, rng: Optional[RngStream] = None) -> Tensor:
        emb = self.encoder.forward(x, mode, rng)
        return self.head.forward(emb, mode, rng)

    def predict_proba(self, x: Tensor) -> np.ndarray:
        return ops.sigmoid(self.forward_logit(x, "eval")).data
