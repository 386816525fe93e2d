"""Architectures: conv encoders, dynamic attention fusion, static baselines."""

from __future__ import annotations

from pathlib import Path

from ..errors import ValidationError
from .baselines import BASELINE_VARIANTS, BaselineConfig, BaselineModel
from .encoder import ConvEncoder, EncoderConfig, PooledHead, UnimodalClassifier
from .fusion import DynamicFusionModel, FusionConfig, TransformerStack, sinusoidal_positions
from .params import ModelParams, load_checkpoint, save_checkpoint, uniform_fan_in


def save_model(path: str | Path, model) -> None:
    if isinstance(model, UnimodalClassifier):
        doc = {
            "modality": model.encoder.modality,
            "in_dim": model.encoder.in_dim,
            "encoder": model.encoder.config.to_json(),
        }
        save_checkpoint(path, "unimodal", doc, model.params)
    elif isinstance(model, DynamicFusionModel):
        doc = {
            "encoders": {m: e.config.to_json() for m, e in model.encoders.items()},
            "in_dims": {m: e.in_dim for m, e in model.encoders.items()},
            "fusion": model.config.to_json(),
        }
        save_checkpoint(path, "fusion", doc, model.params)
    elif isinstance(model, BaselineModel):
        doc = {"baseline": model.config.to_json(), "in_dims": model.in_dims}
        save_checkpoint(path, "baseline", doc, model.params)
    else:
        raise ValidationError(f"cannot checkpoint object of type {type(model).__name__}")


def load_model(path: str | Path):
    kind, doc, params = load_checkpoint(path)
    if kind == "unimodal":
        config = EncoderConfig.from_json(doc["encoder"])
        encoder = ConvEncoder(doc["modality"], doc["in_dim"], config, params,
                              prefix=f"encoder/{doc['modality']}")
        head = PooledHead(config.head_hidden, config.dropout_p, params,
                          prefix=f"head/{doc['modality']}")
        return UnimodalClassifier(encoder, head)
    if kind == "fusion":
        encoders = {
            m: ConvEncoder(m, doc["in_dims"][m], EncoderConfig.from_json(cfg), params,
                           prefix=f"encoder/{m}")
            for m, cfg in doc["encoders"].items()
        }
        return DynamicFusionModel(encoders, FusionConfig.from_json(doc["fusion"]), params)
    if kind == "baseline":
        return BaselineModel(BaselineConfig.from_json(doc["baseline"]), dict(doc["in_dims"]), params)
    raise ValidationError(f"unknown checkpoint kind {kind!r}")


__all__ = [
    "BASELINE_VARIANTS",
    "BaselineConfig",
    "BaselineModel",
    "ConvEncoder",
    "DynamicFusionModel",
    "EncoderConfig",
    "FusionConfig",
    "ModelParams",
    "PooledHead",
    "TransformerStack",
    "UnimodalClassifier",
    "load_checkpoint",
    "load_model",
    "save_checkpoint",
    "save_model",
    "sinusoidal_positions",
    "uniform_fan_in",
]
