"""Named parameter collections, initialization, and checkpoint files."""

from __future__ import annotations

import base64
import json
import math
from pathlib import Path

import numpy as np

from ..errors import ValidationError
from ..numerics.ops import BatchNormStats
from ..numerics.rng import RngStream
from ..numerics.tensor import Tensor

CHECKPOINT_FORMAT = "moodfusion-checkpoint"
CHECKPOINT_VERSION = 1


class ModelParams:
    """Ordered mapping of parameter names to tensors, plus norm-stat buffers."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}
        self._stats: dict[str, BatchNormStats] = {}

    def add(self, name: str, data: np.ndarray, requires_grad: bool = True) -> Tensor:
        if name in self._params:
            raise ValidationError(f"duplicate parameter name {name!r}")
        t = Tensor(np.asarray(data, dtype=np.float64), requires_grad=requires_grad, name=name)
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def trainable(self) -> dict[str, Tensor]:
        return {n: t for n, t in self._params.items() if t.requires_grad}

    def bn_stats(self, name: str, channels: int) -> BatchNormStats:
        if name not in self._stats:
            self._stats[name] = BatchNormStats(channels)
        return self._stats[name]

    def stats_items(self):
        return self._stats.items()

    def zero_grads(self) -> None:
        for t in self._params.values():
            t.zero_grad()

    def set_requires_grad(self, prefix: str, value: bool) -> None:
        for n, t in self._params.items():
            if n.startswith(prefix):
                t.requires_grad = value

    def copy(self) -> "ModelParams":
        other = ModelParams()
        for n, t in self._params.items():
            other.add(n, t.data.copy(), requires_grad=t.requires_grad)
        for n, s in self._stats.items():
            other._stats[n] = s.copy()
        return other

    def load_values(self, other: "ModelParams") -> None:
        """Copy array contents from another collection with identical names."""
        if other.names() != self.names():
            raise ValidationError("parameter name sets differ")
        for n, t in self._params.items():
            np.copyto(t.data, other[n].data)
        self._stats = {n: s.copy() for n, s in other._stats.items()}

    def checksum(self) -> float:
        total = 0.0
        for t in self._params.values():
            total += float(np.abs(t.data).sum())
        for s in self._stats.values():
            total += float(np.abs(s.running_mean).sum() + np.abs(s.running_var).sum())
        return total


def uniform_fan_in(rng: RngStream, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = math.sqrt(1.0 / fan_in)
    return rng.uniform(-bound, bound, shape)


def _b64(a: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode("ascii")


def _unb64(s: str, shape) -> np.ndarray:
    return np.frombuffer(base64.b64decode(s), dtype="<f8").reshape(shape).astype(np.float64)


def save_checkpoint(path: str | Path, kind: str, config_doc: dict, params: ModelParams) -> None:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "kind": kind,
        "config": config_doc,
        "params": [
            {
                "name": n,
                "shape": list(t.data.shape),
                "requires_grad": t.requires_grad,
                "data": _b64(t.data),
            }
            for n, t in params.items()
        ],
        "bn_stats": [
            {
                "name": n,
                "momentum": s.momentum,
                "mean": _b64(s.running_mean),
                "var": _b64(s.running_var),
                "channels": int(s.running_mean.size),
            }
            for n, s in params.stats_items()
        ],
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")


def load_checkpoint(path: str | Path) -> tuple[str, dict, ModelParams]:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read checkpoint {path}: {exc}") from exc
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValidationError(f"{path} is not a model checkpoint")
    params = ModelParams()
    for entry in doc["params"]:
        params.add(
            entry["name"],
            _unb64(entry["data"], entry["shape"]),
            requires_grad=entry.get("requires_grad", True),
        )
    for entry in doc["bn_stats"]:
        stats = params.bn_stats(entry["name"], entry["channels"])
        stats.momentum = entry["momentum"]
        stats.running_mean = _unb64(entry["mean"], (entry["channels"],))
        stats.running_var = _unb64(entry["var"], (entry["channels"],))
    return doc["kind"], doc["config"], params
