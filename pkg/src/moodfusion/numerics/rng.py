"""Deterministic random streams with label-derived substreams.

Every stochastic component in the toolkit draws from an ``RngStream``.
A stream is fully determined by its seed and the chain of substream
labels that produced it, never by how many draws sibling streams have
made, so independent work units (repeats, sessions, batches) stay
reproducible under any execution order.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _label_words(label: str) -> tuple[int, int]:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return (
        int.from_bytes(digest[:4], "little"),
        int.from_bytes(digest[4:8], "little"),
    )


class RngStream:
    """A seeded random stream; substreams are derived by (seed, label)."""

    def __init__(self, seed: int, _spawn_key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self._spawn_key = tuple(_spawn_key)
        ss = np.random.SeedSequence(self.seed, spawn_key=self._spawn_key)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def substream(self, label: str) -> "RngStream":
        """Derive an independent stream identified by ``label``.

        The derived state depends only on (seed, label chain), not on
        draws already made from this or any sibling stream.
        """
        return RngStream(self.seed, self._spawn_key + _label_words(label))

    def normal(self, shape=None, loc: float = 0.0, scale: float = 1.0) -> np.ndarray:
        return self._gen.normal(loc, scale, size=shape)

    def uniform(self, low: float = 0.0, high: float = 1.0, shape=None) -> np.ndarray:
        return self._gen.uniform(low, high, size=shape)

    def random(self, shape=None) -> np.ndarray:
        return self._gen.random(size=shape, dtype=np.float64)

    def integers(self, low: int, high: int, shape=None) -> np.ndarray:
        """Uniform integers in [low, high] inclusive."""
        return self._gen.integers(low, high, size=shape, endpoint=True)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def choice(self, n: int, size: int, replace: bool = True) -> np.ndarray:
        return self._gen.choice(n, size=size, replace=replace)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, key={self._spawn_key})"
