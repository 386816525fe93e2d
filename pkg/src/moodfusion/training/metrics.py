"""Evaluation metrics: F1, median aggregation, percentage difference."""

from __future__ import annotations

import numpy as np

from ..errors import MetricError


def f1_score(probs, labels, threshold: float = 0.5) -> float:
    """Positive-class F1 at a fixed decision threshold (predict 1 iff p > threshold)."""
    p = np.asarray(probs, dtype=np.float64)
    y = np.asarray(labels)
    if p.size == 0:
        raise MetricError("f1_score on empty input")
    if p.shape != y.shape:
        raise MetricError(f"probs shape {p.shape} != labels shape {y.shape}")
    if not np.all((y == 0) | (y == 1)):
        raise MetricError("labels must be binary")
    preds = p > threshold
    pos = y == 1
    tp = int(np.sum(preds & pos))
    fp = int(np.sum(preds & ~pos))
    fn = int(np.sum(~preds & pos))
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2.0 * precision * recall / (precision + recall)


def median(values) -> float:
    """Sort-based median; even counts average the two central order statistics."""
    vals = sorted(float(v) for v in values)
    if not vals:
        raise MetricError("median of empty sequence")
    n = len(vals)
    mid = n // 2
    if n % 2:
        return vals[mid]
    return 0.5 * (vals[mid - 1] + vals[mid])


def percentage_difference(multimodal_f1: float, best_unimodal_f1: float) -> float:
    """100 * (multimodal - unimodal) / unimodal, reported to two decimals."""
    if best_unimodal_f1 <= 0.0:
        raise MetricError("percentage difference undefined for non-positive unimodal F1")
    return round(100.0 * (multimodal_f1 - best_unimodal_f1) / best_unimodal_f1, 2)
