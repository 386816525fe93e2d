"""Synthetic three-modality cohort generation.

Participants receive correlated binary symptom labels at configurable
prevalences (label counts are assigned exactly, then scale items are
sampled consistently with each label). Feature sequences are AR(1) noise
with a planted cross-modal signal: label-positive sessions contain one
time window where bursts occur in all three modalities simultaneously,
while negative sessions receive the same number of bursts per modality
at mutually disjoint windows. Burst co-occurrence is therefore the only
strong discriminative signal and is visible solely to models that fuse
modalities within a temporal context; a small whole-session mean shift
on the planted features provides the weak unimodal signal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError
from ..numerics.rng import RngStream
from .qc import (
    FRAME_CAPTURE_FAILURE,
    ILLEGIBLE_SPEECH,
    INCONSISTENT_SCALES,
    MISSING_TRANSCRIPTION,
)
from .records import (
    MODALITIES,
    MODALITY_DIMS,
    BurstWindow,
    PlantedAnnotations,
    SessionRecord,
)
from .scales import SCALE_DEFS, SCALE_TO_SYMPTOM, DuplicateProbe, ScaleResponses, derive_labels


@dataclass(frozen=True)
class PlantedSignalConfig:
    audio_features: tuple[int, ...] = (3, 17, 40, 88)
    video_features: tuple[int, ...] = (5, 12, 19)
    text_features: tuple[int, ...] = (7, 21, 33)
    burst_amplitude: float = 3.0
    unimodal_shift: float = 0.25
    burst_len: int = 8
    distractor_bursts: int = 1  # solo bursts per modality in addition to the shared one
    label_scale: str = "PHQ9"  # which label the interaction is tied to

    def features_for(self, modality: str) -> tuple[int, ...]:
        return {
            "audio": self.audio_features,
            "video": self.video_features,
            "text": self.text_features,
        }[modality]

    def all_feature_count(self) -> int:
        return sum(len(self.features_for(m)) for m in MODALITIES)

    def validate(self, frames: int) -> None:
        if self.label_scale not in SCALE_DEFS:
            raise ConfigurationError(f"unknown label scale {self.label_scale!r}")
        for modality in MODALITIES:
            for idx in self.features_for(modality):
                if not 0 <= idx < MODALITY_DIMS[modality]:
                    raise ConfigurationError(
                        f"planted {modality} feature {idx} outside [0, {MODALITY_DIMS[modality]})"
                    )
        if self.burst_len < 1 or self.burst_len > frames:
            raise ConfigurationError(f"burst_len {self.burst_len} does not fit in {frames} frames")
        windows_needed = (1 + self.distractor_bursts) * len(MODALITIES)
        if windows_needed * self.burst_len > frames:
            raise ConfigurationError(
                f"{windows_needed} disjoint windows of {self.burst_len} frames "
                f"do not fit in {frames}"
            )


@dataclass(frozen=True)
class CohortConfig:
    n_participants: int = 500
    session_probs: tuple[float, float, float] = (0.25, 0.35, 0.40)  # P(1), P(2), P(3) sessions
    frames: int = 100
    prevalence_targets: tuple[float, float, float] = (0.714, 0.578, 0.673)  # PHQ9, GAD7, SHAPS
    planted_signal: PlantedSignalConfig | None = field(default_factory=PlantedSignalConfig)
    qc_violation_rates: tuple[tuple[str, float], ...] = ()
    noise_ar_coeff: float = 0.8
    seed: int = 0

    def validate(self) -> None:
        if self.n_participants < 1:
            raise ConfigurationError("n_participants must be positive")
        if abs(sum(self.session_probs) - 1.0) > 1e-9 or any(p < 0 for p in self.session_probs):
            raise ConfigurationError("session_probs must be a distribution over 1..3 sessions")
        if self.frames < 1:
            raise ConfigurationError("frames must be positive")
        for p in self.prevalence_targets:
            if not 0.0 < p < 1.0:
                raise ConfigurationError(f"prevalence target {p} outside (0, 1)")
        if not 0.0 <= self.noise_ar_coeff < 1.0:
            raise ConfigurationError("noise_ar_coeff must be in [0, 1)")
        for flag, rate in self.qc_violation_rates:
            if not 0.0 <= rate <= 1.0:
                raise ConfigurationError(f"violation rate for {flag} outside [0, 1]")
        if self.planted_signal is not None:
            self.planted_signal.validate(self.frames)


def _assign_labels(config: CohortConfig, rng: RngStream) -> np.ndarray:
    """Exact-count label assignment, correlated across scales via a shared latent."""
    n = config.n_participants
    latent = rng.normal(n)
    labels = np.zeros((n, 3), dtype=np.int64)
    for k, target in enumerate(config.prevalence_targets):
        score = 0.7 * latent + 0.7141 * rng.substream(f"scale{k}").normal(n)
        count = int(round(n * target))
        count = min(max(count, 0), n)
        top = np.argsort(-score, kind="stable")[:count]
        labels[top, k] = 1
    return labels


def _distribute_total(total: int, count: int, lo: int, hi: int, rng: RngStream) -> list[int]:
    """Sample item responses in [lo, hi] summing exactly to ``total``."""
    items = []
    remaining = total
    for j in range(count):
        rest = count - j - 1
        low = max(lo, remaining - rest * hi)
        high = min(hi, remaining - rest * lo)
        v = int(rng.integers(low, high)) if high > low else low
        items.append(v)
        remaining -= v
    return items


def _sample_scale_items(scale: str, label: int, rng: RngStream) -> list[int]:
    count, lo, hi, threshold = SCALE_DEFS[scale]
    if label:
        total = int(rng.integers(threshold + 1, count * hi))
    else:
        total = int(rng.integers(count * lo, threshold))
    return _distribute_total(total, count, lo, hi, rng)


def _disjoint_windows(
    count: int, length: int, frames: int, rng: RngStream, occupied_slots: set[int]
) -> list[tuple[int, int]]:
    """Sample ``count`` windows on a slot grid of size ``length`` so windows
    are disjoint by construction, across calls sharing ``occupied_slots``."""
    n_slots = frames // length
    available = [s for s in range(n_slots) if s not in occupied_slots]
    if count > len(available):
        raise ConfigurationError("cannot place disjoint burst windows; too many bursts")
    order = rng.permutation(len(available))
    chosen = [available[int(i)] for i in order[:count]]
    occupied_slots.update(chosen)
    return [(s * length, s * length + length) for s in chosen]


def _ar1_noise(frames: int, dim: int, coeff: float, rng: RngStream) -> np.ndarray:
    innov_scale = float(np.sqrt(1.0 - coeff * coeff)) if coeff > 0 else 1.0
    eps = rng.normal((frames, dim), scale=innov_scale)
    out = np.empty((frames, dim))
    out[0] = rng.normal(dim)
    for t in range(1, frames):
        out[t] = coeff * out[t - 1] + eps[t]
    return out


def _plant_signal(
    tensors: dict[str, np.ndarray],
    positive: bool,
    signal: PlantedSignalConfig,
    frames: int,
    rng: RngStream,
) -> tuple[tuple[BurstWindow, ...], tuple[tuple[str, tuple[int, ...]], ...]]:
    bursts: list[BurstWindow] = []
    shifted: list[tuple[str, tuple[int, ...]]] = []
    amp = signal.burst_amplitude
    length = signal.burst_len
    occupied: set[int] = set()
    if positive:
        shared = _disjoint_windows(1, length, frames, rng.substream("shared"), occupied)[0]
        for modality in MODALITIES:
            feats = signal.features_for(modality)
            tensors[modality][shared[0] : shared[1], list(feats)] += amp
            bursts.append(BurstWindow(modality, shared[0], shared[1], feats, shared=True))
            solos = _disjoint_windows(
                signal.distractor_bursts, length, frames, rng.substream(f"solo/{modality}"), occupied
            )
            for s, e in solos:
                tensors[modality][s:e, list(feats)] += amp
                bursts.append(BurstWindow(modality, s, e, feats, shared=False))
            tensors[modality][:, list(feats)] += signal.unimodal_shift
            shifted.append((modality, feats))
    else:
        for modality in MODALITIES:
            feats = signal.features_for(modality)
            solos = _disjoint_windows(
                1 + signal.distractor_bursts, length, frames, rng.substream(f"solo/{modality}"), occupied
            )
            for s, e in solos:
                tensors[modality][s:e, list(feats)] += amp
                bursts.append(BurstWindow(modality, s, e, feats, shared=False))
    return tuple(bursts), tuple(shifted)


def _plant_violations(
    rates: dict[str, float], rng: RngStream
) -> tuple[set[str], float, int, float]:
    violations: set[str] = set()
    frame_failure = float(rng.uniform(0.0, 0.15))
    words = int(rng.integers(20, 80))
    legibility = float(rng.uniform(0.65, 1.0))
    if rng.random() < rates.get(FRAME_CAPTURE_FAILURE, 0.0):
        violations.add(FRAME_CAPTURE_FAILURE)
        frame_failure = float(rng.uniform(0.3, 0.9))
    if rng.random() < rates.get(MISSING_TRANSCRIPTION, 0.0):
        violations.add(MISSING_TRANSCRIPTION)
        words = int(rng.integers(0, 4))
    if rng.random() < rates.get(ILLEGIBLE_SPEECH, 0.0):
        violations.add(ILLEGIBLE_SPEECH)
        legibility = float(rng.uniform(0.0, 0.4))
    if rng.random() < rates.get(INCONSISTENT_SCALES, 0.0):
        violations.add(INCONSISTENT_SCALES)
    return violations, frame_failure, words, legibility


def _make_probes(scales: ScaleResponses, inconsistent: bool, rng: RngStream) -> list[DuplicateProbe]:
    probes = []
    for scale in ("PHQ9", "GAD7"):
        count, lo, hi, _ = SCALE_DEFS[scale]
        idx = int(rng.integers(0, count - 1))
        original = scales.items_for(scale)[idx]
        probes.append(DuplicateProbe(scale, idx, original))
    if inconsistent:
        # rewrite one probe so it disagrees by at least 2
        scale = "PHQ9"
        count, lo, hi, _ = SCALE_DEFS[scale]
        idx = probes[0].item_index
        original = scales.items_for(scale)[idx]
        bad = original + 2 if original + 2 <= hi else original - 2
        probes[0] = DuplicateProbe(scale, idx, bad)
    return probes


def generate_cohort(config: CohortConfig) -> list[SessionRecord]:
    """Deterministically generate a full cohort of session records."""
    config.validate()
    root = RngStream(config.seed).substream("cohort")
    labels = _assign_labels(config, root.substream("labels"))
    rates = dict(config.qc_violation_rates)
    probs = np.asarray(config.session_probs)
    sessions: list[SessionRecord] = []
    for i in range(config.n_participants):
        prng = root.substream(f"participant/{i}")
        pid = f"P{i:05d}"
        n_sessions = 1 + int(np.searchsorted(np.cumsum(probs), prng.random(), side="right"))
        n_sessions = min(n_sessions, 3)
        item_sets = {
            scale: _sample_scale_items(scale, labels[i][k], prng.substream(f"items/{scale}"))
            for k, scale in enumerate(("PHQ9", "GAD7", "SHAPS"))
        }
        for s in range(1, n_sessions + 1):
            srng = prng.substream(f"session/{s}")
            tensors = {
                m: _ar1_noise(config.frames, MODALITY_DIMS[m], config.noise_ar_coeff,
                              srng.substream(f"noise/{m}"))
                for m in MODALITIES
            }
            bursts: tuple[BurstWindow, ...] = ()
            shifted: tuple[tuple[str, tuple[int, ...]], ...] = ()
            if config.planted_signal is not None:
                sig = config.planted_signal
                k = ("PHQ9", "GAD7", "SHAPS").index(sig.label_scale)
                bursts, shifted = _plant_signal(
                    tensors, bool(labels[i][k]), sig, config.frames, srng.substream("signal")
                )
            violations, frame_failure, words, legibility = _plant_violations(
                rates, srng.substream("qc")
            )
            scales = ScaleResponses(
                phq9_items=list(item_sets["PHQ9"]),
                gad7_items=list(item_sets["GAD7"]),
                shaps_items=list(item_sets["SHAPS"]),
            )
            scales.duplicate_probe_pairs = _make_probes(
                scales, INCONSISTENT_SCALES in violations, srng.substream("probes")
            )
            record = SessionRecord(
                participant_id=pid,
                session_index=s,
                audio=tensors["audio"],
                video=tensors["video"],
                text=tensors["text"],
                frame_failure_fraction=frame_failure,
                transcription_word_count=words,
                legibility_score=legibility,
                scales=scales,
                planted=PlantedAnnotations(
                    violations=tuple(sorted(violations)),
                    bursts=bursts,
                    shifted_features=shifted,
                ),
            )
            record.validate()
            sessions.append(record)
    return sessions


def realized_prevalences(sessions: list[SessionRecord]) -> dict[str, float]:
    """Per-participant prevalence of each symptom label."""
    seen: dict[str, tuple[int, int, int]] = {}
    for rec in sessions:
        if rec.participant_id not in seen:
            labels = derive_labels(rec.scales)
            seen[rec.participant_id] = (labels.depression, labels.anxiety, labels.anhedonia)
    n = len(seen)
    sums = np.sum(list(seen.values()), axis=0)
    return {
        SCALE_TO_SYMPTOM[scale]: float(sums[k] / n)
        for k, scale in enumerate(("PHQ9", "GAD7", "SHAPS"))
    }
