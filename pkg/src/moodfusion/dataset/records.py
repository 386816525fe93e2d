"""Session records: aligned modality sequences plus metadata and annotations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import ValidationError
from .scales import ScaleResponses

AUDIO_DIM = 123
VIDEO_DIM = 22
TEXT_DIM = 52
MODALITY_DIMS = {"audio": AUDIO_DIM, "video": VIDEO_DIM, "text": TEXT_DIM}
MODALITIES = ("audio", "video", "text")
TOTAL_FEATURES = AUDIO_DIM + VIDEO_DIM + TEXT_DIM
FRAME_SECONDS = 0.1


@dataclass(frozen=True)
class BurstWindow:
    """One planted burst: a [start, end) frame window on given feature indices."""

    modality: str
    start: int
    end: int
    features: tuple[int, ...]
    shared: bool  # True for the cross-modal co-occurrence window


@dataclass(frozen=True)
class PlantedAnnotations:
    """Generator ground truth kept for verification, never used by models."""

    violations: tuple[str, ...] = ()
    bursts: tuple[BurstWindow, ...] = ()
    shifted_features: tuple[tuple[str, tuple[int, ...]], ...] = ()


@dataclass
class SessionRecord:
    participant_id: str
    session_index: int
    audio: np.ndarray
    video: np.ndarray
    text: np.ndarray
    frame_failure_fraction: float
    transcription_word_count: int
    legibility_score: float
    scales: ScaleResponses
    qc_flags: set[str] = field(default_factory=set)
    planted: Optional[PlantedAnnotations] = None

    def modality(self, name: str) -> np.ndarray:
        return {"audio": self.audio, "video": self.video, "text": self.text}[name]

    @property
    def frames(self) -> int:
        return self.audio.shape[0]

    def validate(self) -> None:
        if not 1 <= self.session_index <= 3:
            raise ValidationError(f"session_index {self.session_index} outside [1, 3]")
        t = self.audio.shape[0]
        for name in MODALITIES:
            arr = self.modality(name)
            if arr.ndim != 2 or arr.shape != (t, MODALITY_DIMS[name]):
                raise ValidationError(
                    f"{name} tensor shape {arr.shape} != ({t}, {MODALITY_DIMS[name]})"
                )
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} tensor has non-finite values")
        if not 0.0 <= self.frame_failure_fraction <= 1.0:
            raise ValidationError("frame_failure_fraction outside [0, 1]")
        if self.transcription_word_count < 0:
            raise ValidationError("transcription_word_count negative")
        if not 0.0 <= self.legibility_score <= 1.0:
            raise ValidationError("legibility_score outside [0, 1]")
        self.scales.validate()
