"""Deterministic quality-control screening of session records."""

from __future__ import annotations

from dataclasses import dataclass

from .records import SessionRecord

FRAME_CAPTURE_FAILURE = "FrameCaptureFailure"
MISSING_TRANSCRIPTION = "MissingTranscription"
ILLEGIBLE_SPEECH = "IllegibleSpeech"
INCONSISTENT_SCALES = "InconsistentScales"

ALL_FLAGS = (
    FRAME_CAPTURE_FAILURE,
    MISSING_TRANSCRIPTION,
    ILLEGIBLE_SPEECH,
    INCONSISTENT_SCALES,
)


@dataclass(frozen=True)
class QcThresholds:
    max_frame_failure_fraction: float = 0.2
    min_transcription_words: int = 5
    min_legibility_score: float = 0.5
    min_probe_disagreement: int = 2  # |repeated - original| at or above this flags

    def validate(self) -> None:
        assert 0.0 <= self.max_frame_failure_fraction <= 1.0
        assert self.min_transcription_words >= 0
        assert 0.0 <= self.min_legibility_score <= 1.0
        assert self.min_probe_disagreement >= 1


def qc_screen(session: SessionRecord, thresholds: QcThresholds = QcThresholds()) -> set[str]:
    """Evaluate every screening rule; the session passes iff the set is empty."""
    flags: set[str] = set()
    if session.frame_failure_fraction > thresholds.max_frame_failure_fraction:
        flags.add(FRAME_CAPTURE_FAILURE)
    if session.transcription_word_count < thresholds.min_transcription_words:
        flags.add(MISSING_TRANSCRIPTION)
    if session.legibility_score < thresholds.min_legibility_score:
        flags.add(ILLEGIBLE_SPEECH)
    for probe in session.scales.duplicate_probe_pairs:
        original = session.scales.items_for(probe.scale)[probe.item_index]
        if abs(probe.repeated_response - original) >= thresholds.min_probe_disagreement:
            flags.add(INCONSISTENT_SCALES)
            break
    return flags


def screen_cohort(
    sessions, thresholds: QcThresholds = QcThresholds()
) -> tuple[list[int], dict[str, int]]:
    """Return indices of passing sessions and per-flag counts over the cohort."""
    passed = []
    counts = {flag: 0 for flag in ALL_FLAGS}
    for i, session in enumerate(sessions):
        flags = qc_screen(session, thresholds)
        session.qc_flags = flags
        if flags:
            for f in flags:
                counts[f] += 1
        else:
            passed.append(i)
    return passed, counts
