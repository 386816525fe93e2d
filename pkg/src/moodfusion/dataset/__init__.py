"""Session data model, labels, QC screening, synthetic cohorts, and splits."""

from .cohort import CohortConfig, PlantedSignalConfig, generate_cohort, realized_prevalences
from .io import (
    config_from_json,
    config_to_json,
    load_cohort,
    save_cohort,
    session_from_json,
    session_to_json,
    write_manifest,
)
from .qc import (
    ALL_FLAGS,
    FRAME_CAPTURE_FAILURE,
    ILLEGIBLE_SPEECH,
    INCONSISTENT_SCALES,
    MISSING_TRANSCRIPTION,
    QcThresholds,
    qc_screen,
    screen_cohort,
)
from .records import (
    AUDIO_DIM,
    FRAME_SECONDS,
    MODALITIES,
    MODALITY_DIMS,
    TEXT_DIM,
    TOTAL_FEATURES,
    VIDEO_DIM,
    BurstWindow,
    PlantedAnnotations,
    SessionRecord,
)
from .scales import (
    SCALE_DEFS,
    SCALE_TO_SYMPTOM,
    SYMPTOM_TO_SCALE,
    DuplicateProbe,
    LabelSpec,
    Labels,
    ScaleResponses,
    derive_labels,
)
from .splits import Split, split_cohort

__all__ = [
    "ALL_FLAGS",
    "AUDIO_DIM",
    "BurstWindow",
    "CohortConfig",
    "DuplicateProbe",
    "FRAME_CAPTURE_FAILURE",
    "FRAME_SECONDS",
    "ILLEGIBLE_SPEECH",
    "INCONSISTENT_SCALES",
    "LabelSpec",
    "Labels",
    "MISSING_TRANSCRIPTION",
    "MODALITIES",
    "MODALITY_DIMS",
    "PlantedAnnotations",
    "PlantedSignalConfig",
    "QcThresholds",
    "SCALE_DEFS",
    "SCALE_TO_SYMPTOM",
    "SYMPTOM_TO_SCALE",
    "ScaleResponses",
    "SessionRecord",
    "Split",
    "TEXT_DIM",
    "TOTAL_FEATURES",
    "VIDEO_DIM",
    "config_from_json",
    "config_to_json",
    "derive_labels",
    "generate_cohort",
    "load_cohort",
    "qc_screen",
    "realized_prevalences",
    "save_cohort",
    "screen_cohort",
    "session_from_json",
    "session_to_json",
    "split_cohort",
    "write_manifest",
]
