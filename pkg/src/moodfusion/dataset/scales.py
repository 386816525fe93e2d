"""Clinical scale responses and binary symptom label derivation."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ValidationError

# (item count, per-item min, per-item max, label threshold: total strictly greater)
SCALE_DEFS = {
    "PHQ9": (9, 0, 3, 9),
    "GAD7": (7, 0, 3, 9),
    "SHAPS": (14, 1, 4, 25),
}

SCALE_TO_SYMPTOM = {"PHQ9": "depression", "GAD7": "anxiety", "SHAPS": "anhedonia"}
SYMPTOM_TO_SCALE = {v: k for k, v in SCALE_TO_SYMPTOM.items()}


@dataclass(frozen=True)
class LabelSpec:
    scale: str
    threshold: int

    @classmethod
    def for_scale(cls, scale: str) -> "LabelSpec":
        if scale not in SCALE_DEFS:
            raise ValidationError(f"unknown scale {scale!r}")
        return cls(scale=scale, threshold=SCALE_DEFS[scale][3])


@dataclass(frozen=True)
class DuplicateProbe:
    """A re-asked scale item used only for consistency screening."""

    scale: str
    item_index: int
    repeated_response: int


@dataclass
class ScaleResponses:
    phq9_items: list[int]
    gad7_items: list[int]
    shaps_items: list[int]
    duplicate_probe_pairs: list[DuplicateProbe] = field(default_factory=list)

    def validate(self) -> None:
        for scale, items in (
            ("PHQ9", self.phq9_items),
            ("GAD7", self.gad7_items),
            ("SHAPS", self.shaps_items),
        ):
            count, lo, hi, _ = SCALE_DEFS[scale]
            if len(items) != count:
                raise ValidationError(f"{scale} expects {count} items, got {len(items)}")
            for v in items:
                if not isinstance(v, int) or not lo <= v <= hi:
                    raise ValidationError(f"{scale} item {v!r} outside [{lo}, {hi}]")
        for probe in self.duplicate_probe_pairs:
            if probe.scale not in SCALE_DEFS:
                raise ValidationError(f"probe references unknown scale {probe.scale!r}")
            count, lo, hi, _ = SCALE_DEFS[probe.scale]
            if not 0 <= probe.item_index < count:
                raise ValidationError(f"probe item index {probe.item_index} out of range")
            if not lo <= probe.repeated_response <= hi:
                raise ValidationError(f"probe response {probe.repeated_response} outside [{lo}, {hi}]")

    def items_for(self, scale: str) -> list[int]:
        return {"PHQ9": self.phq9_items, "GAD7": self.gad7_items, "SHAPS": self.shaps_items}[scale]

    def total(self, scale: str) -> int:
        return sum(self.items_for(scale))


@dataclass(frozen=True)
class Labels:
    depression: int
    anxiety: int
    anhedonia: int

    def for_scale(self, scale: str) -> int:
        return getattr(self, SCALE_TO_SYMPTOM[scale])


def derive_labels(scales: ScaleResponses) -> Labels:
    """Binary symptom labels: 1 iff the scale total strictly exceeds its threshold."""
    scales.validate()
    out = {}
    for scale, symptom in SCALE_TO_SYMPTOM.items():
        threshold = SCALE_DEFS[scale][3]
        out[symptom] = int(scales.total(scale) > threshold)
    return Labels(**out)
