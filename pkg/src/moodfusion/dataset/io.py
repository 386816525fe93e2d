"""Cohort persistence: newline-delimited records plus a human-readable manifest.

Modality tensors are stored as base64-encoded little-endian float64 bytes
with explicit shape fields, so a reload reproduces every array bit-exactly.
"""

from __future__ import annotations

import base64
import dataclasses
import json
from pathlib import Path

import numpy as np

from ..errors import ValidationError
from .cohort import CohortConfig, PlantedSignalConfig, realized_prevalences
from .records import MODALITIES, BurstWindow, PlantedAnnotations, SessionRecord
from .scales import DuplicateProbe, ScaleResponses


def _encode_array(a: np.ndarray) -> dict:
    data = np.ascontiguousarray(a, dtype="<f8")
    return {"shape": list(a.shape), "data": base64.b64encode(data.tobytes()).decode("ascii")}


def _decode_array(obj: dict) -> np.ndarray:
    raw = base64.b64decode(obj["data"])
    return np.frombuffer(raw, dtype="<f8").reshape(obj["shape"]).astype(np.float64)


def session_to_json(rec: SessionRecord) -> dict:
    planted = rec.planted or PlantedAnnotations()
    return {
        "participant_id": rec.participant_id,
        "session_index": rec.session_index,
        "audio": _encode_array(rec.audio),
        "video": _encode_array(rec.video),
        "text": _encode_array(rec.text),
        "frame_failure_fraction": rec.frame_failure_fraction,
        "transcription_word_count": rec.transcription_word_count,
        "legibility_score": rec.legibility_score,
        "scales": {
            "phq9_items": rec.scales.phq9_items,
            "gad7_items": rec.scales.gad7_items,
            "shaps_items": rec.scales.shaps_items,
            "duplicate_probe_pairs": [
                {"scale": p.scale, "item_index": p.item_index, "repeated_response": p.repeated_response}
                for p in rec.scales.duplicate_probe_pairs
            ],
        },
        "qc_flags": sorted(rec.qc_flags),
        "planted": {
            "violations": list(planted.violations),
            "bursts": [
                {
                    "modality": b.modality,
                    "start": b.start,
                    "end": b.end,
                    "features": list(b.features),
                    "shared": b.shared,
                }
                for b in planted.bursts
            ],
            "shifted_features": [[m, list(f)] for m, f in planted.shifted_features],
        },
    }


def session_from_json(obj: dict) -> SessionRecord:
    scales = ScaleResponses(
        phq9_items=list(obj["scales"]["phq9_items"]),
        gad7_items=list(obj["scales"]["gad7_items"]),
        shaps_items=list(obj["scales"]["shaps_items"]),
        duplicate_probe_pairs=[
            DuplicateProbe(p["scale"], p["item_index"], p["repeated_response"])
            for p in obj["scales"]["duplicate_probe_pairs"]
        ],
    )
    planted = obj.get("planted") or {}
    rec = SessionRecord(
        participant_id=obj["participant_id"],
        session_index=obj["session_index"],
        audio=_decode_array(obj["audio"]),
        video=_decode_array(obj["video"]),
        text=_decode_array(obj["text"]),
        frame_failure_fraction=obj["frame_failure_fraction"],
        transcription_word_count=obj["transcription_word_count"],
        legibility_score=obj["legibility_score"],
        scales=scales,
        qc_flags=set(obj.get("qc_flags", [])),
        planted=PlantedAnnotations(
            violations=tuple(planted.get("violations", [])),
            bursts=tuple(
                BurstWindow(b["modality"], b["start"], b["end"], tuple(b["features"]), b["shared"])
                for b in planted.get("bursts", [])
            ),
            shifted_features=tuple((m, tuple(f)) for m, f in planted.get("shifted_features", [])),
        ),
    )
    rec.validate()
    return rec


def save_cohort(sessions: list[SessionRecord], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for rec in sessions:
            fh.write(json.dumps(session_to_json(rec), sort_keys=True, separators=(",", ":")))
            fh.write("\n")


def load_cohort(path: str | Path) -> list[SessionRecord]:
    path = Path(path)
    sessions = []
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                sessions.append(session_from_json(json.loads(line)))
            except (KeyError, json.JSONDecodeError) as exc:
                raise ValidationError(f"{path}:{line_no}: malformed session record: {exc}") from exc
    return sessions


def config_to_json(config: CohortConfig) -> dict:
    doc = dataclasses.asdict(config)
    doc["qc_violation_rates"] = {flag: rate for flag, rate in config.qc_violation_rates}
    return doc


def config_from_json(doc: dict) -> CohortConfig:
    doc = dict(doc)
    known = {f.name for f in dataclasses.fields(CohortConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ValidationError(f"unknown cohort config fields: {sorted(unknown)}")
    if "planted_signal" in doc and doc["planted_signal"] is not None:
        ps = dict(doc["planted_signal"])
        ps_known = {f.name for f in dataclasses.fields(PlantedSignalConfig)}
        ps_unknown = set(ps) - ps_known
        if ps_unknown:
            raise ValidationError(f"unknown planted_signal fields: {sorted(ps_unknown)}")
        for key in ("audio_features", "video_features", "text_features"):
            if key in ps:
                ps[key] = tuple(ps[key])
        doc["planted_signal"] = PlantedSignalConfig(**ps)
    if "qc_violation_rates" in doc:
        rates = doc["qc_violation_rates"]
        if isinstance(rates, dict):
            doc["qc_violation_rates"] = tuple(sorted(rates.items()))
        else:
            doc["qc_violation_rates"] = tuple((flag, rate) for flag, rate in rates)
    if "session_probs" in doc:
        doc["session_probs"] = tuple(doc["session_probs"])
    if "prevalence_targets" in doc:
        doc["prevalence_targets"] = tuple(doc["prevalence_targets"])
    return CohortConfig(**doc)


def write_manifest(path: str | Path, config: CohortConfig, sessions: list[SessionRecord]) -> dict:
    participants = {rec.participant_id for rec in sessions}
    planted_counts: dict[str, int] = {}
    for rec in sessions:
        for flag in (rec.planted.violations if rec.planted else ()):
            planted_counts[flag] = planted_counts.get(flag, 0) + 1
    manifest = {
        "config": config_to_json(config),
        "n_participants": len(participants),
        "n_sessions": len(sessions),
        "realized_prevalences": realized_prevalences(sessions),
        "planted_violation_counts": dict(sorted(planted_counts.items())),
    }
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest
