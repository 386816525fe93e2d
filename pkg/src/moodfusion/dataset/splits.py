"""Train/validation/test partitioning at session or participant level."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import SplitError
from ..numerics.rng import RngStream
from .records import SessionRecord


@dataclass
class Split:
    train: list[int]
    val: list[int]
    test: list[int]
    level: str

    def partitions(self) -> dict[str, list[int]]:
        return {"train": self.train, "val": self.val, "test": self.test}


def _floor_sizes(n: int, ratios: tuple[float, float, float]) -> tuple[int, int, int]:
    sizes = [int(r * n) for r in ratios]
    sizes[0] += n - sum(sizes)  # remainder goes to train
    return tuple(sizes)


def split_cohort(
    sessions: list[SessionRecord],
    ratios: tuple[float, float, float] = (0.6, 0.2, 0.2),
    level: str = "participant",
    rng: RngStream | None = None,
) -> Split:
    """Random disjoint 3-way split; participant level keeps all of a
    participant's sessions in one partition."""
    if abs(sum(ratios) - 1.0) > 1e-9 or any(r <= 0 for r in ratios):
        raise SplitError(f"ratios {ratios} must be positive and sum to 1")
    if level not in ("session", "participant"):
        raise SplitError(f"level must be 'session' or 'participant', got {level!r}")
    if rng is None:
        rng = RngStream(0)
    if level == "session":
        n = len(sessions)
        if n < 5:
            raise SplitError(f"need at least 5 sessions to split, got {n}")
        order = rng.permutation(n)
        n_train, n_val, n_test = _floor_sizes(n, ratios)
        return Split(
            train=sorted(int(i) for i in order[:n_train]),
            val=sorted(int(i) for i in order[n_train : n_train + n_val]),
            test=sorted(int(i) for i in order[n_train + n_val :]),
            level=level,
        )
    participants: list[str] = []
    by_participant: dict[str, list[int]] = {}
    for i, rec in enumerate(sessions):
        if rec.participant_id not in by_participant:
            participants.append(rec.participant_id)
            by_participant[rec.participant_id] = []
        by_participant[rec.participant_id].append(i)
    n = len(participants)
    if n < 5:
        raise SplitError(f"need at least 5 participants to split, got {n}")
    order = rng.permutation(n)
    n_train, n_val, n_test = _floor_sizes(n, ratios)
    buckets = {
        "train": order[:n_train],
        "val": order[n_train : n_train + n_val],
        "test": order[n_train + n_val :],
    }
    out = {}
    for name, idxs in buckets.items():
        members: list[int] = []
        for pi in idxs:
            members.extend(by_participant[participants[int(pi)]])
        out[name] = sorted(members)
    return Split(train=out["train"], val=out["val"], test=out["test"], level=level)
