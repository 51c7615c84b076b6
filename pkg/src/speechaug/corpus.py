"""Manifest-backed corpus handling: loading, splitting, segmentation planning.

A manifest is a JSONL file with one utterance per line. Durations are stored
internally as integer milliseconds so split totals and segment boundaries are
exact; the JSON surface keeps the conventional ``duration_s`` float.
"""

from __future__ import annotations

import json
import random
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path

SPLITS = ("train", "valid", "test")
ORIGINS = ("natural", "distorted", "synthetic")

_KNOWN_KEYS = ("id", "audio", "duration_s", "text", "speaker", "dialect", "split", "origin")
_REQUIRED_KEYS = ("id", "audio", "duration_s", "text")


class ManifestError(Exception):
    """Base class for manifest loading and validation failures."""


class ParseError(ManifestError):
    def __init__(self, line_no: int, cause: str):
        super().__init__(f"line {line_no}: {cause}")
        self.line_no = line_no
        self.cause = cause


class DuplicateId(ManifestError):
    def __init__(self, record_id: str):
        super().__init__(f"duplicate utterance id {record_id!r}")
        self.record_id = record_id


class MissingField(ManifestError):
    def __init__(self, name: str):
        super().__init__(f"missing field {name!r}")
        self.name = name


class BadRatios(ManifestError):
    pass


def _to_ms(seconds: float) -> int:
    if seconds < 0:
        raise ValueError(f"negative duration {seconds}")
    return int(round(seconds * 1000))


@dataclass(frozen=True)
class UtteranceRecord:
    """One utterance row. ``extra`` holds unknown JSONL keys for round-trips."""

    id: str
    audio: str
    duration_ms: int
    text: str
    speaker: str = ""
    dialect: str = ""
    split: str = "train"
    origin: str = "natural"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.id:
            raise MissingField("id")
        if not self.text:
            raise MissingField("text")
        if self.duration_ms < 0:
            raise ValueError(f"record {self.id}: negative duration")
        if self.split not in SPLITS:
            raise ValueError(f"record {self.id}: unknown split {self.split!r}")
        if self.origin not in ORIGINS:
            raise ValueError(f"record {self.id}: unknown origin {self.origin!r}")

    @property
    def duration_s(self) -> float:
        return self.duration_ms / 1000.0

    @classmethod
    def from_json(cls, obj: dict) -> "UtteranceRecord":
        for key in _REQUIRED_KEYS:
            if key not in obj:
                raise MissingField(key)
        extra = {k: v for k, v in obj.items() if k not in _KNOWN_KEYS}
        return cls(
            id=str(obj["id"]),
            audio=str(obj["audio"]),
            duration_ms=_to_ms(float(obj["duration_s"])),
            text=str(obj["text"]),
            speaker=str(obj.get("speaker", "")),
            dialect=str(obj.get("dialect", "")),
            split=str(obj.get("split", "train")),
            origin=str(obj.get("origin", "natural")),
            extra=extra,
        )

    def to_json(self) -> dict:
        obj = {
            "id": self.id,
            "audio": self.audio,
            "duration_s": self.duration_ms / 1000.0,
            "text": self.text,
            "speaker": self.speaker,
            "dialect": self.dialect,
            "split": self.split,
            "origin": self.origin,
        }
        obj.update(self.extra)
        return obj


@dataclass
class Manifest:
    records: list[UtteranceRecord] = field(default_factory=list)
    source_note: str = ""

    def __post_init__(self):
        seen = set()
        for rec in self.records:
            if rec.id in seen:
                raise DuplicateId(rec.id)
            seen.add(rec.id)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def by_split(self, split: str) -> list[UtteranceRecord]:
        if split not in SPLITS:
            raise ValueError(f"unknown split {split!r}")
        return [r for r in self.records if r.split == split]

    def duration_ms(self, split: str | None = None) -> int:
        recs = self.records if split is None else self.by_split(split)
        return sum(r.duration_ms for r in recs)

    def hours(self, split: str | None = None) -> float:
        return self.duration_ms(split) / 3_600_000.0


def load_manifest(path) -> Manifest:
    """Parse a JSONL manifest. Blank lines are skipped; ids must be unique."""
    records = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(line_no, str(exc)) from exc
            if not isinstance(obj, dict):
                raise ParseError(line_no, "expected a JSON object")
            try:
                rec = UtteranceRecord.from_json(obj)
            except MissingField:
                raise
            except (TypeError, ValueError) as exc:
                raise ParseError(line_no, str(exc)) from exc
            if rec.id in seen:
                raise DuplicateId(rec.id)
            seen.add(rec.id)
            records.append(rec)
    return Manifest(records=records)


def save_manifest(manifest: Manifest, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in manifest.records:
            fh.write(json.dumps(rec.to_json(), ensure_ascii=False) + "\n")


def split_corpus(manifest: Manifest, ratios: Sequence[float], seed: int) -> Manifest:
    """Assign train/valid/test splits by duration-weighted greedy fill.

    Records are shuffled with the seed, then walked in shuffled order: a
    record goes to the first split whose duration cutoff the running total
    has not yet reached. Output keeps the original record order.
    """
    r = tuple(float(x) for x in ratios)
    if len(r) != 3 or any(x < 0 or x > 1 for x in r) or abs(sum(r) - 1.0) > 1e-9:
        raise BadRatios(f"ratios must be three non-negatives summing to 1, got {ratios!r}")

    order = list(manifest.records)
    random.Random(seed).shuffle(order)
    total = sum(rec.duration_ms for rec in order)
    cut_train = r[0] * total
    cut_valid = (r[0] + r[1]) * total

    assigned = {}
    cum = 0
    for rec in order:
        if cum < cut_train:
            split = "train"
        elif cum < cut_valid:
            split = "valid"
        else:
            split = "test"
        assigned[rec.id] = split
        cum += rec.duration_ms

    records = [replace(rec, split=assigned[rec.id]) for rec in manifest.records]
    return Manifest(records=records, source_note=manifest.source_note)


def segment_plan(duration_s: float, max_s: float = 30.0) -> list[tuple[float, float]]:
    """Plan contiguous segments covering [0, duration]; all but the last are max_s long."""
    if duration_s < 0:
        raise ValueError("duration must be non-negative")
    if max_s <= 0:
        raise ValueError("max segment length must be positive")
    dur_ms = _to_ms(duration_s)
    max_ms = _to_ms(max_s)
    plan = []
    start = 0
    while start < dur_ms:
        end = min(start + max_ms, dur_ms)
        plan.append((start / 1000.0, end / 1000.0))
        start = end
    return plan
