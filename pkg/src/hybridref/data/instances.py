"""Pronoun-resolution instances and their JSONL serialization.

One JSON object per line, schema (field names are fixed):

    {"id": str, "sentence": str,
     "pronoun": {"text": str, "start": int, "end": int},
     "candidates": [{"text": str, "label": "positive"|"negative"|"unknown"}, ...],
     "source": "wsc"|"wscr"|"pdp"|"wnli-converted"|"synthetic"}

`start`/`end` are character offsets into `sentence` and must slice exactly to
`pronoun.text` (case-sensitive).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator

from hybridref.errors import DataError

LABELS = ("positive", "negative", "unknown")
SOURCES = ("wsc", "wscr", "pdp", "wnli-converted", "synthetic")


@dataclass
class Pronoun:
    text: str
    start: int
    end: int


@dataclass
class Candidate:
    text: str
    label: str = "unknown"


@dataclass
class Instance:
    id: str
    sentence: str
    pronoun: Pronoun
    candidates: list[Candidate]
    source: str = "synthetic"

    def validate(self) -> None:
        if not self.sentence:
            raise DataError(f"instance {self.id}: empty sentence")
        p = self.pronoun
        if not (0 <= p.start < p.end <= len(self.sentence)):
            raise DataError(f"instance {self.id}: pronoun span [{p.start}, {p.end}) out of bounds")
        if self.sentence[p.start:p.end] != p.text:
            raise DataError(
                f"instance {self.id}: pronoun span mismatch: "
                f"{self.sentence[p.start:p.end]!r} != {p.text!r}"
            )
        if not self.candidates:
            raise DataError(f"instance {self.id}: no candidates")
        for c in self.candidates:
            if c.label not in LABELS:
                raise DataError(f"instance {self.id}: bad label {c.label!r}")
            if not c.text:
                raise DataError(f"instance {self.id}: empty candidate text")
        if self.source not in SOURCES:
            raise DataError(f"instance {self.id}: bad source {self.source!r}")

    def positive_index(self) -> int | None:
        for i, c in enumerate(self.candidates):
            if c.label == "positive":
                return i
        return None

    def training_pair(self) -> tuple[int, int]:
        """Indices (positive, negative); training data must be exactly one of each."""
        pos = [i for i, c in enumerate(self.candidates) if c.label == "positive"]
        neg = [i for i, c in enumerate(self.candidates) if c.label == "negative"]
        if len(pos) != 1 or len(neg) != 1 or len(self.candidates) != 2:
            raise DataError(
                f"instance {self.id}: training needs exactly one positive and one "
                f"negative candidate, got {len(pos)} positive / {len(neg)} negative "
                f"of {len(self.candidates)}"
            )
        return pos[0], neg[0]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "sentence": self.sentence,
            "pronoun": {"text": self.pronoun.text, "start": self.pronoun.start, "end": self.pronoun.end},
            "candidates": [{"text": c.text, "label": c.label} for c in self.candidates],
            "source": self.source,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Instance":
        try:
            inst = cls(
                id=str(d["id"]),
                sentence=d["sentence"],
                pronoun=Pronoun(d["pronoun"]["text"], int(d["pronoun"]["start"]), int(d["pronoun"]["end"])),
                candidates=[Candidate(c["text"], c.get("label", "unknown")) for c in d["candidates"]],
                source=d.get("source", "synthetic"),
            )
        except (KeyError, TypeError) as exc:
            raise DataError(f"malformed instance object: {exc}") from exc
        inst.validate()
        return inst


def write_instances(path, instances: Iterable[Instance]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            inst.validate()
            fh.write(json.dumps(inst.to_dict(), ensure_ascii=False) + "\n")
            n += 1
    return n


def read_instances(path, skip_malformed: bool = False, error_sink: list | None = None) -> Iterator[Instance]:
    """Stream instances from a JSONL file.

    Malformed lines raise DataError with the line number, or are appended to
    `error_sink` as (line_number, message) and skipped when `skip_malformed`.
    """
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read instances from {path}: {exc}") from exc
    with fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                yield Instance.from_dict(obj)
            except (json.JSONDecodeError, DataError) as exc:
                msg = f"{path}:{line_no}: {exc}"
                if skip_malformed:
                    if error_sink is not None:
                        error_sink.append((line_no, str(exc)))
                    continue
                raise DataError(msg) from exc


def load_instances(path, skip_malformed: bool = False, error_sink: list | None = None) -> list[Instance]:
    return list(read_instances(path, skip_malformed=skip_malformed, error_sink=error_sink))
