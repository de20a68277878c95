"""Line-delimited transcript files.

One replica per file: a header line, one line per event, and a final
outcome line. Every line is canonical JSON with a ``record`` tag and the
schema version.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Iterable, List, Tuple

from ..util import canonical_json

SCHEMA_VERSION = 1


def _line(record: str, body: dict) -> str:
    return canonical_json(dict(body, record=record, schema=SCHEMA_VERSION))


def replica_name(condition: str, index: int) -> str:
    return f"{condition}-{index:05d}.jsonl"


def write_replica(path: Path, header: dict, events: Iterable[dict], outcome: dict) -> None:
    """Write atomically so a killed run never leaves a half-written replica."""
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(_line("header", header) + "\n")
        for seq, event in enumerate(events):
            fh.write(_line("event", dict(event, seq=seq)) + "\n")
        fh.write(_line("outcome", outcome) + "\n")
    os.replace(tmp, path)


def read_replica(path: Path) -> Tuple[dict, List[dict], dict]:
    header, events, outcome = None, [], None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            if rec.get("schema") != SCHEMA_VERSION:
                raise ValueError(f"{path}: unsupported schema {rec.get('schema')}")
            kind = rec.pop("record")
            rec.pop("schema")
            if kind == "header":
                header = rec
            elif kind == "event":
                events.append(rec)
            elif kind == "outcome":
                outcome = rec
    if header is None or outcome is None:
        raise ValueError(f"{path}: incomplete transcript")
    return header, events, outcome


def normalize_events(events: Iterable[dict]) -> List[dict]:
    """Round-trip through JSON so in-memory events compare equal to stored ones."""
    out = []
    for seq, event in enumerate(events):
        out.append(json.loads(canonical_json(dict(event, seq=seq))))
    return out


def write_outcomes(path: Path, outcomes: Iterable[dict]) -> None:
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        for o in outcomes:
            fh.write(canonical_json(o) + "\n")
    os.replace(tmp, path)


def read_outcomes(path: Path) -> List[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
