"""Reported reference statistics used to validate simulated populations."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import yaml

from ..errors import ConfigError
from ..stats import p_from_distribution

ENTRY_KINDS = ("slope", "t", "F", "chi2", "trend", "mean", "rate")
INFERENTIAL = ("slope", "t", "F", "chi2", "trend")


@dataclass(frozen=True)
class ReferenceEntry:
    analysis: str
    architecture: str
    kind: str
    value: float
    citation: str
    df: Tuple[float, ...] = ()
    se: Optional[float] = None
    sd: Optional[float] = None
    eta2: Optional[float] = None
    p: Optional[float] = None
    direction: Optional[int] = None
    significant: Optional[bool] = None
    trend: Optional[str] = None

    @classmethod
    def from_dict(cls, d: dict) -> "ReferenceEntry":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown reference field(s) {sorted(extra)} in {d}")
        d = dict(d)
        d["df"] = tuple(float(v) for v in d.get("df") or ())
        d["value"] = float(d["value"])
        entry = cls(**d)
        if entry.kind not in ENTRY_KINDS:
            raise ConfigError(f"unknown reference kind {entry.kind!r}")
        return entry

    @property
    def is_significant(self) -> Optional[bool]:
        """Stated significance, else derived from the statistic and its df."""
        if self.significant is not None:
            return self.significant
        if self.p is not None:
            return self.p < 0.05
        if self.kind in ("t", "F", "chi2", "trend") and self.df:
            kind = "F" if self.kind == "trend" else self.kind
            return p_from_distribution(self.value, kind, self.df) < 0.05
        return None

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["df"] = list(self.df)
        d["significant"] = self.is_significant
        return {k: v for k, v in d.items() if v is not None and v != []}


@dataclass
class ReferenceTable:
    entries: List[ReferenceEntry] = field(default_factory=list)
    citations: Dict[str, str] = field(default_factory=dict)
    analyses: Dict[str, str] = field(default_factory=dict)

    def __len__(self):
        return len(self.entries)

    def validate(self) -> "ReferenceTable":
        for e in self.entries:
            if e.citation not in self.citations:
                raise ConfigError(f"{e.analysis}/{e.architecture}: unknown citation {e.citation!r}")
            if e.analysis not in self.analyses:
                raise ConfigError(f"{e.analysis}: analysis id not declared")
        return self

    def lookup(self, analysis: str, architectures=None) -> List[ReferenceEntry]:
        return [
            e for e in self.entries
            if e.analysis == analysis and (architectures is None or e.architecture in architectures)
        ]

    def describe(self, analysis: str) -> str:
        return self.analyses.get(analysis, analysis)


def default_reference_path() -> Path:
    return Path(str(resources.files("gabm") / "data" / "reference_table.yaml"))


def load_reference_table(path=None) -> ReferenceTable:
    path = Path(path) if path else default_reference_path()
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read reference table {path}: {exc}") from exc
    table = ReferenceTable(
        entries=[ReferenceEntry.from_dict(d) for d in raw.get("entries", [])],
        citations=dict(raw.get("citations", {})),
        analyses=dict(raw.get("analyses", {})),
    )
    return table.validate()
