from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import List, Optional

import yaml

from .. import pgg, tpp
from ..agent import load_architecture
from ..backends import BACKENDS
from ..errors import ConfigError

STUDIES = ("tpp", "pgg")
DEFAULT_CONDITIONS = {"tpp": ["public"], "pgg": ["basic", "gossip", "gossip_ostracism"]}
DEFAULT_ARCHITECTURE = {"tpp": "Social", "pgg": "SocialStrategic"}
DEFAULT_N = {"tpp": 100, "pgg": 5}
STUDY_CONDITIONS = {"tpp": tpp.CONDITIONS, "pgg": pgg.CONDITIONS}


@dataclass
class ExperimentConfig:
    study: str
    conditions: List[str] = field(default_factory=list)
    architecture: str = ""
    n: int = 0
    seed: int = 0
    backend: str = "scripted"
    output_dir: str = "runs"
    run_id: Optional[str] = None
    workers: int = 1
    temperature: float = 1.0
    noise_scale: float = 0.15
    model: str = "gpt-4o"
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    api_key_env: str = "OPENAI_API_KEY"
    persona_file: Optional[str] = None
    architecture_file: Optional[str] = None

    def __post_init__(self):
        if self.study in STUDIES:
            self.conditions = list(self.conditions or DEFAULT_CONDITIONS[self.study])
            self.architecture = self.architecture or DEFAULT_ARCHITECTURE[self.study]
            self.n = self.n or DEFAULT_N[self.study]
        if self.run_id is None and self.study in STUDIES:
            self.run_id = f"{self.study}-{self.architecture}-{'+'.join(self.conditions)}-n{self.n}-s{self.seed}"

    def validate(self) -> "ExperimentConfig":
        if self.study not in STUDIES:
            raise ConfigError(f"study must be one of {STUDIES}, got {self.study!r}")
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        bad = [c for c in self.conditions if c not in STUDY_CONDITIONS[self.study]]
        if bad:
            raise ConfigError(f"unknown {self.study} condition(s) {bad}; known: {list(STUDY_CONDITIONS[self.study])}")
        if len(set(self.conditions)) != len(self.conditions):
            raise ConfigError("conditions must be distinct")
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.temperature < 0 or self.noise_scale < 0:
            raise ConfigError("temperature and noise_scale must be >= 0")
        load_architecture(self.architecture, self.study, self.architecture_file)
        if self.persona_file and not Path(self.persona_file).exists():
            raise ConfigError(f"persona file {self.persona_file} not found")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config field(s): {unknown}")
        if "study" not in data:
            raise ConfigError("config needs a 'study' field")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        text = Path(path).read_text(encoding="utf-8")
        try:
            data = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
        except (ValueError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path} must contain a mapping")
        return cls.from_dict(data)
