"""Run, resume and replay experiments."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional

from .. import pgg, tpp
from ..agent import load_architecture
from ..backends import RecordReplayBackend, ResponseCache, make_backend
from ..errors import ConfigError, ConfigMismatch
from ..personas import load_personas
from ..seeding import derive_seed
from ..util import canonical_json
from .config import ExperimentConfig
from .transcript import (
    SCHEMA_VERSION,
    normalize_events,
    read_outcomes,
    read_replica,
    replica_name,
    write_outcomes,
    write_replica,
)

log = logging.getLogger(__name__)

CONFIG_FILE = "config.json"
CACHE_FILE = "cache.jsonl"
OUTCOMES_FILE = "outcomes.jsonl"
PROGRESS_FILE = "progress.json"
REPLICA_DIR = "replicas"


@dataclass
class RunResult:
    run_id: str
    path: Path
    completed: int
    failures: int
    resumed: int = 0

    @property
    def exit_status(self) -> int:
        return 1 if self.failures else 0


def replica_seed(master: int, condition: str, index: int) -> int:
    return derive_seed(master, condition, index)


def _snapshot(config: ExperimentConfig, backend) -> dict:
    arch = load_architecture(config.architecture, config.study, config.architecture_file)
    return {
        "schema": SCHEMA_VERSION,
        "config": config.to_dict(),
        "architecture": arch.fingerprint(),
        "backend_id": backend.backend_id,
        "model_id": backend.model_id,
    }


def _inner_backend(config: ExperimentConfig):
    if config.backend == "scripted":
        return make_backend("scripted", noise_scale=config.noise_scale)
    return make_backend("remote", model=config.model, endpoint=config.endpoint,
                        api_key_env=config.api_key_env)


def _play(config: ExperimentConfig, arch, backend, pool, condition: str, index: int):
    seed = replica_seed(config.seed, condition, index)
    if config.study == "tpp":
        return tpp.play_tpp_game(index, arch, condition, backend, seed, pool, temperature=config.temperature)
    return pgg.play_pgg_session(index, arch, condition, backend, seed, pool, temperature=config.temperature)


def _replicas(config: ExperimentConfig):
    return [(c, i) for c in config.conditions for i in range(config.n)]


def run(config: ExperimentConfig, backend=None,
        on_replica: Optional[Callable[[str, int], None]] = None) -> RunResult:
    """Execute every (condition, replica) pair, skipping finished ones.

    Each finished replica is written atomically to its own transcript, so
    re-running the same config after an interruption resumes where it
    stopped. ``backend`` overrides the configured one (it is still wrapped
    in the run's record cache).
    """
    config.validate()
    run_dir = Path(config.output_dir) / config.run_id
    replica_dir = run_dir / REPLICA_DIR
    replica_dir.mkdir(parents=True, exist_ok=True)
    inner = backend or _inner_backend(config)
    cached = RecordReplayBackend(ResponseCache(run_dir / CACHE_FILE), inner, mode="record")
    snapshot = _snapshot(config, cached)
    config_path = run_dir / CONFIG_FILE
    if config_path.exists():
        previous = json.loads(config_path.read_text(encoding="utf-8"))
        if canonical_json(previous) != canonical_json(snapshot):
            raise ConfigMismatch(f"{run_dir} was created with a different configuration")
    else:
        config_path.write_text(canonical_json(snapshot) + "\n", encoding="utf-8")

    arch = load_architecture(config.architecture, config.study, config.architecture_file)
    pool = load_personas(config.persona_file)
    todo = [(c, i) for c, i in _replicas(config) if not (replica_dir / replica_name(c, i)).exists()]
    resumed = len(_replicas(config)) - len(todo)
    if resumed:
        log.info("resuming %s: %d replicas already complete", config.run_id, resumed)

    def work(item):
        condition, index = item
        result = _play(config, arch, cached, pool, condition, index)
        header = {"run_id": config.run_id, "study": config.study, "condition": condition,
                  "index": index, "seed": result.seed, "architecture": arch.name}
        write_replica(replica_dir / replica_name(condition, index), header, result.events, result.outcome())
        if on_replica:
            on_replica(condition, index)
        return item

    if config.workers == 1:
        for item in todo:
            work(item)
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool_ex:
            list(pool_ex.map(work, todo))

    outcomes = [read_replica(replica_dir / replica_name(c, i))[2] for c, i in _replicas(config)]
    write_outcomes(run_dir / OUTCOMES_FILE, outcomes)
    failures = sum(1 for o in outcomes if o.get("error"))
    (run_dir / PROGRESS_FILE).write_text(
        canonical_json({"completed": len(outcomes), "failures": failures, "total": len(outcomes)}) + "\n",
        encoding="utf-8",
    )
    return RunResult(config.run_id, run_dir, len(outcomes), failures, resumed)


def load_run(run_dir) -> tuple:
    """(snapshot, outcomes) for a finished run directory."""
    run_dir = Path(run_dir)
    snapshot = json.loads((run_dir / CONFIG_FILE).read_text(encoding="utf-8"))
    outcomes = read_outcomes(run_dir / OUTCOMES_FILE)
    return snapshot, outcomes


@dataclass
class ReplayResult:
    run_id: str
    replicas: int
    diffs: List[dict] = field(default_factory=list)

    @property
    def exit_status(self) -> int:
        return 1 if self.diffs else 0


def _first_difference(a: list, b: list) -> Optional[dict]:
    for i, (x, y) in enumerate(zip(a, b)):
        if x != y:
            return {"position": i, "recorded": x, "replayed": y}
    if len(a) != len(b):
        return {"position": min(len(a), len(b)), "recorded_len": len(a), "replayed_len": len(b)}
    return None


def replay(run_dir, architecture: Optional[str] = None, strict: bool = True) -> ReplayResult:
    """Re-execute a recorded run purely from its cache and diff the results."""
    run_dir = Path(run_dir)
    snapshot = json.loads((run_dir / CONFIG_FILE).read_text(encoding="utf-8"))
    config = ExperimentConfig.from_dict(snapshot["config"])
    if architecture is not None and architecture != config.architecture:
        raise ConfigMismatch(f"run used architecture {config.architecture!r}, not {architecture!r}")
    arch = load_architecture(config.architecture, config.study, config.architecture_file)
    if canonical_json(arch.fingerprint()) != canonical_json(snapshot["architecture"]):
        raise ConfigMismatch("architecture definition changed since the run was recorded")
    cache_path = run_dir / CACHE_FILE
    if not cache_path.exists():
        raise ConfigError(f"{run_dir} has no recorded cache")
    mode = "replay" if strict else "record"
    inner = None if strict else _inner_backend(config)
    backend = RecordReplayBackend(ResponseCache(cache_path), inner, mode=mode,
                                  backend_id=snapshot["backend_id"], model_id=snapshot["model_id"])
    pool = load_personas(config.persona_file)
    result = ReplayResult(config.run_id, 0)
    for condition, index in _replicas(config):
        path = run_dir / REPLICA_DIR / replica_name(condition, index)
        _, events, outcome = read_replica(path)
        game = _play(config, arch, backend, pool, condition, index)
        result.replicas += 1
        replayed_outcome = json.loads(canonical_json(game.outcome()))
        if replayed_outcome != outcome:
            result.diffs.append({"replica": f"{condition}/{index}", "what": "outcome",
                                 "detail": _dict_diff(outcome, replayed_outcome)})
        diff = _first_difference(events, normalize_events(game.events))
        if diff:
            result.diffs.append({"replica": f"{condition}/{index}", "what": "events", "detail": diff})
    return result


def _dict_diff(a, b, prefix=""):
    if isinstance(a, dict) and isinstance(b, dict):
        out = []
        for k in sorted(set(a) | set(b)):
            out.extend(_dict_diff(a.get(k), b.get(k), f"{prefix}.{k}" if prefix else str(k)))
        return out
    if a != b:
        return [{"path": prefix, "recorded": a, "replayed": b}]
    return []


def sample_runs() -> dict:
    """Bundled recorded runs keyed by study (regenerate with scripts/make_sample_runs.py)."""
    from importlib import resources

    root = Path(str(resources.files("gabm") / "data" / "sample_runs"))
    out = {}
    for d in sorted(p for p in root.iterdir() if (p / CONFIG_FILE).exists()):
        study = json.loads((d / CONFIG_FILE).read_text(encoding="utf-8"))["config"]["study"]
        out[study] = d
    return out
