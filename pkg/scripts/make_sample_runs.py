"""Regenerate the bundled sample runs under src/gabm/data/sample_runs.

The TPP sample keeps its full recording (cache and per-replica transcripts)
so it can be replayed; the PGG sample keeps only the config snapshot and
outcome records to stay small.
"""

from __future__ import annotations

import os
import shutil
from pathlib import Path

from gabm.harness import ExperimentConfig, run

ROOT = Path(__file__).resolve().parents[1] / "src" / "gabm" / "data" / "sample_runs"

SAMPLES = [
    (ExperimentConfig(study="tpp", conditions=["public", "private"], n=30, seed=2024,
                      output_dir="sample_runs"), True),
    (ExperimentConfig(study="pgg", n=5, seed=2024, output_dir="sample_runs", workers=4), False),
]


def main() -> None:
    ROOT.mkdir(parents=True, exist_ok=True)
    os.chdir(ROOT.parent)
    for config, keep_recording in SAMPLES:
        target = ROOT / config.run_id
        if target.exists():
            shutil.rmtree(target)
        result = run(config)
        if not keep_recording:
            shutil.rmtree(result.path / "replicas")
            (result.path / "cache.jsonl").unlink()
        print(f"{config.run_id}: {result.completed} replicas")


if __name__ == "__main__":
    main()
