"""Experiment orchestration, persistence and reporting."""

from .config import ExperimentConfig
from .reference import ReferenceEntry, ReferenceTable, load_reference_table
from .report import build_report, render_json, render_markdown, report_runs, write_report
from .runner import ReplayResult, RunResult, load_run, replay, run, sample_runs

__all__ = [
    "ExperimentConfig",
    "ReferenceEntry",
    "ReferenceTable",
    "ReplayResult",
    "RunResult",
    "build_report",
    "load_reference_table",
    "load_run",
    "render_json",
    "render_markdown",
    "replay",
    "report_runs",
    "run",
    "sample_runs",
    "write_report",
]
