"""Command line entry point: ``gabm run | report | replay | validate-config``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import List, Optional

from ..errors import GabmError
from .config import ExperimentConfig
from .reference import ReferenceTable, load_reference_table
from .report import render_json, render_markdown, report_runs, write_report
from .runner import replay, run

EXIT_OK, EXIT_FAILURES, EXIT_ERROR = 0, 1, 2


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML or JSON experiment config; flags override its fields")
    p.add_argument("--study", choices=("tpp", "pgg"))
    p.add_argument("--condition", action="append", dest="conditions",
                   help="condition to run (repeatable); defaults to the study's main conditions")
    p.add_argument("--architecture")
    p.add_argument("-n", type=int, dest="n", help="games (tpp) or sessions (pgg) per condition")
    p.add_argument("--seed", type=int)
    p.add_argument("--backend", choices=("scripted", "remote"))
    p.add_argument("--out", dest="output_dir", help="directory that receives run directories")
    p.add_argument("--workers", type=int)
    p.add_argument("--run-id")
    p.add_argument("--model")
    p.add_argument("--endpoint")
    p.add_argument("--api-key-env", help="environment variable holding the API key")
    p.add_argument("--temperature", type=float)


def _config_from_args(args) -> ExperimentConfig:
    data = {}
    if args.config:
        data = ExperimentConfig.from_file(args.config).to_dict()
        if args.run_id is None and any(
            getattr(args, k) is not None for k in ("study", "conditions", "architecture", "n", "seed")
        ):
            data["run_id"] = None  # let the overridden fields name the run
    for key in ("study", "conditions", "architecture", "n", "seed", "backend", "output_dir",
                "workers", "run_id", "model", "endpoint", "api_key_env", "temperature"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    if "study" not in data:
        raise SystemExit("error: --study or --config is required")
    return ExperimentConfig.from_dict(data)


def _cmd_run(args) -> int:
    config = _config_from_args(args).validate()
    result = run(config)
    print(f"run {result.run_id}: {result.completed} replicas, {result.failures} failed, "
          f"{result.resumed} resumed -> {result.path}")
    return EXIT_FAILURES if result.failures else EXIT_OK


def _cmd_report(args) -> int:
    reference = ReferenceTable() if args.no_reference else load_reference_table(args.reference)
    report = report_runs(args.runs, reference)
    if args.out:
        paths = write_report(report, args.out)
        print(f"wrote {paths['json']} and {paths['markdown']}")
    else:
        sys.stdout.write(render_json(report) if args.format == "json" else render_markdown(report))
    return EXIT_OK


def _cmd_replay(args) -> int:
    result = replay(args.run, architecture=args.architecture, strict=not args.no_strict)
    for diff in result.diffs:
        print(json.dumps(diff, sort_keys=True))
    print(f"replayed {result.replicas} replicas of {result.run_id}: {len(result.diffs)} diff(s)")
    return EXIT_FAILURES if result.diffs else EXIT_OK


def _cmd_validate(args) -> int:
    config = _config_from_args(args).validate()
    print(json.dumps(config.to_dict(), sort_keys=True, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gabm", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run (or resume) an experiment")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("report", help="statistics and reference comparison for run directories")
    p.add_argument("runs", nargs="+", help="run directories (same study and architecture)")
    p.add_argument("--reference", help="reference table file (defaults to the bundled one)")
    p.add_argument("--no-reference", action="store_true", help="statistics only")
    p.add_argument("--format", choices=("markdown", "json"), default="markdown")
    p.add_argument("--out", help="write report.json and report.md here instead of stdout")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("replay", help="re-execute a run from its recorded cache and diff")
    p.add_argument("run", help="run directory")
    p.add_argument("--architecture", help="refuse unless the run used this architecture")
    p.add_argument("--no-strict", action="store_true", help="call the live backend on cache misses")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("validate-config", help="check a config and print it with defaults filled in")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_validate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except GabmError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
