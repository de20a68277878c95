"""Statistics over recorded outcomes, compared against reference values.

A report is a plain dict, so the JSON rendering is a canonical dump and the
Markdown rendering is derived from it; both are deterministic functions of
the outcome records and the reference table.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from ..errors import ConfigError, MissingAnalysis, StatsError
from ..stats import (
    StatResult,
    anova_oneway,
    chi_square_2x2,
    linear_trend,
    ols_simple,
    paired_f,
    t_test_ind,
)
from .reference import ReferenceEntry, ReferenceTable
from .runner import load_run

HUMAN = "Human"
PGG_MAIN = ("basic", "gossip", "gossip_ostracism")
PGG_PAIRS = (
    ("gossip_vs_basic", "basic", "gossip"),
    ("gossip_ostracism_vs_basic", "basic", "gossip_ostracism"),
    ("gossip_ostracism_vs_gossip", "gossip", "gossip_ostracism"),
)


def _describe(values: Sequence[float]) -> dict:
    arr = np.asarray(values, dtype=float)
    sd = float(arr.std(ddof=1)) if arr.size > 1 else None
    return {"n": int(arr.size), "mean": float(arr.mean()) if arr.size else None, "sd": sd}


def _trend_direction(stat: dict) -> int:
    return {"Increasing": 1, "Decreasing": -1}.get(stat["extra"]["trend"], 0)


def _compare(row: dict, entry: ReferenceEntry) -> dict:
    """Match flags of one computed row against one reference entry."""
    out = {"architecture": entry.architecture, "citation": entry.citation,
           "kind": entry.kind, "value": entry.value}
    stat = row.get("stat")
    if entry.kind in ("mean", "rate"):
        ours = row.get("summary", {}).get("mean") if entry.kind == "mean" else row.get("summary", {}).get("rate")
        out["difference"] = None if ours is None else ours - entry.value
        return out
    ref_sig = entry.is_significant
    out["significant"] = ref_sig
    out["direction"] = entry.direction
    if stat is None:
        out.update(direction_match=None, significance_match=None, match=None)
        return out
    ours_dir = _trend_direction(stat) if entry.kind == "trend" else stat["direction"]
    ours_sig = stat["p_value"] < 0.05
    direction_match = None if entry.direction is None else ours_dir == entry.direction
    significance_match = None if ref_sig is None else ours_sig == ref_sig
    out["direction_match"] = direction_match
    out["significance_match"] = significance_match
    out["match"] = bool(direction_match) and bool(significance_match)
    return out


def _row(analysis: str, stat: Optional[StatResult] = None, *, summary: Optional[dict] = None,
         error: Optional[str] = None, **extra) -> dict:
    row = {"analysis": analysis}
    if stat is not None:
        row["stat"] = stat.to_dict()
    if summary is not None:
        row["summary"] = summary
    if error is not None:
        row["error"] = error
    row.update(extra)
    return row


def _safe(analysis: str, fn, *args, **kwargs) -> dict:
    try:
        return _row(analysis, fn(*args, **kwargs))
    except StatsError as exc:
        return _row(analysis, error=f"{type(exc).__name__}: {exc}")


def _by_condition(outcomes: Iterable[dict]) -> Dict[str, List[dict]]:
    groups: Dict[str, List[dict]] = {}
    for o in outcomes:
        groups.setdefault(o["condition"], []).append(o)
    return groups


def _replica_counts(groups: Dict[str, List[dict]]) -> dict:
    return {
        c: {"completed": sum(1 for o in rows if not o.get("error")),
            "failed": sum(1 for o in rows if o.get("error"))}
        for c, rows in sorted(groups.items())
    }


# TPP ------------------------------------------------------------------------

def tpp_rows(outcomes: Sequence[dict]) -> List[dict]:
    groups = _by_condition(o for o in outcomes if not o.get("error"))
    if "public" not in groups:
        raise MissingAnalysis("TPP report needs the public condition")
    games = groups["public"]
    punished = [1.0 if g["stage1"]["punished"] else 0.0 for g in games]
    sent_pct = [g["stage2"]["sent_pct"] for g in games]
    sent = [g["stage2"]["sent"] for g in games]
    to_p = [s for s, p in zip(sent_pct, punished) if p]
    to_np = [s for s, p in zip(sent_pct, punished) if not p]
    rows = [
        _safe("tpp.trust.coef", ols_simple, sent_pct, punished),
        _safe("tpp.trust.coef_amount", ols_simple, sent, punished),
        _safe("tpp.trust.t", t_test_ind, to_p, to_np),
    ]
    # returns are undefined when nothing was sent
    trusted = [g for g in games if g["stage2"]["sent"] > 0]
    ret = [g["stage2"]["returned_pct"] for g in trusted]
    ret_p = [1.0 if g["stage1"]["punished"] else 0.0 for g in trusted]
    by_p = [r for r, p in zip(ret, ret_p) if p]
    by_np = [r for r, p in zip(ret, ret_p) if not p]
    rows += [
        _safe("tpp.trustworthiness.coef", ols_simple, ret, ret_p),
        _safe("tpp.trustworthiness.t", t_test_ind, by_p, by_np),
        _row("tpp.sent.punishers", summary=_describe(to_p)),
        _row("tpp.sent.non_punishers", summary=_describe(to_np)),
        _row("tpp.returned.punishers", summary=_describe(by_p)),
        _row("tpp.returned.non_punishers", summary=_describe(by_np)),
    ]
    counts = {}
    for condition in ("public", "private"):
        if condition in groups:
            k = sum(1 for g in groups[condition] if g["stage1"]["punished"])
            n = len(groups[condition])
            counts[condition] = (k, n)
            rows.append(_row(f"tpp.punish_rate.{condition}",
                             summary={"n": n, "punished": k, "rate": 100.0 * k / n}))
    if len(counts) == 2:
        (kp, np_), (kq, nq) = counts["public"], counts["private"]
        rows.append(_safe("tpp.public_vs_private.chi2", chi_square_2x2,
                          [[kp, np_ - kp], [kq, nq - kq]]))
    return rows


# PGG ------------------------------------------------------------------------

def _agent_sums(sessions: Sequence[dict]) -> List[float]:
    out: List[float] = []
    for s in sessions:
        out.extend(float(s["sums"][a["name"]]) for a in s["agents"])
    return out


def _pooled_round_means(sessions: Sequence[dict]) -> List[float]:
    per_session = []
    for s in sessions:
        n = len(s["agents"])
        per_session.append([sum(r["contributions"].values()) / n for r in s["rounds"]])
    return [float(v) for v in np.mean(np.asarray(per_session, dtype=float), axis=0)]


def _pairwise(analysis: str, first: List[float], second: List[float]) -> dict:
    row = _safe(analysis, anova_oneway, [first, second])
    if "stat" in row and len(first) == len(second):
        try:
            paired = paired_f(second, first)
            row["paired"] = {"F": paired.statistic, "df": list(paired.df), "p_value": paired.p_value,
                             "effect_size": paired.effect_size}
        except StatsError as exc:
            row["paired"] = {"error": f"{type(exc).__name__}: {exc}"}
    return row


def pgg_rows(outcomes: Sequence[dict]) -> List[dict]:
    groups = _by_condition(o for o in outcomes if not o.get("error") and len(o["rounds"]) == 6)
    if "basic" not in groups:
        raise MissingAnalysis("PGG report needs the basic condition")
    sums = {c: _agent_sums(groups[c]) for c in groups}
    present = [c for c in PGG_MAIN if c in sums]
    rows = []
    if len(present) >= 2:
        rows.append(_safe("pgg.anova.overall", anova_oneway, [sums[c] for c in present]))
    for name, lo, hi in PGG_PAIRS:
        if lo in sums and hi in sums:
            rows.append(_pairwise(f"pgg.pairwise.{name}", sums[lo], sums[hi]))
    if "discussion" in sums and "gossip_ostracism" in sums:
        rows.append(_safe("pgg.pairwise.gossip_ostracism_vs_discussion", t_test_ind,
                          sums["gossip_ostracism"], sums["discussion"]))
    for c in PGG_MAIN + ("discussion",):
        if c in sums:
            rows.append(_row(f"pgg.mean.{c}", summary=_describe(sums[c])))
    for c in PGG_MAIN + ("discussion",):
        if c in groups:
            means = _pooled_round_means(groups[c])
            row = _safe(f"pgg.trend.{c}", linear_trend, means)
            row["round_means"] = means
            rows.append(row)
    return rows


# assembly -------------------------------------------------------------------

def build_report(outcomes: Sequence[dict], reference: Optional[ReferenceTable] = None,
                 architecture: Optional[str] = None) -> dict:
    """Compute every analysis the outcomes support and attach comparisons.

    With an empty (or absent) reference table the rows carry statistics
    only. Otherwise each row lists the reference entries for the run's
    architecture and for the human study with direction and significance
    match flags.
    """
    outcomes = list(outcomes)
    if not outcomes:
        raise MissingAnalysis("no outcome records")
    studies = {o["study"] for o in outcomes}
    archs = {o["architecture"] for o in outcomes}
    if len(studies) != 1 or len(archs) != 1:
        raise ConfigError(f"cannot mix studies {sorted(studies)} or architectures {sorted(archs)} in one report")
    study = studies.pop()
    architecture = architecture or archs.pop()
    rows = tpp_rows(outcomes) if study == "tpp" else pgg_rows(outcomes)
    compare = bool(reference)
    for row in rows:
        if compare:
            row["description"] = reference.describe(row["analysis"])
            row["reference"] = [
                _compare(row, e) for e in reference.lookup(row["analysis"], (architecture, HUMAN))
            ]
    return {
        "study": study,
        "architecture": architecture,
        "replicas": _replica_counts(_by_condition(outcomes)),
        "compared": compare,
        "rows": rows,
    }


def report_runs(run_dirs: Iterable, reference: Optional[ReferenceTable] = None) -> dict:
    outcomes: List[dict] = []
    run_ids = []
    for d in run_dirs:
        snapshot, recs = load_run(d)
        run_ids.append(snapshot["config"]["run_id"])
        outcomes.extend(recs)
    report = build_report(outcomes, reference)
    report["runs"] = run_ids
    return report


def _clean(obj):
    # NaN/inf are not JSON; degenerate fits report them as null
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def render_json(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _fmt(v, digits: int = 3) -> str:
    if v is None:
        return "n/a"
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        if not math.isfinite(v):
            return "n/a"
        return f"{v:.{digits}g}" if abs(v) < 1e-3 and v != 0 else f"{v:.{digits}f}"
    return str(v)


def _stat_cell(row: dict) -> str:
    if "error" in row:
        return f"not computable ({row['error']})"
    if "stat" in row:
        s = row["stat"]
        df = ", ".join(_fmt(d, 0) for d in s["df"])
        if row["analysis"].startswith("pgg.trend."):
            return (f"slope={_fmt(s['statistic'])}, F({df})={_fmt(s['extra']['F'], 2)}, "
                    f"p={_fmt(s['p_value'], 4)}, R2={_fmt(s['effect_size'], 2)} ({s['extra']['trend']})")
        label = {"t": "t", "F": "F", "chi2": "chi2", "slope": "coef"}[s["kind"]]
        text = f"{label}({df})={_fmt(s['statistic'])}, p={_fmt(s['p_value'], 4)}"
        if s["se"] is not None:
            text += f", SE={_fmt(s['se'])}"
        if s["kind"] == "F" and s["effect_size"] is not None:
            text += f", eta2={_fmt(s['effect_size'], 2)}"
        if "paired" in row and "F" in row["paired"]:
            p = row["paired"]
            text += f"; paired F({', '.join(_fmt(d, 0) for d in p['df'])})={_fmt(p['F'])}"
        return text
    s = row["summary"]
    if "rate" in s:
        return f"{_fmt(s['rate'], 1)}% ({s['punished']}/{s['n']})"
    return f"M={_fmt(s['mean'], 2)}, SD={_fmt(s['sd'], 2)}, n={s['n']}"


def _ref_cell(ref: dict) -> str:
    text = f"{ref['architecture']}: {_fmt(ref['value'])}"
    if "difference" in ref:
        return text + f" (diff {_fmt(ref['difference'], 2)})"
    return (text + f" dir={_fmt(ref['direction_match'])} sig={_fmt(ref['significance_match'])}"
            f" match={_fmt(ref['match'])}")


def render_markdown(report: dict) -> str:
    lines = [
        f"# {report['study'].upper()} report: {report['architecture']}",
        "",
        "| condition | completed | failed |",
        "|---|---|---|",
    ]
    for c, counts in report["replicas"].items():
        lines.append(f"| {c} | {counts['completed']} | {counts['failed']} |")
    lines.append("")
    if report["compared"]:
        lines += ["| analysis | ours | reference |", "|---|---|---|"]
        for row in report["rows"]:
            refs = "<br>".join(_ref_cell(r) for r in row.get("reference", [])) or "n/a"
            lines.append(f"| {row['analysis']} | {_stat_cell(row)} | {refs} |")
    else:
        lines += ["| analysis | ours |", "|---|---|"]
        for row in report["rows"]:
            lines.append(f"| {row['analysis']} | {_stat_cell(row)} |")
    return "\n".join(lines) + "\n"


def write_report(report: dict, out_dir) -> Dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"json": out_dir / "report.json", "markdown": out_dir / "report.md"}
    paths["json"].write_text(render_json(report), encoding="utf-8")
    paths["markdown"].write_text(render_markdown(report), encoding="utf-8")
    return paths
