"""Hypothesis tests reported for the two studies.

Every function returns a :class:`StatResult`. p-values come from
:func:`p_from_distribution`, which evaluates the regularized incomplete
beta/gamma functions directly.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import ConstantRegressor, DegenerateVariance, InvalidDf, StatsError, ZeroMarginal
from .special import betainc, gammaincc

KINDS = ("t", "F", "chi2", "slope")


@dataclass(frozen=True)
class StatResult:
    kind: str
    statistic: float
    df: tuple
    p_value: float
    effect_size: Optional[float] = None
    direction: int = 0
    se: Optional[float] = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "statistic", float(self.statistic))
        object.__setattr__(self, "p_value", float(self.p_value))
        object.__setattr__(self, "df", tuple(float(v) for v in self.df))
        if self.effect_size is not None:
            object.__setattr__(self, "effect_size", float(self.effect_size))
        if self.se is not None:
            object.__setattr__(self, "se", float(self.se))
        if self.kind not in KINDS:
            raise StatsError(f"unknown statistic kind {self.kind!r}")
        if not 0.0 <= self.p_value <= 1.0:
            raise StatsError(f"p-value out of range: {self.p_value}")

    @property
    def significant(self) -> bool:
        return self.p_value < 0.05

    def to_dict(self) -> dict:
        d = asdict(self)
        d["df"] = list(self.df)
        return d


def _sign(x: float) -> int:
    return int(x > 0) - int(x < 0)


def _check_df(df) -> tuple:
    if isinstance(df, (int, float)):
        df = (df,)
    df = tuple(float(v) for v in df)
    if not df or any(not math.isfinite(v) or v <= 0 for v in df):
        raise InvalidDf(f"degrees of freedom must be positive and finite, got {df}")
    return df


def p_from_distribution(statistic: float, kind: str, df) -> float:
    """Two-sided p for ``t``/``slope``; upper-tail p for ``F`` and ``chi2``."""
    df = _check_df(df)
    if kind in ("t", "slope"):
        nu = df[0]
        t = abs(statistic)
        if t == 0:
            return 1.0
        if math.isinf(t):
            return 0.0
        return min(1.0, betainc(nu / 2.0, 0.5, nu / (nu + t * t)))
    if kind == "F":
        if len(df) != 2:
            raise InvalidDf("F distribution needs (df1, df2)")
        d1, d2 = df
        if statistic <= 0:
            return 1.0
        if math.isinf(statistic):
            return 0.0
        return betainc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * statistic))
    if kind == "chi2":
        if statistic <= 0:
            return 1.0
        if math.isinf(statistic):
            return 0.0
        return gammaincc(df[0] / 2.0, statistic / 2.0)
    raise StatsError(f"unknown distribution kind {kind!r}")


def _as_sample(values, name: str, min_len: int) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size < min_len:
        raise StatsError(f"{name} needs at least {min_len} observations")
    return arr


def t_test_ind(a: Sequence[float], b: Sequence[float], pooled: bool = True) -> StatResult:
    """Independent-samples t-test (Student when ``pooled``, else Welch).

    ``effect_size`` is Cohen's d with the pooled standard deviation.
    """
    a = _as_sample(a, "a", 2)
    b = _as_sample(b, "b", 2)
    n1, n2 = a.size, b.size
    m1, m2 = a.mean(), b.mean()
    v1, v2 = a.var(ddof=1), b.var(ddof=1)
    sp2 = ((n1 - 1) * v1 + (n2 - 1) * v2) / (n1 + n2 - 2)
    if pooled:
        se = math.sqrt(sp2 * (1.0 / n1 + 1.0 / n2))
        df = float(n1 + n2 - 2)
    else:
        q1, q2 = v1 / n1, v2 / n2
        se = math.sqrt(q1 + q2)
        df = (q1 + q2) ** 2 / (q1 ** 2 / (n1 - 1) + q2 ** 2 / (n2 - 1)) if se > 0 else float(n1 + n2 - 2)
    diff = m1 - m2
    if se == 0:
        if diff == 0:
            raise DegenerateVariance("both samples are constant and equal")
        t = math.copysign(math.inf, diff)
    else:
        t = diff / se
    d = float(diff / math.sqrt(sp2)) if sp2 > 0 else None
    diff = float(diff)
    return StatResult(
        kind="t",
        statistic=float(t),
        df=(df,),
        p_value=p_from_distribution(t, "t", df),
        effect_size=d,
        direction=_sign(diff),
        se=se,
        extra={"mean_a": float(m1), "mean_b": float(m2), "pooled": pooled, "n_a": n1, "n_b": n2},
    )


def ols_simple(y: Sequence[float], x: Sequence[float]) -> StatResult:
    """Least-squares slope of ``y`` on a single regressor ``x``."""
    y = _as_sample(y, "y", 3)
    x = _as_sample(x, "x", 3)
    if x.size != y.size:
        raise StatsError("x and y must have the same length")
    n = y.size
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    if sxx == 0:
        raise ConstantRegressor("regressor is constant")
    syy = float(yc @ yc)
    slope = float(xc @ yc) / sxx
    intercept = y.mean() - slope * x.mean()
    resid = y - (intercept + slope * x)
    ssr = float(resid @ resid)
    perfect = ssr <= 1e-24 * max(syy, 1.0)
    df = float(n - 2)
    if perfect:
        se = 0.0
        t = 0.0 if slope == 0 else math.copysign(math.inf, slope)
    else:
        se = math.sqrt(ssr / df / sxx)
        t = slope / se
    r2 = 1.0 - ssr / syy if syy > 0 else 1.0
    return StatResult(
        kind="slope",
        statistic=slope,
        df=(df,),
        p_value=p_from_distribution(t, "t", df),
        effect_size=slope,
        direction=_sign(slope),
        se=se,
        extra={"t": t, "intercept": float(intercept), "r_squared": r2, "perfect_fit": perfect, "n": n},
    )


def anova_oneway(groups: Sequence[Sequence[float]]) -> StatResult:
    """Between-groups one-way ANOVA with eta squared as effect size."""
    arrays = [_as_sample(g, f"group {i}", 2) for i, g in enumerate(groups)]
    if len(arrays) < 2:
        raise StatsError("ANOVA needs at least two groups")
    allv = np.concatenate(arrays)
    grand = allv.mean()
    ss_between = float(sum(g.size * (g.mean() - grand) ** 2 for g in arrays))
    ss_within = float(sum(((g - g.mean()) ** 2).sum() for g in arrays))
    k, n = len(arrays), allv.size
    df1, df2 = float(k - 1), float(n - k)
    if ss_within == 0:
        if ss_between == 0:
            raise DegenerateVariance("all observations are identical")
        f = math.inf
    else:
        f = (ss_between / df1) / (ss_within / df2)
    means = [float(g.mean()) for g in arrays]
    return StatResult(
        kind="F",
        statistic=f,
        df=(df1, df2),
        p_value=p_from_distribution(f, "F", (df1, df2)),
        effect_size=ss_between / (ss_between + ss_within),
        direction=_sign(means[-1] - means[0]),
        extra={"ss_between": ss_between, "ss_within": ss_within, "means": means},
    )


def paired_f(a: Sequence[float], b: Sequence[float]) -> StatResult:
    """Paired contrast reported as F(1, n-1) = t^2, with partial eta squared."""
    a = _as_sample(a, "a", 2)
    b = _as_sample(b, "b", 2)
    if a.size != b.size:
        raise StatsError("paired samples must have equal length")
    d = a - b
    n = d.size
    sd = d.std(ddof=1)
    mean = d.mean()
    if sd == 0:
        if mean == 0:
            raise DegenerateVariance("all paired differences are zero")
        f = math.inf
    else:
        t = mean / (sd / math.sqrt(n))
        f = t * t
    df2 = float(n - 1)
    eta = 1.0 if math.isinf(f) else f / (f + df2)
    return StatResult(
        kind="F",
        statistic=f,
        df=(1.0, df2),
        p_value=p_from_distribution(f, "F", (1.0, df2)),
        effect_size=eta,
        direction=_sign(mean),
        extra={"mean_a": float(a.mean()), "mean_b": float(b.mean())},
    )


def chi_square_2x2(table) -> StatResult:
    """Pearson chi-square on a 2x2 table, no continuity correction.

    ``effect_size`` is the signed phi coefficient.
    """
    obs = np.asarray(table, dtype=float)
    if obs.shape != (2, 2):
        raise StatsError("table must be 2x2")
    if (obs < 0).any():
        raise StatsError("counts must be non-negative")
    rows, cols = obs.sum(axis=1), obs.sum(axis=0)
    if (rows == 0).any() or (cols == 0).any():
        raise ZeroMarginal("every row and column total must be positive")
    total = obs.sum()
    expected = np.outer(rows, cols) / total
    chi2 = float(((obs - expected) ** 2 / expected).sum())
    cross = obs[0, 0] * obs[1, 1] - obs[0, 1] * obs[1, 0]
    phi = _sign(cross) * math.sqrt(chi2 / total)
    return StatResult(
        kind="chi2",
        statistic=chi2,
        df=(1.0,),
        p_value=p_from_distribution(chi2, "chi2", 1),
        effect_size=phi,
        direction=_sign(cross),
        extra={"expected": expected.tolist()},
    )


def linear_trend(round_means: Sequence[float], rounds: int = 6) -> StatResult:
    """Regress per-round means on round index 1..rounds.

    The F statistic (``extra['F']``) is the squared slope t with df
    (1, rounds - 2); ``effect_size`` is R^2.
    """
    means = np.asarray(round_means, dtype=float)
    if means.size != rounds:
        raise StatsError(f"expected exactly {rounds} round means, got {means.size}")
    fit = ols_simple(means, np.arange(1, rounds + 1, dtype=float))
    t = fit.extra["t"]
    f = t * t
    p = fit.p_value
    if p < 0.05 and fit.statistic > 0:
        trend = "Increasing"
    elif p < 0.05 and fit.statistic < 0:
        trend = "Decreasing"
    else:
        trend = "NoTrend"
    return StatResult(
        kind="slope",
        statistic=fit.statistic,
        df=(1.0, float(rounds - 2)),
        p_value=p,
        effect_size=fit.extra["r_squared"],
        direction=fit.direction,
        se=fit.se,
        extra={"F": f, "trend": trend, "perfect_fit": fit.extra["perfect_fit"], "t": t},
    )
