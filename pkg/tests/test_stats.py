import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from gabm.errors import ConstantRegressor, DegenerateVariance, InvalidDf, ZeroMarginal
from gabm.stats import (
    anova_oneway,
    betainc,
    chi_square_2x2,
    gammaincc,
    linear_trend,
    ols_simple,
    p_from_distribution,
    paired_f,
    t_test_ind,
)


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


# known values

def test_t_fixture():
    r = t_test_ind([1, 2, 3], [2, 3, 4])
    assert r.statistic == pytest.approx(-1.2247, abs=1e-3)
    assert r.df == (4.0,)
    assert r.direction == -1


def test_t_identical_samples():
    r = t_test_ind([1, 5, 2, 8], [1, 5, 2, 8])
    assert r.statistic == 0 and r.p_value == 1.0


def test_t_degenerate():
    with pytest.raises(DegenerateVariance):
        t_test_ind([3, 3, 3], [3, 3])


def test_welch_df():
    a, b = [1.0, 2.0, 4.0, 9.0], [2.0, 2.5, 2.7]
    r = t_test_ind(a, b, pooled=False)
    va, vb = oracles.var(a) / 4, oracles.var(b) / 3
    assert r.df[0] == pytest.approx((va + vb) ** 2 / (va ** 2 / 3 + vb ** 2 / 2), rel=1e-12)
    assert r.statistic == pytest.approx(oracles.welch_t(a, b), rel=1e-12)


def test_chi2_fixtures():
    assert chi_square_2x2([[10, 10], [10, 10]]).statistic == 0
    r = chi_square_2x2([[30, 20], [10, 40]])
    assert r.statistic == pytest.approx(16.667, abs=1e-3)
    assert r.df == (1.0,)
    with pytest.raises(ZeroMarginal):
        chi_square_2x2([[0, 0], [3, 4]])


def test_anova_fixtures():
    r = anova_oneway([[1, 2], [3, 4]])
    assert r.statistic == pytest.approx(8.0, abs=1e-3)
    assert r.effect_size == pytest.approx(0.8, abs=1e-3)
    assert r.df == (1.0, 2.0)
    assert anova_oneway([[1, 3], [0, 4], [2, 2]]).statistic == 0
    with pytest.raises(DegenerateVariance):
        anova_oneway([[1, 1], [1, 1]])


def test_ols_binary_regressor_equals_mean_difference():
    y = [3.0, 5.0, 4.0, 9.0, 10.0, 8.0, 7.5]
    x = [0, 0, 0, 1, 1, 1, 1]
    r = ols_simple(y, x)
    assert r.statistic == pytest.approx(sum(y[3:]) / 4 - sum(y[:3]) / 3, rel=1e-12)


def test_ols_perfect_fit():
    r = ols_simple([1, 2, 3], [0, 1, 2])
    assert r.statistic == pytest.approx(1.0)
    assert r.se == 0.0 and r.extra["perfect_fit"]
    with pytest.raises(ConstantRegressor):
        ols_simple([1, 2, 3], [1, 1, 1])


def test_linear_trend():
    flat = linear_trend([5] * 6)
    assert flat.statistic == 0 and flat.extra["trend"] == "NoTrend"
    down = linear_trend([6, 5, 4, 3, 2, 1])
    assert down.statistic == pytest.approx(-1.0)
    assert down.extra["perfect_fit"] and down.extra["trend"] == "Decreasing"
    assert down.df == (1.0, 4.0)


def test_p_fixtures():
    assert p_from_distribution(0.0, "t", 7) == 1.0
    assert p_from_distribution(0.0, "F", (2, 9)) == 1.0
    assert p_from_distribution(3.841, "chi2", 1) == pytest.approx(0.05, abs=1e-4)
    assert p_from_distribution(3.841, "chi2", 1) == pytest.approx(oracles.p_chi2_quad(3.841, 1), abs=1e-8)
    with pytest.raises(InvalidDf):
        p_from_distribution(1.0, "t", 0)
    with pytest.raises(InvalidDf):
        p_from_distribution(1.0, "F", (1, -3))


def test_reported_trend_p_value_is_consistent():
    # F(1, 4) = 55.39 is reported next to p = 0.0017
    assert p_from_distribution(55.39, "F", (1, 4)) == pytest.approx(0.0017, abs=5e-5)


def test_special_function_edges():
    assert betainc(2.0, 3.0, 0.0) == 0.0
    assert betainc(2.0, 3.0, 1.0) == 1.0
    # I_x(1, 1) = x; Q(1, x) = exp(-x)
    assert betainc(1.0, 1.0, 0.37) == pytest.approx(0.37, abs=1e-15)
    assert gammaincc(1.0, 2.5) == pytest.approx(math.exp(-2.5), abs=1e-15)


# oracle equivalence on random instances

def _sample(rng, lo=2, hi=12):
    return [rng.uniform(-50, 50) for _ in range(rng.randint(lo, hi))]


def test_oracle_equivalence_random_instances():
    rng = random.Random(20240611)
    for _ in range(200):
        a, b = _sample(rng), _sample(rng)
        r = t_test_ind(a, b)
        assert rel(r.statistic, oracles.student_t(a, b)) < 1e-9
        assert abs(r.p_value - oracles.p_t_quad(r.statistic, r.df[0])) < 1e-8
        w = t_test_ind(a, b, pooled=False)
        assert rel(w.statistic, oracles.welch_t(a, b)) < 1e-9
        assert abs(w.p_value - oracles.p_t_quad(w.statistic, w.df[0])) < 1e-8

        x = [rng.uniform(-5, 5) for _ in range(rng.randint(3, 15))]
        y = [rng.uniform(-5, 5) for _ in x]
        o = ols_simple(y, x)
        slope, se = oracles.ols(y, x)
        assert rel(o.statistic, slope) < 1e-9 and rel(o.se, se) < 1e-9

        groups = [_sample(rng) for _ in range(rng.randint(2, 5))]
        f = anova_oneway(groups)
        f_ref, eta_ref = oracles.anova(groups)
        assert rel(f.statistic, f_ref) < 1e-9 and rel(f.effect_size, eta_ref) < 1e-9
        assert abs(f.p_value - oracles.p_f_quad(f.statistic, *f.df)) < 1e-8

        table = [[rng.randint(1, 60) for _ in range(2)] for _ in range(2)]
        c = chi_square_2x2(table)
        assert rel(c.statistic, oracles.chi2(table)) < 1e-9
        assert abs(c.p_value - oracles.p_chi2_quad(c.statistic, 1)) < 1e-8

        means = [rng.uniform(0, 10) for _ in range(6)]
        tr = linear_trend(means)
        s_ref, se_ref = oracles.ols(means, [1, 2, 3, 4, 5, 6])
        assert rel(tr.statistic, s_ref) < 1e-9
        assert rel(tr.extra["F"], (s_ref / se_ref) ** 2) < 1e-9


@pytest.mark.parametrize("nu", [1, 2, 3.5, 4, 10, 117, 398])
@pytest.mark.parametrize("t", [0.1, 1.0, 2.5, 6.08])
def test_t_p_against_quadrature(t, nu):
    assert abs(p_from_distribution(t, "t", nu) - oracles.p_t_quad(t, nu)) < 1e-8


@pytest.mark.parametrize("df", [(1, 2), (1, 4), (2, 117), (1, 119), (5, 30)])
@pytest.mark.parametrize("f", [0.2, 1.0, 4.0, 28.73])
def test_f_p_against_quadrature(f, df):
    assert abs(p_from_distribution(f, "F", df) - oracles.p_f_quad(f, *df)) < 1e-8


@pytest.mark.parametrize("k", [1, 2, 3, 7, 30])
@pytest.mark.parametrize("x", [0.01, 1.0, 3.841, 18.68, 60.0])
def test_chi2_p_against_quadrature(x, k):
    assert abs(p_from_distribution(x, "chi2", k) - oracles.p_chi2_quad(x, k)) < 1e-8


# invariants

samples = st.lists(st.integers(-400, 400).map(lambda v: v / 4), min_size=2, max_size=10)


@settings(max_examples=60, deadline=None)
@given(samples, samples, st.floats(0.1, 50))
def test_t_scale_invariance_and_antisymmetry(a, b, k):
    try:
        r = t_test_ind(a, b)
    except DegenerateVariance:
        return
    if not math.isfinite(r.statistic) or r.extra["mean_a"] == r.extra["mean_b"]:
        return
    scaled = t_test_ind([k * v + 3 for v in a], [k * v + 3 for v in b])
    assert scaled.statistic == pytest.approx(r.statistic, rel=1e-6, abs=1e-6)
    swapped = t_test_ind(b, a)
    assert swapped.statistic == pytest.approx(-r.statistic, rel=1e-9)
    assert swapped.direction == -r.direction
    assert swapped.p_value == pytest.approx(r.p_value, rel=1e-9, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.lists(samples, min_size=2, max_size=4), st.randoms(use_true_random=False))
def test_anova_permutation_invariance(groups, rnd):
    try:
        r = anova_oneway(groups)
    except DegenerateVariance:
        return
    shuffled = list(groups)
    rnd.shuffle(shuffled)
    s = anova_oneway(shuffled)
    if math.isinf(r.statistic):
        assert math.isinf(s.statistic)
        return
    assert s.statistic == pytest.approx(r.statistic, rel=1e-7, abs=1e-9)
    assert 0.0 <= s.effect_size <= 1.0


def test_paired_f_matches_squared_paired_t():
    a = [3.0, 4.0, 6.0, 8.0, 8.5]
    b = [2.0, 4.5, 4.0, 5.0, 7.0]
    d = [x - y for x, y in zip(a, b)]
    t = oracles.mean(d) / math.sqrt(oracles.var(d) / len(d))
    r = paired_f(a, b)
    assert r.statistic == pytest.approx(t * t, rel=1e-12)
    assert r.df == (1.0, 4.0)
    assert r.effect_size == pytest.approx(t * t / (t * t + 4), rel=1e-12)
