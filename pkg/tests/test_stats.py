import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from oracles import pearson_textbook
from outage_access import stats

mpmath = pytest.importorskip("mpmath")

series = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=3, max_size=30)


# ---------------------------------------------------------------- pearson r


def test_perfect_correlations():
    x = [1.0, 2.0, 4.0, 8.0]
    assert stats.pearson_r(x, x) == 1.0
    assert stats.pearson_r(x, [-v for v in x]) == -1.0


def test_three_point_example_matches_textbook_formula():
    assert stats.pearson_r([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5, abs=1e-15)
    assert pearson_textbook([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5, abs=1e-15)


@given(series, st.data())
def test_pearson_agrees_with_textbook(x, data):
    y = data.draw(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=len(x), max_size=len(x)))
    assume(np.ptp(x) > 1e-3 and np.ptp(y) > 1e-3)
    assert stats.pearson_r(x, y) == pytest.approx(pearson_textbook(x, y), abs=1e-9)


@given(series, st.floats(0.1, 100), st.floats(-100, 100))
def test_pearson_affine_invariance_and_sign_flip(x, scale, shift):
    assume(np.ptp(x) > 1e-2)
    y = np.sin(np.arange(len(x)) * 1.7) + np.asarray(x) * 0.01
    assume(np.ptp(y) > 1e-6)
    r = stats.pearson_r(x, y)
    assert stats.pearson_r(np.asarray(x) * scale + shift, y) == pytest.approx(r, abs=1e-12)
    assert stats.pearson_r(x, -y) == pytest.approx(-r, abs=1e-12)


def test_constant_and_short_inputs_are_undefined():
    with pytest.raises(stats.UndefinedCorrelationError):
        stats.pearson_r([1, 1, 1], [1, 2, 3])
    with pytest.raises(stats.UndefinedCorrelationError):
        stats.pearson_r([1, 2], [2, 1])


# ---------------------------------------------------------------- lagged correlation


def _impulse_signal(n=20, seed=0):
    rng = np.random.default_rng(seed)
    return rng.normal(size=n).cumsum()


def test_delayed_copy_is_recovered_exactly():
    x = _impulse_signal()
    y = np.concatenate([[0, 0], x[:-2]])
    tab = stats.lagged_correlation(x, y, max_lag=4)
    assert tab.tau_star == 2
    assert tab.r_at(2) == pytest.approx(1.0, abs=1e-12)
    tab = stats.lagged_correlation(x, -y, max_lag=4)
    assert tab.tau_star == 2 and tab.r_at(2) == pytest.approx(-1.0, abs=1e-12)


def test_self_correlation_peaks_at_zero():
    x = _impulse_signal()
    tab = stats.lagged_correlation(x, x, max_lag=5)
    assert tab.r_at(0) == 1.0 and tab.tau_star == 0


@pytest.mark.parametrize("sigma", [0.0, 0.01, 0.05])
@pytest.mark.parametrize("shift", [0, 1, 3])
def test_planted_shift_survives_small_noise(shift, sigma):
    rng = np.random.default_rng(10 + shift)
    x = rng.normal(size=40)
    y = np.concatenate([rng.normal(size=shift), x[: len(x) - shift]]) + sigma * rng.normal(size=40)
    assert stats.lagged_correlation(x, y, max_lag=5).tau_star == shift


def test_pairs_are_truncated_not_padded():
    x = np.arange(10.0)
    tab = stats.lagged_correlation(x, x ** 2, max_lag=3)
    assert [row.n for row in tab.rows] == [10, 9, 8, 7]
    assert tab.r_at(3) == pytest.approx(stats.pearson_r(x[:7], (x ** 2)[3:]))


def test_too_short_window_names_the_lag():
    with pytest.raises(stats.UndefinedCorrelationError, match="lag 3"):
        stats.lagged_correlation(np.arange(5.0), np.arange(5.0) ** 2, max_lag=3)


def test_degenerate_rows_can_be_recorded_as_nan():
    x = np.arange(8.0)
    y = np.array([1, 2, 3, 4, 5, 5, 5, 5.0])  # constant once shifted by 4
    tab = stats.lagged_correlation(x, y, max_lag=4, on_degenerate="nan")
    assert not math.isnan(tab.r_at(0))
    assert math.isnan(tab.r_at(4)) and not tab.rows[4].significant
    assert tab.tau_star < 4
    with pytest.raises(stats.UndefinedCorrelationError):
        stats.lagged_correlation(x, y, max_lag=4)


# ---------------------------------------------------------------- p-values


def test_pvalue_limits():
    assert stats.pearson_p_value(0.0, 10) == 1.0
    assert stats.pearson_p_value(1.0, 10) == 0.0
    assert stats.pearson_p_value(-1.0, 3) == 0.0
    with pytest.raises(stats.UndefinedCorrelationError):
        stats.pearson_p_value(0.3, 2)


def test_pvalue_matches_high_precision_reference():
    mpmath.mp.dps = 40
    for r, n in [(0.5, 30), (0.1, 15), (-0.7, 12), (0.05, 200), (0.95, 5)]:
        df = n - 2
        t = abs(r) * math.sqrt(df / (1 - r * r))
        ref = float(mpmath.betainc(df / 2, 0.5, 0, df / (df + t * t), regularized=True))
        assert stats.pearson_p_value(r, n) == pytest.approx(ref, rel=1e-10, abs=1e-15)


@settings(max_examples=200)
@given(st.floats(0.01, 0.98), st.floats(0.01, 0.98), st.integers(3, 200))
def test_pvalue_monotone_in_r(a, b, n):
    assume(abs(a - b) > 1e-6)
    lo, hi = sorted((a, b))
    assert stats.pearson_p_value(hi, n) <= stats.pearson_p_value(lo, n)


@given(st.floats(0.01, 0.98), st.integers(3, 199))
def test_pvalue_monotone_in_n(r, n):
    assert stats.pearson_p_value(r, n + 1) <= stats.pearson_p_value(r, n)


def test_n30_r_half_agrees_with_permutation_test():
    rng = np.random.default_rng(1)
    x = rng.normal(size=30)
    z = rng.normal(size=30)
    # make corr(x, y) exactly 0.5 by mixing x with the part of z orthogonal to it
    xc = (x - x.mean()) / np.linalg.norm(x - x.mean())
    zc = z - z.mean()
    zc -= (zc @ xc) * xc
    zc /= np.linalg.norm(zc)
    y = 0.5 * xc + math.sqrt(0.75) * zc
    assert stats.pearson_r(x, y) == pytest.approx(0.5, abs=1e-12)
    analytic = stats.pearson_p_value(0.5, 30)
    assert abs(analytic - stats.permutation_pvalue_pearson(x, y, n_perm=100_000, seed=2)) <= 0.01


# ---------------------------------------------------------------- ANOVA


def test_identical_groups_give_zero_f():
    res = stats.one_way_anova([[1, 2, 3], [1, 2, 3]])
    assert res.f_stat == 0.0 and res.p_value == 1.0


def test_separated_groups_have_tiny_p_and_extreme_f():
    groups = [[1, 2, 3], [101, 102, 103]]
    res = stats.one_way_anova(groups)
    assert res.p_value < 1e-6
    # exhaustive relabelling: no split of the six values beats the observed F
    values = [1, 2, 3, 101, 102, 103]
    fs = []
    for idx in itertools.combinations(range(6), 3):
        a = [values[i] for i in idx]
        b = [values[i] for i in range(6) if i not in idx]
        fs.append(stats.one_way_anova([a, b]).f_stat)
    assert res.f_stat == pytest.approx(max(fs))
    assert sum(f >= res.f_stat * (1 - 1e-12) for f in fs) == 2


def test_anova_matches_high_precision_reference():
    mpmath.mp.dps = 40
    rng = np.random.default_rng(4)
    groups = [rng.normal(i * 0.3, 1, size=8 + i) for i in range(3)]
    res = stats.one_way_anova(groups)
    d1, d2 = res.df_between, res.df_within
    ref = float(mpmath.betainc(d2 / 2, d1 / 2, 0, d2 / (d2 + d1 * res.f_stat), regularized=True))
    assert res.p_value == pytest.approx(ref, rel=1e-10)


def test_null_pvalues_are_uniform():
    rng = np.random.default_rng(11)
    ps = np.sort([stats.one_way_anova([rng.normal(size=10) for _ in range(3)]).p_value for _ in range(600)])
    n = ps.size
    ks = max(np.max(np.arange(1, n + 1) / n - ps), np.max(ps - np.arange(n) / n))
    assert ks < 1.63 / math.sqrt(n)  # 1% critical value


def test_anova_needs_two_groups_of_two():
    with pytest.raises(ValueError):
        stats.one_way_anova([[1, 2, 3]])
    with pytest.raises(ValueError):
        stats.one_way_anova([[1], [2, 3]])


# ---------------------------------------------------------------- incomplete beta


def test_incomplete_beta_closed_forms():
    assert stats.regularized_incomplete_beta(0.0, 2, 3) == 0.0
    assert stats.regularized_incomplete_beta(1.0, 2, 3) == 1.0
    assert stats.regularized_incomplete_beta(0.5, 1, 1) == pytest.approx(0.5, abs=1e-15)
    assert stats.regularized_incomplete_beta(0.25, 2, 2) == pytest.approx(0.15625, abs=1e-14)


@settings(max_examples=300)
@given(st.floats(0, 1), st.floats(0.05, 300), st.floats(0.05, 300))
def test_incomplete_beta_reflection(x, a, b):
    x = 1.0 - (1.0 - x)  # so that x and 1 - x are exact complements in floating point
    lhs = stats.regularized_incomplete_beta(x, a, b)
    assert 0.0 <= lhs <= 1.0
    assert lhs == pytest.approx(1.0 - stats.regularized_incomplete_beta(1.0 - x, b, a), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.001, 0.999), st.floats(0.1, 80), st.floats(0.1, 80))
def test_incomplete_beta_matches_high_precision_reference(x, a, b):
    mpmath.mp.dps = 30
    ref = float(mpmath.betainc(a, b, 0, x, regularized=True))
    assert stats.regularized_incomplete_beta(x, a, b) == pytest.approx(ref, abs=1e-11)


def test_incomplete_beta_domain_errors():
    with pytest.raises(ValueError):
        stats.regularized_incomplete_beta(1.5, 1, 1)
    with pytest.raises(ValueError):
        stats.regularized_incomplete_beta(0.5, 0, 1)
