import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from streambandit.analysis import (
    BoundReport,
    InsufficientDataError,
    aggregate_trials,
    bar_sample_lower_bound,
    best_head_length,
    fit_loglog_slope,
    head_length_weight,
    hoeffding_beat_bound,
    kl_bernoulli,
    lower_bound_f,
    regret_lower_shape,
    regret_upper_shape,
    reports_to_json,
)
from streambandit.policies import LARGE, SMALL

unit = st.floats(0.0, 1.0)


def test_kl_examples():
    assert kl_bernoulli(0.3, 0.3) == 0.0
    assert kl_bernoulli(0.5, 0.75) == pytest.approx(0.14384103622589046, rel=1e-13)
    assert kl_bernoulli(0.5, 0.625) == pytest.approx(0.032269260568785586, rel=1e-13)
    assert kl_bernoulli(0.0, 0.5) == pytest.approx(math.log(2))
    assert kl_bernoulli(1.0, 0.5) == pytest.approx(math.log(2))


def test_kl_boundary_signals_infinity():
    assert kl_bernoulli(0.5, 0.0) == math.inf
    assert kl_bernoulli(0.5, 1.0) == math.inf
    assert kl_bernoulli(1.0, 1.0) == 0.0
    with pytest.raises(ValueError):
        kl_bernoulli(1.5, 0.5)


@given(unit, st.floats(1e-9, 1 - 1e-9))
def test_kl_nonnegative(x, y):
    v = kl_bernoulli(x, y)
    assert v >= 0
    if x == y:
        assert v == 0


def test_hoeffding_examples():
    assert hoeffding_beat_bound(0.2, 100) == pytest.approx(0.1353352832366127, rel=1e-14)
    assert hoeffding_beat_bound(0.1, 200) == pytest.approx(0.36787944117144233, rel=1e-14)
    assert hoeffding_beat_bound(0.37, 0) == 1.0


def test_bar_bound_examples():
    a = bar_sample_lower_bound(16, 8, 0.005, 0.25, 0.5)
    assert a.value == pytest.approx(3516.257360136097, rel=1e-12) and not a.degenerate
    b = bar_sample_lower_bound(16, 8, 0.01, 0.1, 0.5)
    assert b.value == pytest.approx(2050.787725903439, rel=1e-12)


def test_bar_bound_degenerate_boundary():
    # k - m - delta = (k - 1) delta  <=>  delta = (k - m) / k
    k, m = 16, 8
    d = (k - m) / k
    out = bar_sample_lower_bound(k, m, 0.01, d, 0.5)
    assert out.value == 0.0 and out.degenerate
    with pytest.raises(ValueError):
        bar_sample_lower_bound(8, 8, 0.01, 0.1, 0.5)


def test_upper_shape_examples():
    gaps = (0.0, 0.05, 0.05, 0.2)
    assert regret_upper_shape(1, 4, 3, 10**4, gaps) == pytest.approx(482.4921852903976, rel=1e-12)
    assert regret_upper_shape(1, 7, 4, 10**4, gaps) == pytest.approx(1929.9687411615903, rel=1e-12)
    assert regret_upper_shape(1, 4, 3, 10**4, gaps, regime=LARGE) == regret_upper_shape(1, 4, 3, 10**4, gaps)
    with pytest.raises(ValueError):
        regret_upper_shape(1, 4, 4, 10**4, gaps)


def test_upper_shape_alpha_one_sums_reciprocals():
    gaps = (0.0, 0.1, 0.3, 0.25)
    v = regret_upper_shape(1, 12, 4, 1000, gaps, regime=SMALL)
    ref = (2 / math.e) ** 0.5 * (1000 / 4) ** 0.5 * sum(1 / g for g in gaps[1:])
    assert v == pytest.approx(ref, rel=1e-13)


def test_lower_shape_examples():
    gaps = (0.0, 0.05, 0.05, 0.2)
    assert regret_lower_shape(1, 15, 10, 10**4, gaps) == pytest.approx(29.047375096555627, rel=1e-12)
    assert regret_lower_shape(1, 15, 16, 10**4, gaps) == 0.0
    assert lower_bound_f(1, 15, 10) == pytest.approx(2 / 256 * 6 / 15**0.5)


@pytest.mark.parametrize("alpha", [1.0, 2.0, 3.5])
@pytest.mark.parametrize("m", [3, 8, 20])
def test_best_head_length_brute_force(alpha, m):
    n = 10 * m
    k = best_head_length(alpha, n, m)
    weights = [head_length_weight(alpha, j, m) for j in range(m, n)]
    assert head_length_weight(alpha, k, m) == max(weights)
    # stationary point of (k-m+1)/k^(1+1/(alpha+1)) is (alpha+2)(m-1)
    assert abs(k - (alpha + 2) * (m - 1)) <= 1


def test_best_head_length_caps_at_n():
    assert best_head_length(1.0, 12, 8) == 11


@given(
    st.floats(1, 4),
    st.integers(4, 60),
    st.data(),
    st.lists(st.floats(0.01, 1.0), min_size=1, max_size=10),
)
def test_lower_below_upper_times_constant(alpha, n, data, pos):
    m = data.draw(st.integers(2, n - 1))
    T = data.draw(st.integers(1, 10**8))
    gaps = [0.0] + pos
    factor = (2 * alpha / math.e) ** (alpha / (alpha + 1))
    up = regret_upper_shape(alpha, n, m, T, gaps)
    low = regret_lower_shape(alpha, n, m, T, gaps)
    C = 2 * 16.0**-alpha / factor
    assert low <= C * up * (1 + 1e-12)


def test_fit_examples():
    xs = [1, 4, 9, 25]
    f = fit_loglog_slope([(x, 3 * x**0.5) for x in xs])
    assert f.slope == pytest.approx(0.5, abs=1e-12)
    assert f.residual_se == pytest.approx(0.0, abs=1e-12)
    assert fit_loglog_slope([(1, 2), (5, 2), (7, 2)]).slope == pytest.approx(0.0, abs=1e-12)
    assert fit_loglog_slope([(1, 1), (100, 10)]).slope == pytest.approx(0.5, abs=1e-12)


def test_fit_errors():
    with pytest.raises(InsufficientDataError):
        fit_loglog_slope([(1, 1)])
    with pytest.raises(ValueError):
        fit_loglog_slope([(1, 1), (2, 0)])
    with pytest.raises(ValueError):
        fit_loglog_slope([(2, 1), (2, 3)])


@given(st.floats(-3, 3), st.floats(0.1, 10), st.lists(st.floats(0.1, 1e4), min_size=2, max_size=8, unique=True))
def test_fit_recovers_power_law(slope, c, xs):
    assume(max(xs) / min(xs) > 1.5)
    f = fit_loglog_slope([(x, c * x**slope) for x in xs])
    assert f.slope == pytest.approx(slope, abs=1e-8)


def test_aggregate_examples():
    assert aggregate_trials([3.0] * 5) == (3.0, 0.0)
    assert aggregate_trials([0.0, 2.0])[0] == 1.0
    with pytest.raises(InsufficientDataError):
        aggregate_trials([1.0])
    x = np.random.default_rng(7).standard_normal(400)
    mean, hw = aggregate_trials(x)
    assert hw == pytest.approx(1.96 * x.std(ddof=1) / 20)
    assert abs(hw - 0.098) < 0.015


def test_report_json():
    r = BoundReport("x", 1.0, 1.5, 0.6)
    assert r.passed
    assert not BoundReport("y", 10.0, 5.0, 1.0, sense="ge").passed
    rec = json.loads(reports_to_json([r]))[0]
    assert set(rec) >= {"bound", "empirical", "slack", "pass"}
