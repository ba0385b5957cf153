import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from coseg.special import f_sf
from coseg.stats import (
    InsufficientDataError,
    chow_test,
    f_nullity_test,
    fit_ols,
    pearson_chisq_test,
    predict_ols,
    response_test,
    two_proportion_z_test,
)
from oracles import exact_ols


def test_fit_exact_line():
    fit = fit_ols(np.array([1.0, 2, 3, 4]), np.array([2.0, 4, 6, 8]))
    assert fit.coefficients[0] == pytest.approx(2.0, abs=1e-12)
    assert fit.intercept == pytest.approx(0.0, abs=1e-12)
    assert fit.rss == pytest.approx(0.0, abs=1e-20)


def test_fit_recovers_generating_beta(rng):
    X = rng.standard_normal((30, 4))
    beta = np.array([1.5, -2.0, 0.25, 3.0])
    fit = fit_ols(X, 0.7 + X @ beta)
    assert np.allclose(fit.coefficients, beta, atol=1e-8)
    assert fit.intercept == pytest.approx(0.7, abs=1e-8)


def test_fit_matches_exact_normal_equations(rng):
    X = rng.standard_normal((40, 5)) * [1, 10, 0.1, 3, 100]
    y = rng.standard_normal(40) + X @ [0.3, -0.02, 4, 0, 0.001]
    fit = fit_ols(X, y)
    beta, rss = exact_ols(X, y)
    assert fit.intercept == pytest.approx(beta[0], abs=1e-8)
    assert np.allclose(fit.coefficients, beta[1:], atol=1e-8)
    assert fit.rss == pytest.approx(rss, rel=1e-9)


def test_fit_drops_collinear_and_constant_columns(rng):
    X = rng.standard_normal((25, 3))
    X = np.column_stack([X, 2 * X[:, 0] - X[:, 1], np.full(25, 4.0)])
    fit = fit_ols(X, rng.standard_normal(25))
    assert 4 in fit.dropped_columns
    assert len(fit.dropped_columns) == 2
    assert fit.df_model == 3
    assert fit.df_residual == 25 - 4


def test_fit_needs_residual_df():
    with pytest.raises(InsufficientDataError):
        fit_ols(np.eye(3), np.ones(3))


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (20, 3), elements=st.floats(-10, 10)),
       arrays(np.float64, 20, elements=st.floats(-10, 10)))
def test_residuals_orthogonal(X, y):
    fit = fit_ols(X, y)
    resid = y - predict_ols(fit, X)
    scale = max(1.0, np.abs(y).max()) * max(1.0, np.abs(X).max()) * 20
    assert abs(resid.sum()) <= 1e-8 * scale
    for j in fit.retained_columns:
        assert abs(resid @ X[:, j]) <= 1e-8 * scale


def test_nullity_hand_fixture():
    # residual (1,-1,0,0,1,-1) is orthogonal to 1 and x, so ESS=16, RSS=4, F=16
    x = np.array([-2.0, -2, 0, 0, 2, 2])
    y = x + np.array([1.0, -1, 0, 0, 1, -1])
    res = f_nullity_test(fit_ols(x, y), y)
    assert res.statistic == pytest.approx(16.0, abs=1e-8)
    assert (res.df1, res.df2) == (1, 4)
    assert res.p_value == pytest.approx(0.016130089900092535, abs=1e-10)


def test_nullity_perfect_fit():
    x = np.arange(10.0)
    res = f_nullity_test(fit_ols(x, 3 * x + 1), 3 * x + 1)
    assert res.p_value < 1e-12


def test_nullity_constant_response():
    x = np.arange(10.0)
    res = f_nullity_test(fit_ols(x, np.ones(10)), np.ones(10))
    assert res.p_value == 1.0
    assert "constant_response" in res.warning_flags


def test_chow_identical_segments(rng):
    X = rng.standard_normal((30, 2))
    y = X @ [1.0, -1.0] + rng.standard_normal(30)
    res = chow_test((X, y), (X.copy(), y.copy()))
    assert res.statistic == pytest.approx(0.0, abs=1e-8)
    assert res.p_value == pytest.approx(1.0, abs=1e-8)


def test_chow_hand_fixture():
    x1 = np.array([0.0, 1, 2, 3, 4])
    y1 = np.array([0.0, 1, 1, 3, 4])
    x2 = np.array([0.0, 1, 2, 3, 4])
    y2 = np.array([4.0, 2, 2, 1, 0])
    _, rss1 = exact_ols(x1[:, None], y1)
    _, rss2 = exact_ols(x2[:, None], y2)
    _, rss_p = exact_ols(np.r_[x1, x2][:, None], np.r_[y1, y2])
    expected = ((rss_p - rss1 - rss2) / 2) / ((rss1 + rss2) / 6)
    res = chow_test((x1, y1), (x2, y2))
    assert res.statistic == pytest.approx(expected, abs=1e-8)
    assert (res.df1, res.df2) == (2, 6)
    assert res.p_value == pytest.approx(f_sf(expected, 2, 6), abs=1e-12)


def test_chow_detects_sign_flip(rng):
    x1, x2 = rng.standard_normal(30), rng.standard_normal(30)
    res = chow_test((x1, 2 * x1 + 0.01 * rng.standard_normal(30)),
                    (x2, -2 * x2 + 0.01 * rng.standard_normal(30)))
    assert res.p_value < 1e-6


def test_z_test_equal_proportions():
    y1 = np.array([1] * 10 + [2] * 10)
    y2 = np.array([1] * 15 + [2] * 15)
    res = two_proportion_z_test(y1, y2)
    assert res.statistic == 0.0 and res.p_value == 1.0


def test_z_test_hand_fixture():
    y1 = np.array([2] * 19 + [1])
    y2 = np.array([2] + [1] * 19)
    res = two_proportion_z_test(y1, y2)
    # pooled share 0.5, se = sqrt(0.25 * (1/20 + 1/20))
    assert res.statistic == pytest.approx(0.9 / math.sqrt(0.025), abs=1e-8)
    assert res.p_value < 1e-6


def test_z_test_identity_and_degenerate():
    y = np.array([1, 2, 2, 1, 2])
    assert two_proportion_z_test(y, y).statistic == 0.0
    res = two_proportion_z_test(np.ones(5, int), np.ones(4, int))
    assert res.p_value == 1.0 and "single_level" in res.warning_flags


def test_chisq_permuted_counts(rng):
    y1 = rng.integers(1, 6, 50)
    res = pearson_chisq_test(y1, rng.permutation(y1))
    assert res.statistic == pytest.approx(0.0, abs=1e-12)
    assert res.p_value == pytest.approx(1.0)


def test_chisq_hand_fixture():
    y1 = np.array([1] * 10 + [2] * 5 + [3] * 5)
    y2 = np.array([1] * 5 + [2] * 10 + [3] * 5)
    res = pearson_chisq_test(y1, y2)
    # expected counts 7.5, 7.5, 5 per row; statistic 4 * 2.5^2 / 7.5
    assert res.statistic == pytest.approx(10 / 3, abs=1e-8)
    assert res.df1 == 2
    assert res.p_value == pytest.approx(math.exp(-5 / 3), abs=1e-10)


def test_chisq_disjoint_supports():
    res = pearson_chisq_test(np.array([1] * 10 + [2] * 10), np.array([5] * 10 + [4] * 10))
    assert res.p_value < 1e-6


def test_chisq_low_expected_flag():
    y1 = np.array([1] * 8 + [2] * 8 + [3] * 4)
    y2 = np.array([1] * 8 + [2] * 8 + [3] * 4)
    # expected count for level 3 is 8 * 20 / 40 = 4 < 5
    assert "low_expected_count" in pearson_chisq_test(y1, y2).warning_flags


def test_response_test_dispatch():
    assert response_test([1, 2, 1], [2, 2, 1]).df1 == 0  # Z-test
    assert response_test([1, 2, 3], [2, 2, 1]).df1 == 2  # chi-squared


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 5), min_size=5, max_size=30),
       st.lists(st.integers(1, 5), min_size=5, max_size=30))
def test_swap_invariance(a, b):
    a, b = np.array(a), np.array(b)
    r1, r2 = response_test(a, b), response_test(b, a)
    assert 0.0 <= r1.p_value <= 1.0
    assert r1.p_value == pytest.approx(r2.p_value, abs=1e-12)
    assert abs(r1.statistic) == pytest.approx(abs(r2.statistic), abs=1e-12)


def test_chow_swap_invariance(rng):
    s1 = (rng.standard_normal((25, 2)), rng.standard_normal(25))
    s2 = (rng.standard_normal((30, 2)), rng.standard_normal(30))
    assert chow_test(s1, s2).statistic == pytest.approx(chow_test(s2, s1).statistic, rel=1e-12)


def test_affine_rescaling_invariance(rng):
    X = rng.standard_normal((40, 3))
    y = X @ [1.0, 0.5, 0.0] + rng.standard_normal(40)
    Xs = X * [1000.0, 0.001, 7.0] + [5.0, -3.0, 1e4]
    f1 = f_nullity_test(fit_ols(X, y), y)
    f2 = f_nullity_test(fit_ols(Xs, y), y)
    assert f1.statistic == pytest.approx(f2.statistic, abs=1e-8)
    half = slice(0, 20), slice(20, 40)
    c1 = chow_test(*[(X[h], y[h]) for h in half])
    c2 = chow_test(*[(Xs[h], y[h]) for h in half])
    assert c1.statistic == pytest.approx(c2.statistic, abs=1e-8)
