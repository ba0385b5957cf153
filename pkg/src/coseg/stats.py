"""Segment regressions and the classical two-sample tests used by Steps 2-4."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .model import SegmentFit
from .special import chi2_sf, f_sf, normal_two_sided_p

# Pivoted-QR rank tolerance on unit-norm columns (same default as R's lm).
RANK_TOL = 1e-7


class InsufficientDataError(ValueError):
    """Too few rows for the requested fit or test."""


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df1: int
    df2: int
    p_value: float
    warning_flags: frozenset = field(default_factory=frozenset)

    __test__ = False  # keep pytest from collecting this class


def _result(stat, df1, df2, p, flags=()):
    p = float(min(1.0, max(0.0, p)))
    return TestResult(float(stat), int(df1), int(df2), p, frozenset(flags))


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return X[:, None] if X.ndim == 1 else X


def fit_ols(X, y, intercept: bool = True, segment_index: int = 0) -> SegmentFit:
    """Least squares by column-pivoted QR, dropping collinear columns.

    Columns are centered (with an intercept) and scaled to unit norm before
    the rank decision, so which columns survive does not depend on units.
    Constant columns are always dropped when an intercept is present.
    """
    X = _as_matrix(X)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if y.shape != (n,):
        raise ValueError(f"y has shape {y.shape}, expected ({n},)")
    if n < 2:
        raise InsufficientDataError("need at least 2 rows")

    if intercept:
        x_mean = X.mean(axis=0)
        y_mean = y.mean()
        Xc = X - x_mean
        yc = y - y_mean
    else:
        x_mean = np.zeros(p)
        y_mean = 0.0
        Xc, yc = X, y

    raw_norm = np.linalg.norm(X, axis=0)
    norms = np.linalg.norm(Xc, axis=0)
    candidates = np.flatnonzero(norms > RANK_TOL * np.maximum(raw_norm, 1e-300))
    retained: list[int] = []
    if candidates.size:
        Z = Xc[:, candidates] / norms[candidates]
        _, R, piv = scipy.linalg.qr(Z, mode="economic", pivoting=True)
        diag = np.abs(np.diag(R))
        rank = int(np.sum(diag > RANK_TOL * diag[0])) if diag.size else 0
        retained = sorted(int(candidates[j]) for j in piv[:rank])
    q = len(retained)
    df_residual = n - q - (1 if intercept else 0)
    if df_residual < 1:
        raise InsufficientDataError(
            f"n={n} rows leave no residual degrees of freedom for {q} columns"
        )

    coef = np.zeros(p)
    if q:
        beta, *_ = np.linalg.lstsq(Xc[:, retained], yc, rcond=None)
        coef[retained] = beta
    resid = yc - Xc @ coef
    return SegmentFit(
        segment_index=segment_index,
        coefficients=coef,
        intercept=float(y_mean - x_mean @ coef) if intercept else 0.0,
        rss=float(resid @ resid),
        tss=float(yc @ yc),
        n=n,
        df_model=q,
        df_residual=df_residual,
        dropped_columns=tuple(j for j in range(p) if j not in set(retained)),
        has_intercept=intercept,
    )


def predict_ols(fit: SegmentFit, X) -> np.ndarray:
    return fit.intercept + _as_matrix(X) @ fit.coefficients


def f_nullity_test(fit: SegmentFit, y=None) -> TestResult:
    """ANOVA F-test that every retained slope is zero."""
    q, df2 = fit.df_model, fit.df_residual
    constant = np.ptp(np.asarray(y)) == 0 if y is not None else fit.tss <= 0.0
    if constant:
        return _result(np.nan, q, df2, 1.0, {"constant_response"})
    flags = {"rank_deficient"} if fit.dropped_columns else set()
    if q == 0:
        return _result(np.nan, 0, df2, 1.0, flags | {"no_regressors"})
    ess = max(fit.tss - fit.rss, 0.0)
    if fit.rss <= 0.0:
        return _result(np.inf, q, df2, 0.0, flags)
    F = (ess / q) / (fit.rss / df2)
    return _result(F, q, df2, f_sf(F, q, df2), flags)


def chow_test(seg1, seg2) -> TestResult:
    """Chow F-test of equal coefficients (intercept included) across two segments.

    ``seg1`` and ``seg2`` are ``(X, y)`` pairs. Only columns that survive the
    rank check in both segments enter the comparison.
    """
    (X1, y1), (X2, y2) = seg1, seg2
    X1, X2 = _as_matrix(X1), _as_matrix(X2)
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    f1 = fit_ols(X1, y1)
    f2 = fit_ols(X2, y2)
    common = sorted(set(f1.retained_columns) & set(f2.retained_columns))
    flags = set()
    if len(common) < X1.shape[1]:
        flags.add("rank_deficient")
    f1 = fit_ols(X1[:, common], y1)
    f2 = fit_ols(X2[:, common], y2)
    pooled = fit_ols(np.vstack([X1[:, common], X2[:, common]]), np.concatenate([y1, y2]))
    if pooled.dropped_columns:
        flags.add("pooled_rank_deficient")
    k = len(common) + 1
    n1, n2 = len(y1), len(y2)
    df2 = n1 + n2 - 2 * k
    if df2 < 1:
        raise InsufficientDataError("Chow test has no residual degrees of freedom")
    within = f1.rss + f2.rss
    gain = max(pooled.rss - within, 0.0)
    if within <= 0.0:
        if gain <= 0.0:
            return _result(0.0, k, df2, 1.0, flags | {"exact_fit"})
        return _result(np.inf, k, df2, 0.0, flags | {"exact_fit"})
    F = (gain / k) / (within / df2)
    return _result(F, k, df2, f_sf(F, k, df2), flags)


def two_proportion_z_test(y1, y2) -> TestResult:
    """Pooled two-sample Z-test on the share of the higher of two levels."""
    y1 = np.asarray(y1)
    y2 = np.asarray(y2)
    if y1.size == 0 or y2.size == 0:
        raise InsufficientDataError("empty segment")
    levels = np.union1d(y1, y2)
    if levels.size < 2:
        return _result(0.0, 0, 0, 1.0, {"single_level"})
    if levels.size > 2:
        raise ValueError(f"Z-test needs exactly two levels, got {levels.tolist()}")
    hi = levels[-1]
    n1, n2 = y1.size, y2.size
    c1, c2 = np.sum(y1 == hi), np.sum(y2 == hi)
    pooled = (c1 + c2) / (n1 + n2)
    se = np.sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2))
    z = (c1 / n1 - c2 / n2) / se
    return _result(z, 0, 0, normal_two_sided_p(z))


def pearson_chisq_test(y1, y2) -> TestResult:
    """Pearson chi-squared on the 2 x L table over the observed levels."""
    y1 = np.asarray(y1)
    y2 = np.asarray(y2)
    if y1.size == 0 or y2.size == 0:
        raise InsufficientDataError("empty segment")
    levels = np.union1d(y1, y2)
    if levels.size < 2:
        return _result(0.0, 0, 0, 1.0, {"single_level"})
    table = np.array([[np.sum(y == v) for v in levels] for y in (y1, y2)], dtype=float)
    expected = table.sum(1, keepdims=True) * table.sum(0, keepdims=True) / table.sum()
    stat = float(((table - expected) ** 2 / expected).sum())
    df = levels.size - 1
    flags = {"low_expected_count"} if (expected < 5).any() else set()
    return _result(stat, df, 0, chi2_sf(stat, df), flags)


def response_test(y1, y2) -> TestResult:
    """Z-test when exactly two levels are observed in the pair, else chi-squared."""
    if np.union1d(y1, y2).size == 2:
        return two_proportion_z_test(y1, y2)
    return pearson_chisq_test(y1, y2)
