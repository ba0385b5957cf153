"""Gaussian linear discriminant analysis with a pooled covariance."""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg

from .base import ClassifierModel, require_classes, training_arrays

RIDGE = 1e-8


def fit_lda(data, y=None) -> ClassifierModel:
    """Closed-form fit with empirical priors.

    The pooled covariance divides by the row count (maximum likelihood), so
    duplicating every row leaves the model unchanged. A ridge of
    ``RIDGE * trace / p`` keeps it positive definite.
    """
    X, y = training_arrays(data, y)
    classes = require_classes(y)
    counts = np.array([np.sum(y == c) for c in classes])
    small = classes[counts < 2]
    if small.size:
        warnings.warn(f"classes {small.tolist()} have fewer than 2 rows and are excluded")
        keep = np.isin(y, classes[counts >= 2])
        X, y = X[keep], y[keep]
        classes = require_classes(y)
        counts = np.array([np.sum(y == c) for c in classes])
    n, p = X.shape
    means = np.array([X[y == c].mean(axis=0) for c in classes])
    resid = X - means[np.searchsorted(classes, y)]
    cov = resid.T @ resid / n
    ridge = RIDGE * (np.trace(cov) / p if np.trace(cov) > 0 else 1.0)
    cov[np.diag_indices(p)] += ridge
    chol = scipy.linalg.cholesky(cov, lower=True)
    coef = scipy.linalg.cho_solve((chol, True), means.T).T
    priors = counts / n
    const = -0.5 * np.sum(coef * means, axis=1) + np.log(priors)
    return ClassifierModel(
        kind="lda",
        classes=tuple(int(c) for c in classes),
        n_features=p,
        params={"means": means, "cholesky": chol, "priors": priors,
                "coef": coef, "const": const},
        hyper={"ridge": float(ridge)},
    )


def scores(model: ClassifierModel, X: np.ndarray) -> np.ndarray:
    """Linear discriminants ``x' S^-1 mu_k - mu_k' S^-1 mu_k / 2 + log prior_k``."""
    return X @ model.params["coef"].T + model.params["const"]
