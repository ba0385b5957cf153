"""Multinomial logistic regression by full-batch gradient descent.

The first class is the reference (its logit is fixed at 0), so the weight
matrix is ``(K - 1) x (p + 1)`` with the intercept in column 0. Features are
standardized with training statistics, and an L2 penalty on the slopes keeps
the weights finite on separable data.
"""

from __future__ import annotations

import numpy as np

from .base import ClassifierModel, require_classes, training_arrays

ARMIJO_C = 1e-4


def _design(X, mu, sd):
    Xs = (X - mu) / sd
    return np.hstack([np.ones((len(X), 1)), Xs])


def _logits(W, A):
    return np.hstack([np.zeros((len(A), 1)), A @ W.T])


def _softmax(Z):
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def loss_and_grad(W: np.ndarray, A: np.ndarray, y_idx: np.ndarray, l2: float
                  ) -> tuple[float, np.ndarray]:
    """Mean cross-entropy plus ``l2 / 2 * ||slopes||^2`` and its gradient.

    ``A`` is the design matrix with a leading column of ones and ``y_idx``
    holds class positions ``0..K-1``.
    """
    n = len(A)
    Z = _logits(W, A)
    zmax = Z.max(axis=1, keepdims=True)
    log_norm = zmax[:, 0] + np.log(np.exp(Z - zmax).sum(axis=1))
    loss = float(np.mean(log_norm - Z[np.arange(n), y_idx]))
    loss += 0.5 * l2 * float(np.sum(W[:, 1:] ** 2))
    P = _softmax(Z)
    P[np.arange(n), y_idx] -= 1.0
    grad = P[:, 1:].T @ A / n
    grad[:, 1:] += l2 * W[:, 1:]
    return loss, grad


def fit_logistic(data, y=None, *, l2: float = 1e-4, max_iter: int = 1000,
                 tol: float = 1e-6) -> ClassifierModel:
    """Gradient descent with Armijo backtracking until ``||grad|| <= tol``."""
    if l2 < 0:
        raise ValueError("l2 must be non-negative")
    X, y = training_arrays(data, y)
    classes = require_classes(y)
    y_idx = np.searchsorted(classes, y)
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    A = _design(X, mu, sd)
    W = np.zeros((classes.size - 1, A.shape[1]))
    loss, grad = loss_and_grad(W, A, y_idx, l2)
    step = 1.0
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        gnorm2 = float(np.sum(grad**2))
        if np.sqrt(gnorm2) <= tol:
            break
        while True:
            W_new = W - step * grad
            new_loss, new_grad = loss_and_grad(W_new, A, y_idx, l2)
            if new_loss <= loss - ARMIJO_C * step * gnorm2 or step < 1e-12:
                break
            step *= 0.5
        W, loss, grad = W_new, new_loss, new_grad
        step *= 2.0
    return ClassifierModel(
        kind="logistic",
        classes=tuple(int(c) for c in classes),
        n_features=X.shape[1],
        params={"weights": W, "mean": mu, "scale": sd},
        hyper={"l2": l2, "max_iter": max_iter, "tol": tol, "n_iter": n_iter,
               "final_loss": loss, "grad_norm": float(np.sqrt(np.sum(grad**2)))},
    )


def scores(model: ClassifierModel, X: np.ndarray) -> np.ndarray:
    p = model.params
    return _softmax(_logits(p["weights"], _design(X, p["mean"], p["scale"])))
