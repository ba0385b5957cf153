"""One-dimensional k-means with deterministic quantile seeding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class KMeansResult:
    centers: np.ndarray
    assignment: np.ndarray
    n_iter: int
    objective_history: tuple[float, ...]

    @property
    def objective(self) -> float:
        return self.objective_history[-1]


def nearest_center(values, centers) -> np.ndarray:
    """Index of the closest center; equidistant values go to the lower index."""
    values = np.asarray(values, dtype=float)
    return np.argmin(np.abs(values[:, None] - np.asarray(centers)[None, :]), axis=1)


def kmeans(values, k: int, max_iter: int = 300) -> KMeansResult:
    """Lloyd iterations seeded at the ``(j - 0.5) / k`` quantiles.

    Centers are returned in ascending order. When the quantiles of the raw
    values coincide (heavy ties), seeding falls back to quantiles of the
    distinct values.
    """
    x = np.asarray(values, dtype=float).ravel()
    distinct = np.unique(x)
    if k < 1 or distinct.size < k:
        raise ValueError(f"need at least k={k} distinct values, got {distinct.size}")
    probs = (np.arange(1, k + 1) - 0.5) / k
    centers = np.quantile(x, probs)
    if np.any(np.diff(centers) <= 0):
        centers = np.quantile(distinct, probs)
    assign = nearest_center(x, centers)
    history = [float(np.sum((x - centers[assign]) ** 2))]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        # an emptied cluster keeps its previous center
        centers = np.array([x[assign == j].mean() if np.any(assign == j) else centers[j]
                            for j in range(k)])
        history.append(float(np.sum((x - centers[assign]) ** 2)))
        new = nearest_center(x, centers)
        if np.array_equal(new, assign):
            break
        assign = new
        history.append(float(np.sum((x - centers[assign]) ** 2)))
    order = np.argsort(centers, kind="stable")
    rank = np.empty(k, dtype=np.int64)
    rank[order] = np.arange(k)
    return KMeansResult(centers[order], rank[assign], n_iter, tuple(history))
