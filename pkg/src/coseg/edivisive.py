"""Hierarchical e-divisive change-point detection on the passive matrix.

Each stage scans every current cluster for the split ``(tau, kappa)`` that
maximizes the scaled energy statistic, takes the best cluster, and keeps the
split if a within-cluster permutation test rejects at ``p0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .model import BoundaryInfo, DataError, Segmentation

PREFACTORS = ("pairwise", "pooled")


@dataclass(frozen=True)
class DivergenceConfig:
    """Settings for the divergence, split search and permutation test.

    ``prefactor="pairwise"`` weights the cross-sample term by ``2/(mn)`` (the
    energy-distance U-statistic); ``"pooled"`` uses ``2/(m+n)``.
    """

    alpha: float = 1.0
    min_size: int = 30
    num_permutations: int = 499
    p0: float = 0.05
    seed: int = 0
    prefactor: str = "pairwise"

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")
        if self.min_size < 2:
            raise ValueError(f"min_size must be >= 2, got {self.min_size}")
        if self.num_permutations < 1:
            raise ValueError("num_permutations must be >= 1")
        if not 0 < self.p0 < 1:
            raise ValueError(f"p0 must lie in (0, 1), got {self.p0}")
        if self.prefactor not in PREFACTORS:
            raise ValueError(f"prefactor must be one of {PREFACTORS}")

    @property
    def pooled_prefactor(self) -> bool:
        return self.prefactor == "pooled"


@dataclass(frozen=True)
class SplitCandidate:
    """Best split of one cluster, in 1-based day indices.

    ``tau`` is the last day of the left sample and ``kappa`` the last day of
    the right sample.
    """

    cluster_index: int
    tau: int
    kappa: int
    statistic: float


def _points(Z) -> np.ndarray:
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.ndim != 2:
        raise ValueError("points must be a 1-D or 2-D array")
    return np.ascontiguousarray(Z)


def pairwise_alpha_distances(points, alpha: float) -> np.ndarray:
    """Matrix of ``||z_i - z_j||**alpha``."""
    if not 0 < alpha < 2:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    if not isinstance(points, np.ndarray):
        dims = {np.size(z) for z in points}
        if len(dims) > 1:
            raise ValueError(f"points have mismatched dimensions {sorted(dims)}")
    return kernels.alpha_distances(_points(points), float(alpha))


def _cross(X, Y, alpha):
    diff = X[:, None, :] - Y[None, :, :]
    return np.sqrt((diff**2).sum(-1)) ** alpha


def empirical_divergence(X, Y, alpha: float = 1.0, prefactor: str = "pairwise") -> float:
    """Energy-distance U-statistic between samples ``X`` (n rows) and ``Y`` (m rows)."""
    X, Y = _points(X), _points(Y)
    n, m = len(X), len(Y)
    if n < 2 or m < 2:
        raise ValueError(f"both samples need at least 2 points, got n={n}, m={m}")
    if X.shape[1] != Y.shape[1]:
        raise ValueError("samples have different dimensions")
    if prefactor not in PREFACTORS:
        raise ValueError(f"prefactor must be one of {PREFACTORS}")
    # exactly rounded sums and a commutative final grouping make E(X, Y) == E(Y, X)
    between = math.fsum(_cross(X, Y, alpha).ravel())
    within_x = math.fsum(_cross(X, X, alpha)[np.triu_indices(n, 1)])
    within_y = math.fsum(_cross(Y, Y, alpha)[np.triu_indices(m, 1)])
    scale = 2.0 / (m + n) if prefactor == "pooled" else 2.0 / (m * n)
    within = within_x / (n * (n - 1) / 2) + within_y / (m * (m - 1) / 2)
    return float(scale * between - within)


def scaled_statistic(X, Y, alpha: float = 1.0, prefactor: str = "pairwise") -> float:
    n, m = len(_points(X)), len(_points(Y))
    return m * n / (m + n) * empirical_divergence(X, Y, alpha, prefactor)


def best_split(segment, config: DivergenceConfig, *, offset: int = 0,
               cluster_index: int = 0, distances=None) -> SplitCandidate | None:
    """Exhaustive ``(tau, kappa)`` search inside one cluster.

    ``offset`` is the number of days before the cluster, so returned indices
    are global. Ties resolve to the smallest ``tau``, then smallest ``kappa``.
    Returns None when the cluster is shorter than ``2 * min_size``.
    """
    if distances is None:
        distances = pairwise_alpha_distances(segment, config.alpha)
    D = np.ascontiguousarray(distances)
    if D.shape[0] < 2 * config.min_size:
        return None
    t, k, q = kernels.split_scan(D, config.min_size, config.pooled_prefactor)
    return SplitCandidate(cluster_index, offset + int(t), offset + int(k), float(q))


def _spans(T, boundaries):
    edges = (0, *sorted(boundaries), T)
    return list(zip(edges[:-1], edges[1:]))


def replicate_permutations(T: int, spans, seed: int, stage: int, replicates) -> np.ndarray:
    """Within-cluster row permutations, one counter-based stream per replicate.

    Replicate ``r`` of stage ``stage`` always draws from Philox with key
    ``seed`` and counter ``(0, 0, stage, r)``, so any subset or ordering of
    replicates reproduces the same permutations.
    """
    key = int(seed) % 2**64
    out = np.empty((len(replicates), T), dtype=np.int64)
    for row, r in enumerate(replicates):
        rng = np.random.Generator(np.random.Philox(key=key, counter=[0, 0, stage, int(r)]))
        for s, e in spans:
            out[row, s:e] = s + rng.permutation(e - s)
    return out


def permutation_null_stats(passive, boundaries, config: DivergenceConfig, stage: int = 0,
                           distances=None, replicates=None) -> np.ndarray:
    """Best-across-clusters statistic for each permutation replicate."""
    Z = _points(passive)
    D = pairwise_alpha_distances(Z, config.alpha) if distances is None else distances
    spans = _spans(len(Z), boundaries)
    if replicates is None:
        replicates = range(config.num_permutations)
    perms = replicate_permutations(len(Z), spans, config.seed, stage, list(replicates))
    starts = np.array([s for s, _ in spans], dtype=np.int64)
    stops = np.array([e for _, e in spans], dtype=np.int64)
    return kernels.permutation_max_stats(
        np.ascontiguousarray(D), starts, stops, perms, config.min_size, config.pooled_prefactor
    )


def permutation_pvalue(passive, boundaries, candidate: SplitCandidate,
                       config: DivergenceConfig, stage: int = 0, distances=None) -> float:
    """``#{q_r >= q} / (R + 1)`` over within-cluster permutations."""
    null = permutation_null_stats(passive, boundaries, config, stage, distances)
    return float(np.count_nonzero(null >= candidate.statistic) / (len(null) + 1))


def detect_change_points(passive, config: DivergenceConfig, trace: list | None = None
                         ) -> Segmentation:
    """Add significant splits one at a time until a permutation test fails.

    When ``trace`` is a list, one dict per tested stage is appended to it.
    """
    Z = _points(passive)
    T = len(Z)
    if T < 2 * config.min_size:
        raise DataError(f"T={T} is shorter than 2*min_size={2 * config.min_size}")
    if np.isnan(Z).any():
        raise DataError("passive matrix has missing cells; impute first")
    D = pairwise_alpha_distances(Z, config.alpha)
    boundaries: list[int] = []
    provenance = {}
    cache: dict[tuple[int, int], SplitCandidate | None] = {}
    stage = 0
    while True:
        spans = _spans(T, boundaries)
        best = None
        for i, (s, e) in enumerate(spans):
            if (s, e) not in cache:
                block = np.ascontiguousarray(D[s:e, s:e])
                cache[(s, e)] = best_split(Z[s:e], config, offset=s, distances=block)
            cand = cache[(s, e)]
            if cand is not None and (best is None or cand.statistic > best.statistic):
                best = SplitCandidate(i, cand.tau, cand.kappa, cand.statistic)
        if best is None:
            if trace is not None:
                trace.append({"stage": stage, "result": "no_feasible_cluster"})
            break
        p = permutation_pvalue(Z, boundaries, best, config, stage, distances=D)
        accepted = p <= config.p0
        if trace is not None:
            trace.append({
                "stage": stage, "tau": best.tau, "kappa": best.kappa,
                "cluster": best.cluster_index, "statistic": best.statistic,
                "p_value": p, "accepted": bool(accepted),
            })
        if not accepted:
            break
        boundaries.append(best.tau)
        boundaries.sort()
        provenance[best.tau] = BoundaryInfo(1, {"permutation": p})
        stage += 1
    return Segmentation(T, tuple(boundaries), provenance)
