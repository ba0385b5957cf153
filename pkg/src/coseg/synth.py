"""Synthetic subjects with known regimes, plus brute-force reference oracles.

A scenario is a list of regimes over consecutive day ranges. Within a regime
the passive rows are i.i.d. and a latent stress level is linear in them:

    latent_t = intercept + x_t @ beta + noise

Stress, arousal and valence are the latent level (or a noisy positive /
negative coupling of it) cut into five ordinal levels.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels_numpy import TIE_RTOL
from .edivisive import DivergenceConfig, SplitCandidate
from .model import SubjectSeries

DEFAULT_QUANTILES = (0.2, 0.4, 0.6, 0.8)


@dataclass(frozen=True)
class Regime:
    """Passive distribution and latent-stress model for one segment.

    ``mean`` and ``beta`` may be scalars (broadcast over all columns).
    """

    mean: float | tuple[float, ...] = 0.0
    scale: float = 1.0
    beta: float | tuple[float, ...] = 1.0
    intercept: float = 0.0


@dataclass(frozen=True)
class Scenario:
    T: int
    p: int
    boundaries: tuple[int, ...] = ()
    regimes: tuple[Regime, ...] = (Regime(),)
    noise_sigma: float = 0.5
    # latent cut points; None means the latent quantiles DEFAULT_QUANTILES
    thresholds: tuple[float, ...] | None = None
    arousal_coupling: float = 1.0
    valence_coupling: float = 1.0
    affect_noise: float = 0.5
    distribution: str = "gaussian"
    seed: int = 0
    subject_id: str = "synthetic"
    start_date: str = "2020-01-01"

    def __post_init__(self):
        object.__setattr__(self, "boundaries", tuple(int(b) for b in self.boundaries))
        object.__setattr__(self, "regimes", tuple(
            r if isinstance(r, Regime) else Regime(**r) for r in self.regimes
        ))
        edges = (0, *self.boundaries, self.T)
        if any(a >= b for a, b in zip(edges, edges[1:])):
            raise ValueError(f"boundaries {self.boundaries} invalid for T={self.T}")
        if len(self.regimes) != len(self.boundaries) + 1:
            raise ValueError("need exactly one regime per segment")
        if self.thresholds is not None:
            th = tuple(float(x) for x in self.thresholds)
            if len(th) != 4 or any(a >= b for a, b in zip(th, th[1:])):
                raise ValueError("thresholds must be 4 strictly increasing values")
            object.__setattr__(self, "thresholds", th)
        if self.distribution not in ("gaussian", "lognormal"):
            raise ValueError(f"unknown distribution {self.distribution!r}")
        if self.p < 1:
            raise ValueError("p must be >= 1")


@dataclass(frozen=True, eq=False)
class GroundTruth:
    boundaries: tuple[int, ...]
    regimes: tuple[Regime, ...]
    latent: np.ndarray = field(repr=False)


def _vector(value, p) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    return np.full(p, float(arr)) if arr.ndim == 0 else arr.reshape(p)


def _discretize(values: np.ndarray, thresholds=None) -> np.ndarray:
    if thresholds is None:
        thresholds = np.quantile(values, DEFAULT_QUANTILES)
    return 1 + np.searchsorted(np.asarray(thresholds), values, side="right")


def generate(scenario: Scenario) -> tuple[SubjectSeries, GroundTruth]:
    """Draw one subject; the same scenario always yields identical arrays."""
    sc = scenario
    rng = np.random.default_rng(sc.seed)
    edges = (0, *sc.boundaries, sc.T)
    passive = np.empty((sc.T, sc.p))
    latent = np.empty(sc.T)
    for (s, e), reg in zip(zip(edges[:-1], edges[1:]), sc.regimes):
        noise = rng.standard_normal((e - s, sc.p))
        if sc.distribution == "lognormal":
            # centered lognormal keeps the regime mean while adding skew
            noise = (np.exp(noise) - math.exp(0.5)) / math.sqrt((math.e - 1) * math.e)
        x = _vector(reg.mean, sc.p) + reg.scale * noise
        passive[s:e] = x
        latent[s:e] = reg.intercept + x @ _vector(reg.beta, sc.p)
    latent += sc.noise_sigma * rng.standard_normal(sc.T)
    arousal_latent = sc.arousal_coupling * latent + sc.affect_noise * rng.standard_normal(sc.T)
    valence_latent = -sc.valence_coupling * latent + sc.affect_noise * rng.standard_normal(sc.T)
    start = dt.date.fromisoformat(sc.start_date)
    series = SubjectSeries(
        subject_id=sc.subject_id,
        dates=tuple(start + dt.timedelta(days=i) for i in range(sc.T)),
        passive=passive,
        stress=_discretize(latent, sc.thresholds),
        arousal=_discretize(arousal_latent),
        valence=_discretize(valence_latent),
    )
    return series, GroundTruth(sc.boundaries, sc.regimes, latent)


def null_scenario(seed: int = 0, T: int = 200, p: int = 5) -> Scenario:
    """One regime throughout; change-point detection should find nothing."""
    return Scenario(T=T, p=p, regimes=(Regime(beta=0.5),), seed=seed)


def single_shift_scenario(seed: int = 0, T: int = 200, p: int = 5, at: int = 100,
                          shift: float = 3.0) -> Scenario:
    """Every passive column jumps by ``shift`` standard deviations on day ``at + 1``."""
    return Scenario(T=T, p=p, boundaries=(at,),
                    regimes=(Regime(beta=0.5), Regime(mean=shift, beta=0.5)), seed=seed)


def three_regime_scenario(seed: int = 0, T: int = 180, p: int = 5) -> Scenario:
    """Mean shifts, a sign-flipped slope in the middle, and shifted stress levels."""
    beta = (1.0, -1.0, 0.5, 0.0, 0.0)[:p] + (0.0,) * max(0, p - 5)
    flipped = tuple(-b for b in beta)
    b1, b2 = T // 3, 2 * T // 3
    return Scenario(
        T=T, p=p, boundaries=(b1, b2),
        regimes=(
            Regime(mean=0.0, beta=beta, intercept=0.0),
            Regime(mean=3.0, beta=flipped, intercept=3.0),
            Regime(mean=-3.0, beta=beta, intercept=-3.0),
        ),
        seed=seed,
    )


def x_shift_only_scenario(seed: int = 0, T: int = 180, p: int = 5) -> Scenario:
    """Passive means move orthogonally to a shared slope.

    The response given the passive data, and the marginal stress distribution,
    are the same in every regime, so the pipeline should stop at the
    association or response comparison.
    """
    beta = np.zeros(p)
    beta[0] = 1.0
    shift = np.zeros(p)
    shift[1:] = 3.0
    b1, b2 = T // 3, 2 * T // 3
    return Scenario(
        T=T, p=p, boundaries=(b1, b2),
        regimes=(
            Regime(mean=0.0, beta=tuple(beta)),
            Regime(mean=tuple(shift), beta=tuple(beta)),
            Regime(mean=0.0, beta=tuple(beta)),
        ),
        seed=seed,
    )


def regime_switching_scenario(seed: int = 0, T: int = 200, p: int = 5) -> Scenario:
    """Two regimes told apart by passive spread, with a flipped slope.

    The passive means are equal across regimes, so a single global linear
    model cannot use them to predict which regime a day belongs to.
    """
    beta = (1.0, -1.0, 0.5, 0.0, 0.0)[:p] + (0.0,) * max(0, p - 5)
    flipped = tuple(-b for b in beta)
    return Scenario(
        T=T, p=p, boundaries=(T // 2,),
        regimes=(
            Regime(mean=0.0, scale=0.5, beta=beta, intercept=0.0),
            Regime(mean=0.0, scale=2.0, beta=flipped, intercept=1.5),
        ),
        seed=seed,
    )


PRESETS = {
    "null": null_scenario,
    "single_shift": single_shift_scenario,
    "three_regime": three_regime_scenario,
    "x_shift_only": x_shift_only_scenario,
    "regime_switching": regime_switching_scenario,
}


def triple_loop_divergence(X, Y, alpha: float = 1.0, prefactor: str = "pairwise") -> float:
    """Reference divergence by explicit loops over points and coordinates."""
    X = [list(map(float, np.atleast_1d(x))) for x in X]
    Y = [list(map(float, np.atleast_1d(y))) for y in Y]

    def dist(u, v):
        return math.sqrt(sum((a - b) ** 2 for a, b in zip(u, v))) ** alpha

    n, m = len(X), len(Y)
    between = sum(dist(x, y) for x in X for y in Y)
    within_x = sum(dist(X[i], X[k]) for i in range(n) for k in range(i + 1, n))
    within_y = sum(dist(Y[j], Y[k]) for j in range(m) for k in range(j + 1, m))
    scale = 2.0 / (m + n) if prefactor == "pooled" else 2.0 / (m * n)
    return scale * between - within_x / math.comb(n, 2) - within_y / math.comb(m, 2)


def _naive_q(Z, t, k, alpha, pooled):
    X, Y = Z[:t], Z[t:k]
    n, m = len(X), len(Y)
    cross = np.sqrt(((X[:, None] - Y[None]) ** 2).sum(-1)) ** alpha
    wx = np.sqrt(((X[:, None] - X[None]) ** 2).sum(-1)) ** alpha
    wy = np.sqrt(((Y[:, None] - Y[None]) ** 2).sum(-1)) ** alpha
    scale = 2.0 / (m + n) if pooled else 2.0 / (m * n)
    e = scale * cross.sum() - wx.sum() / (n * (n - 1)) - wy.sum() / (m * (m - 1))
    return m * n / (m + n) * e


def brute_force_best_split(segment, config: DivergenceConfig) -> SplitCandidate | None:
    """Recompute the statistic from raw points for every feasible split."""
    Z = np.asarray(segment, dtype=float)
    Z = Z[:, None] if Z.ndim == 1 else Z
    n, ms = len(Z), config.min_size
    if n < 2 * ms:
        return None
    cands = [(t, k, _naive_q(Z, t, k, config.alpha, config.pooled_prefactor))
             for t in range(ms, n - ms + 1) for k in range(t + ms, n + 1)]
    best = max(q for *_, q in cands)
    cut = best - TIE_RTOL * max(1.0, abs(best))
    t, k, q = next(c for c in cands if c[2] >= cut)
    return SplitCandidate(0, t, k, float(q))
