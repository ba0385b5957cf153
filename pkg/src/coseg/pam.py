"""Arousal/valence adjustment that turns ordinal stress into a continuous response.

Each day is placed in the arousal/valence plane relative to the subject's mean
arousal and mean valence. Days of high arousal and low valence push stress up,
days of low arousal and high valence push it down, and the push grows as the
day passes a second divider inside that quadrant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import AdjustedSeries, SubjectSeries

# (arousal beyond sub-divider, valence beyond sub-divider) -> magnitude
DEFAULT_CELLS = {(0, 0): 0.25, (1, 0): 0.5, (0, 1): 0.75, (1, 1): 1.0}
# flat order used in configs: neither, arousal only, valence only, both
CELL_ORDER = ((0, 0), (1, 0), (0, 1), (1, 1))


@dataclass(frozen=True)
class RussellPartition:
    """Dividers of the arousal/valence plane; NaN marks an empty half."""

    mean_arousal: float
    mean_valence: float
    arousal_top: float
    arousal_bottom: float
    valence_left: float
    valence_right: float

    @property
    def undefined(self) -> tuple[str, ...]:
        names = ("arousal_top", "arousal_bottom", "valence_left", "valence_right")
        return tuple(n for n in names if math.isnan(getattr(self, n)))


def _half_mean(values: np.ndarray, mask: np.ndarray) -> float:
    return float(values[mask].mean()) if mask.any() else math.nan


def build_partition(series: SubjectSeries, rows=None) -> RussellPartition:
    """Dividers from all days, or only from ``rows`` (0-based) when given."""
    a = np.asarray(series.arousal, dtype=float)
    v = np.asarray(series.valence, dtype=float)
    if rows is not None:
        a, v = a[rows], v[rows]
    if a.size == 0:
        raise ValueError("cannot build a partition from zero days")
    a_bar, v_bar = float(a.mean()), float(v.mean())
    return RussellPartition(
        mean_arousal=a_bar,
        mean_valence=v_bar,
        arousal_top=_half_mean(a, a > a_bar),
        arousal_bottom=_half_mean(a, a < a_bar),
        valence_left=_half_mean(v, v < v_bar),
        valence_right=_half_mean(v, v > v_bar),
    )


def check_cells(cells) -> dict[tuple[int, int], float]:
    """Normalize a cell table given as a mapping or as four values in ``CELL_ORDER``."""
    if not isinstance(cells, dict):
        values = [float(x) for x in cells]
        if len(values) != 4:
            raise ValueError(f"cell table needs 4 values, got {len(values)}")
        cells = dict(zip(CELL_ORDER, values))
    cells = {(int(k[0]), int(k[1])): float(x) for k, x in cells.items()}
    if set(cells) != set(DEFAULT_CELLS):
        raise ValueError(f"cell table needs keys {sorted(DEFAULT_CELLS)}, got {sorted(cells)}")
    if any(not 0.0 <= x <= 1.0 for x in cells.values()):
        raise ValueError("cell magnitudes must lie in [0, 1]")
    return cells


def adjust_stress(series: SubjectSeries, partition: RussellPartition,
                  cells=None) -> AdjustedSeries:
    """Stress plus the quadrant adjustment; equality with a divider counts as not beyond it."""
    table = check_cells(DEFAULT_CELLS if cells is None else cells)
    a = np.asarray(series.arousal, dtype=float)
    v = np.asarray(series.valence, dtype=float)
    P = partition
    high = (a > P.mean_arousal) & (v < P.mean_valence)
    low = (a < P.mean_arousal) & (v > P.mean_valence)
    # NaN comparisons are False, so an undefined sub-divider is never exceeded
    high_a = (a > P.arousal_top).astype(int)
    high_v = (v < P.valence_left).astype(int)
    low_a = (a < P.arousal_bottom).astype(int)
    low_v = (v > P.valence_right).astype(int)
    lookup = np.array([[table[(0, 0)], table[(0, 1)]], [table[(1, 0)], table[(1, 1)]]])
    adjustment = np.zeros(a.shape)
    adjustment[high] = lookup[high_a[high], high_v[high]]
    adjustment[low] = -lookup[low_a[low], low_v[low]]
    return AdjustedSeries(np.asarray(series.stress, dtype=float) + adjustment, adjustment)
