"""Core domain types shared across the package.

Index conventions
-----------------
Days are numbered ``1..T``. A boundary ``b`` is the last day of the segment on
its left, so the segment after it starts on day ``b + 1``. In 0-based Python
slicing the same number is the exclusive stop of the left segment, which lets
``passive[start:b]`` and ``passive[b:stop]`` be used directly.
"""

from __future__ import annotations

import datetime as dt
import warnings
from dataclasses import dataclass, field, replace
from typing import Iterator, Mapping

import numpy as np

ACTIVE_LEVELS = (1, 2, 3, 4, 5)


class DataError(ValueError):
    """Input data violates a dataset invariant."""


def _frozen(a, dtype=None) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SubjectSeries:
    """Aligned daily passive matrix plus the three active EMA items."""

    subject_id: str
    dates: tuple[dt.date, ...]
    passive: np.ndarray
    stress: np.ndarray
    arousal: np.ndarray
    valence: np.ndarray
    missing_mask: np.ndarray | None = None
    passive_columns: tuple[str, ...] | None = None
    gaps: tuple[int, ...] = ()

    def __post_init__(self):
        passive = np.asarray(self.passive, dtype=float)
        if passive.ndim == 1:
            passive = passive[:, None]
        object.__setattr__(self, "passive", _frozen(passive))
        for name in ("stress", "arousal", "valence"):
            object.__setattr__(self, name, _frozen(getattr(self, name), dtype=np.int64))
        mask = self.missing_mask
        mask = np.isnan(passive) if mask is None else np.asarray(mask, dtype=bool)
        object.__setattr__(self, "missing_mask", _frozen(mask))
        object.__setattr__(self, "dates", tuple(self.dates))
        if self.passive_columns is None:
            cols = tuple(f"x{j + 1}" for j in range(passive.shape[1]))
            object.__setattr__(self, "passive_columns", cols)
        else:
            object.__setattr__(self, "passive_columns", tuple(self.passive_columns))

    @property
    def T(self) -> int:
        return self.passive.shape[0]

    @property
    def p(self) -> int:
        return self.passive.shape[1]

    def segment(self, start: int, end: int) -> "SubjectSeries":
        """Rows for days ``start..end`` (1-based, inclusive)."""
        if not 1 <= start <= end <= self.T:
            raise IndexError(f"segment {start}..{end} outside 1..{self.T}")
        sl = slice(start - 1, end)
        return SubjectSeries(
            subject_id=self.subject_id,
            dates=self.dates[sl],
            passive=self.passive[sl],
            stress=self.stress[sl],
            arousal=self.arousal[sl],
            valence=self.valence[sl],
            missing_mask=self.missing_mask[sl],
            passive_columns=self.passive_columns,
        )

    def take(self, rows: np.ndarray) -> "SubjectSeries":
        """Subset by 0-based row positions, keeping their order."""
        rows = np.asarray(rows)
        return SubjectSeries(
            subject_id=self.subject_id,
            dates=tuple(self.dates[i] for i in rows),
            passive=self.passive[rows],
            stress=self.stress[rows],
            arousal=self.arousal[rows],
            valence=self.valence[rows],
            missing_mask=self.missing_mask[rows],
            passive_columns=self.passive_columns,
        )

    def equals(self, other: "SubjectSeries") -> bool:
        return (
            self.subject_id == other.subject_id
            and self.dates == other.dates
            and self.passive_columns == other.passive_columns
            and np.array_equal(self.passive, other.passive, equal_nan=True)
            and all(
                np.array_equal(getattr(self, k), getattr(other, k))
                for k in ("stress", "arousal", "valence", "missing_mask")
            )
        )


def validate_dataset(raw: SubjectSeries, *, min_segment_length: int = 30,
                     require_cpd: bool = False) -> SubjectSeries:
    """Check dataset invariants and return the series with gaps flagged.

    Raises
    ------
    DataError
        On length mismatches, active values outside 1..5, non-increasing
        dates, or (with ``require_cpd``) a series too short for change-point
        detection.
    """
    T = raw.passive.shape[0]
    for name in ("stress", "arousal", "valence"):
        arr = getattr(raw, name)
        if arr.shape != (T,):
            raise DataError(f"{name} has length {arr.shape[0]}, expected {T}")
        bad = np.flatnonzero((arr < 1) | (arr > 5))
        if bad.size:
            i = int(bad[0])
            raise DataError(f"row {i + 1}, column {name}: value {arr[i]} outside 1..5")
    if len(raw.dates) != T:
        raise DataError(f"dates has length {len(raw.dates)}, expected {T}")
    if raw.missing_mask.shape != raw.passive.shape:
        raise DataError("missing_mask shape does not match passive matrix")
    if len(raw.passive_columns) != raw.p:
        raise DataError("passive_columns does not match passive width")
    gaps = []
    for i in range(1, T):
        step = (raw.dates[i] - raw.dates[i - 1]).days
        if step <= 0:
            raise DataError(f"row {i + 1}: dates not strictly increasing")
        if step > 1:
            gaps.append(i + 1)
    if T < 2 * min_segment_length:
        msg = f"T={T} is shorter than 2*min_segment_length={2 * min_segment_length}"
        if require_cpd:
            raise DataError(msg)
        warnings.warn(msg)
    return replace(raw, gaps=tuple(gaps))


@dataclass(frozen=True, eq=False)
class AdjustedSeries:
    """Stress plus the arousal/valence adjustment (values in [0, 6])."""

    values: np.ndarray
    adjustment: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, dtype=float))
        object.__setattr__(self, "adjustment", _frozen(self.adjustment, dtype=float))


@dataclass(frozen=True)
class BoundaryInfo:
    step: int
    p_values: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class Segmentation:
    """Ordered interior boundaries over days ``1..T``."""

    T: int
    boundaries: tuple[int, ...] = ()
    provenance: Mapping[int, BoundaryInfo] = field(default_factory=dict)

    def __post_init__(self):
        b = tuple(int(x) for x in self.boundaries)
        object.__setattr__(self, "boundaries", b)
        if any(x >= y for x, y in zip(b, b[1:])):
            raise ValueError(f"boundaries not strictly increasing: {b}")
        if b and (b[0] < 1 or b[-1] > self.T - 1):
            raise ValueError(f"boundaries {b} outside 1..{self.T - 1}")

    @property
    def n_segments(self) -> int:
        return len(self.boundaries) + 1

    def spans(self) -> list[tuple[int, int]]:
        """0-based half-open ``(start, stop)`` per segment."""
        edges = (0, *self.boundaries, self.T)
        return list(zip(edges[:-1], edges[1:]))

    def day_ranges(self) -> list[tuple[int, int]]:
        """1-based inclusive ``(first_day, last_day)`` per segment."""
        return [(s + 1, e) for s, e in self.spans()]

    def labels(self) -> np.ndarray:
        """Temporal segment label ``1..N`` for every day."""
        out = np.empty(self.T, dtype=np.int64)
        for k, (s, e) in enumerate(self.spans(), start=1):
            out[s:e] = k
        return out

    def lengths(self) -> list[int]:
        return [e - s for s, e in self.spans()]

    def without(self, removed) -> "Segmentation":
        removed = set(removed)
        keep = tuple(b for b in self.boundaries if b not in removed)
        prov = {b: v for b, v in self.provenance.items() if b in keep}
        return Segmentation(self.T, keep, prov)


def iter_segments(series: SubjectSeries, seg: Segmentation) -> Iterator[SubjectSeries]:
    for first, last in seg.day_ranges():
        yield series.segment(first, last)


@dataclass(frozen=True)
class SegmentFit:
    """OLS fit of one segment."""

    segment_index: int
    coefficients: np.ndarray
    intercept: float
    rss: float
    tss: float
    n: int
    df_model: int
    df_residual: int
    dropped_columns: tuple[int, ...] = ()
    has_intercept: bool = True

    @property
    def retained_columns(self) -> tuple[int, ...]:
        dropped = set(self.dropped_columns)
        return tuple(j for j in range(len(self.coefficients)) if j not in dropped)


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Step 5 output: one row per day with its segment label."""

    t: np.ndarray
    passive: np.ndarray
    labels: np.ndarray
    stress_ranking: tuple[int, ...]
    segment_means: tuple[float, ...]

    @property
    def n_classes(self) -> int:
        return len(self.segment_means)
