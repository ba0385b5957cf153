"""CSV ingestion and export, and the local-median imputation of passive cells."""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import math
from dataclasses import replace
from pathlib import Path

import numpy as np

from .model import DataError, SubjectSeries

PASSIVE_COLUMNS = (
    "active_time",
    "step_count",
    "conversation_percent",
    "tic_voice_time",
    "time_at_home",
    "sleep_duration",
    "sleep_interruption",
    "travel_diameter",
    "total_activity_duration",
    "total_location_duration",
    "radius_of_gyration",
)
ID_COLUMNS = ("subject_id", "date")
ACTIVE_COLUMNS = ("stress", "arousal", "valence")
HEADER = ID_COLUMNS + PASSIVE_COLUMNS + ACTIVE_COLUMNS


def _passive_from_header(header, expected) -> tuple[str, ...]:
    header = tuple(h.strip() for h in header)
    if header[:2] != ID_COLUMNS or header[-3:] != ACTIVE_COLUMNS or len(header) < 6:
        raise DataError(
            "line 1: header must be subject_id, date, <passive columns>, stress, arousal, valence"
        )
    passive = header[2:-3]
    if len(set(header)) != len(header):
        raise DataError("line 1: duplicate column names in header")
    if expected is not None and passive != tuple(expected):
        raise DataError(f"line 1: passive columns {list(passive)} != expected {list(expected)}")
    return passive


def _active(cell: str, line: int, name: str) -> int:
    if not cell.strip():
        raise DataError(f"line {line}: missing {name} value")
    try:
        value = float(cell)
    except ValueError:
        raise DataError(f"line {line}: {name} value {cell!r} is not a number") from None
    if not value.is_integer() or not 1 <= value <= 5:
        raise DataError(f"line {line}: {name} value {cell!r} not an integer in 1..5")
    return int(value)


def parse_csv(path, passive_columns=None) -> list[SubjectSeries]:
    """One series per subject, in order of first appearance, rows sorted by date.

    The passive columns are whatever sits between ``date`` and ``stress``;
    pass ``passive_columns`` to require a specific list. Empty passive cells
    become NaN and are flagged in ``missing_mask``.
    """
    rows: dict[str, list] = {}
    seen: dict[tuple[str, dt.date], int] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("line 1: file is empty") from None
        passive = _passive_from_header(header, passive_columns)
        width = len(passive) + 5
        for line, cells in enumerate(reader, start=2):
            if not cells or all(not c.strip() for c in cells):
                continue
            if len(cells) != width:
                raise DataError(f"line {line}: expected {width} fields, got {len(cells)}")
            sid = cells[0].strip()
            try:
                date = dt.date.fromisoformat(cells[1].strip())
            except ValueError:
                raise DataError(f"line {line}: bad date {cells[1]!r}") from None
            if (sid, date) in seen:
                raise DataError(
                    f"line {line}: duplicate row for subject {sid} on {date} "
                    f"(first on line {seen[sid, date]})"
                )
            seen[sid, date] = line
            values = []
            for name, cell in zip(passive, cells[2:-3]):
                if not cell.strip():
                    values.append(math.nan)
                    continue
                try:
                    values.append(float(cell))
                except ValueError:
                    raise DataError(f"line {line}: {name} value {cell!r} is not a number") from None
            active = [_active(c, line, n) for n, c in zip(ACTIVE_COLUMNS, cells[-3:])]
            rows.setdefault(sid, []).append((date, values, active))
    out = []
    for sid, recs in rows.items():
        recs.sort(key=lambda r: r[0])
        act = np.array([r[2] for r in recs], dtype=np.int64)
        out.append(SubjectSeries(
            subject_id=sid,
            dates=tuple(r[0] for r in recs),
            passive=np.array([r[1] for r in recs], dtype=float).reshape(len(recs), len(passive)),
            stress=act[:, 0],
            arousal=act[:, 1],
            valence=act[:, 2],
            passive_columns=passive,
        ))
    return out


def write_csv(path, series_list) -> None:
    """Write series in the ingestion schema; floats use shortest round-trip repr."""
    series_list = list(series_list)
    if not series_list:
        raise ValueError("nothing to write")
    passive = series_list[0].passive_columns
    if any(s.passive_columns != passive for s in series_list):
        raise ValueError("all series must share the same passive columns")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ID_COLUMNS + tuple(passive) + ACTIVE_COLUMNS)
        for s in series_list:
            for i in range(s.T):
                cells = ["" if np.isnan(v) else repr(float(v)) for v in s.passive[i]]
                w.writerow([s.subject_id, s.dates[i].isoformat(), *cells,
                            int(s.stress[i]), int(s.arousal[i]), int(s.valence[i])])


def impute_missing(series: SubjectSeries, window_radius: int = 3,
                   max_missing_fraction: float = 0.5) -> SubjectSeries:
    """Fill each missing passive cell with the median of observed neighbours.

    Neighbours are the same column within ``window_radius`` rows; if none is
    observed the column median is used. ``missing_mask`` is kept so imputed
    cells stay flagged.

    Raises
    ------
    DataError
        If a column is missing in more than ``max_missing_fraction`` of rows.
    """
    X = np.array(series.passive, dtype=float)
    missing = np.isnan(X)
    if not missing.any():
        return series
    for j in np.flatnonzero(missing.mean(axis=0) > max_missing_fraction):
        frac = missing[:, j].mean()
        raise DataError(
            f"column {series.passive_columns[j]} is {frac:.0%} missing "
            f"(limit {max_missing_fraction:.0%})"
        )
    observed = np.where(missing, np.nan, X)
    filled = X.copy()
    for i, j in zip(*np.nonzero(missing)):
        lo, hi = max(0, i - window_radius), min(series.T, i + window_radius + 1)
        near = observed[lo:hi, j]
        near = near[~np.isnan(near)]
        filled[i, j] = np.median(near) if near.size else np.nanmedian(observed[:, j])
    return replace(series, passive=filled, missing_mask=missing | series.missing_mask)


def sha256_of(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def basename(path) -> str:
    return Path(path).name
