"""The five-step co-segmentation pipeline.

1. e-divisive change points on the passive matrix only.
2. Segments whose regression of adjusted stress on the passive columns is not
   significant are merged into their shorter neighbor, until all survive.
3. Neighbors whose regressions do not differ (Chow test) are merged.
4. Neighbors whose raw stress distributions do not differ are merged.
5. Surviving segments get temporal labels ``1..N``.

A step that leaves a single segment halts the pipeline. Halts are recorded in
the trace and returned, not raised.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .edivisive import DivergenceConfig, detect_change_points
from .model import (
    AdjustedSeries,
    BoundaryInfo,
    DataError,
    LabeledDataset,
    Segmentation,
    SubjectSeries,
)
from .pam import CELL_ORDER, DEFAULT_CELLS, adjust_stress, build_partition, check_cells
from .stats import (
    InsufficientDataError,
    TestResult,
    chow_test,
    f_nullity_test,
    fit_ols,
    response_test,
)

DEFAULT_PAM_CELLS = tuple(DEFAULT_CELLS[k] for k in CELL_ORDER)


@dataclass(frozen=True)
class PipelineConfig:
    divergence: DivergenceConfig = field(default_factory=DivergenceConfig)
    alpha_assoc: float = 0.05
    alpha_chow: float = 0.05
    alpha_resp: float = 0.05
    # re-test pairs after each merge round instead of a single pass
    step3_fixpoint: bool = False
    step4_fixpoint: bool = False
    pam_cells: tuple[float, float, float, float] = DEFAULT_PAM_CELLS

    def __post_init__(self):
        for name in ("alpha_assoc", "alpha_chow", "alpha_resp"):
            level = getattr(self, name)
            if not 0 < level < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {level}")
        object.__setattr__(self, "pam_cells", tuple(float(x) for x in self.pam_cells))
        check_cells(self.pam_cells)


@dataclass
class PipelineTrace:
    """Everything the pipeline decided, in a JSON-friendly shape."""

    boundaries: dict[int, tuple[int, ...]] = field(default_factory=dict)
    cpd_stages: list[dict] = field(default_factory=list)
    tests: list[dict] = field(default_factory=list)
    merges: list[dict] = field(default_factory=list)
    # boundaries whose neighbouring segments grew after they were last tested
    untested: dict[int, tuple[int, ...]] = field(default_factory=dict)
    halt_step: int | None = None
    halt_reason: str | None = None

    def segment_counts(self) -> dict[int, int]:
        return {k: len(b) + 1 for k, b in self.boundaries.items()}

    def to_dict(self) -> dict:
        return {
            "boundaries": {str(k): list(v) for k, v in sorted(self.boundaries.items())},
            "segment_counts": {str(k): v for k, v in sorted(self.segment_counts().items())},
            "cpd_stages": self.cpd_stages,
            "tests": self.tests,
            "merges": self.merges,
            "untested_boundaries": {str(k): list(v) for k, v in sorted(self.untested.items())},
            "halt_step": self.halt_step,
            "halt_reason": self.halt_reason,
        }


class PipelineHalted(RuntimeError):
    """Raised by callers that need a full segmentation when the pipeline halted."""

    def __init__(self, step: int | None, reason: str | None):
        super().__init__(f"pipeline halted at step {step}: {reason}")
        self.step = step
        self.reason = reason


class PipelineResult(NamedTuple):
    segmentation: Segmentation
    labeled: LabeledDataset | None
    trace: PipelineTrace

    @property
    def halted(self) -> bool:
        return self.labeled is None


def _record(trace, step, test, spans, result: TestResult, **extra):
    if trace is None:
        return
    trace.tests.append({
        "step": step,
        "test": test,
        "segments": [[s + 1, e] for s, e in spans],
        "statistic": result.statistic,
        "df1": result.df1,
        "df2": result.df2,
        "p_value": result.p_value,
        "flags": sorted(result.warning_flags),
        **extra,
    })


def _halt(seg: Segmentation, step: int, trace: PipelineTrace | None, reason: str):
    if trace is not None:
        trace.boundaries[step] = seg.boundaries
        if seg.n_segments == 1 and trace.halt_step is None:
            trace.halt_step = step
            trace.halt_reason = reason


def step1_initial_segments(series: SubjectSeries, config: PipelineConfig,
                           trace: PipelineTrace | None = None) -> Segmentation:
    if np.isnan(series.passive).any():
        raise DataError("passive matrix has missing cells; impute before step 1")
    stages = trace.cpd_stages if trace is not None else None
    seg = detect_change_points(series.passive, config.divergence, stages)
    _halt(seg, 1, trace, "no change points detected")
    return seg


def _nullity(series, adjusted, span) -> TestResult:
    s, e = span
    y = adjusted.values[s:e]
    try:
        fit = fit_ols(series.passive[s:e], y)
    except InsufficientDataError:
        warnings.warn(f"segment {s + 1}..{e} too short to fit; treated as not significant")
        return TestResult(np.nan, 0, 0, 1.0, frozenset({"insufficient_data"}))
    return f_nullity_test(fit, y)


def step2_prune_insignificant(series: SubjectSeries, adjusted: AdjustedSeries,
                              seg: Segmentation, config: PipelineConfig,
                              trace: PipelineTrace | None = None) -> Segmentation:
    """Merge the least significant segment into its shorter neighbor until none is left."""
    bounds = list(seg.boundaries)
    cache: dict[tuple[int, int], TestResult] = {}
    while True:
        spans = Segmentation(seg.T, tuple(bounds)).spans()
        results = []
        for span in spans:
            if span not in cache:
                cache[span] = _nullity(series, adjusted, span)
                _record(trace, 2, "nullity", [span], cache[span])
            results.append(cache[span])
        weak = [i for i, r in enumerate(results) if r.p_value > config.alpha_assoc]
        if not weak or len(spans) == 1:
            break
        # largest p-value first; ties go to the earlier segment
        i = min(weak, key=lambda j: (-results[j].p_value, j))
        if i == 0:
            target = 1
        elif i == len(spans) - 1:
            target = i - 1
        else:
            left_len = spans[i - 1][1] - spans[i - 1][0]
            right_len = spans[i + 1][1] - spans[i + 1][0]
            target = i - 1 if left_len <= right_len else i + 1
        removed = bounds.pop(min(i, target))
        if trace is not None:
            trace.merges.append({
                "step": 2, "segment": [spans[i][0] + 1, spans[i][1]],
                "into": [spans[target][0] + 1, spans[target][1]],
                "removed_boundary": removed, "p_value": results[i].p_value,
            })
    final = Segmentation(seg.T, tuple(bounds))
    prov = {}
    spans = final.spans()
    for i, b in enumerate(final.boundaries):
        old = seg.provenance.get(b, BoundaryInfo(1))
        prov[b] = BoundaryInfo(2, {
            **old.p_values,
            "nullity_left": cache[spans[i]].p_value,
            "nullity_right": cache[spans[i + 1]].p_value,
        })
    out = Segmentation(seg.T, final.boundaries, prov)
    _halt(out, 2, trace, "no segment has a significant association")
    return out


def _pairwise_merge(seg: Segmentation, test: Callable, name: str, level: float,
                    step: int, fixpoint: bool, trace: PipelineTrace | None) -> Segmentation:
    current = seg
    tested_spans: dict[int, tuple] = {}
    while current.n_segments > 1:
        spans = current.spans()
        kept, prov = [], {}
        for i, b in enumerate(current.boundaries):
            pair = (spans[i], spans[i + 1])
            result = test(*pair)
            _record(trace, step, name, pair, result, boundary=b)
            tested_spans[b] = pair
            if result.p_value > level:
                if trace is not None:
                    trace.merges.append({"step": step, "removed_boundary": b,
                                         "p_value": result.p_value})
                continue
            kept.append(b)
            old = current.provenance.get(b, BoundaryInfo(step))
            prov[b] = BoundaryInfo(step, {**old.p_values, name: result.p_value})
        changed = len(kept) < len(current.boundaries)
        current = Segmentation(seg.T, tuple(kept), prov)
        if not (fixpoint and changed):
            break
    spans = current.spans()
    stale = tuple(
        b for i, b in enumerate(current.boundaries)
        if tested_spans.get(b) != (spans[i], spans[i + 1])
    )
    if trace is not None:
        trace.untested[step] = stale
    return current


def step3_merge_similar_association(series: SubjectSeries, adjusted: AdjustedSeries,
                                    seg: Segmentation, config: PipelineConfig,
                                    trace: PipelineTrace | None = None) -> Segmentation:
    X, y = series.passive, adjusted.values

    def chow(left, right):
        try:
            return chow_test((X[slice(*left)], y[slice(*left)]),
                             (X[slice(*right)], y[slice(*right)]))
        except InsufficientDataError:
            return TestResult(np.nan, 0, 0, 1.0, frozenset({"insufficient_data"}))

    out = _pairwise_merge(seg, chow, "chow", config.alpha_chow, 3,
                          config.step3_fixpoint, trace)
    _halt(out, 3, trace, "all neighbouring associations are alike")
    return out


def step4_merge_similar_response(series: SubjectSeries, seg: Segmentation,
                                 config: PipelineConfig,
                                 trace: PipelineTrace | None = None) -> Segmentation:
    y = series.stress

    def resp(left, right):
        return response_test(y[slice(*left)], y[slice(*right)])

    out = _pairwise_merge(seg, resp, "response", config.alpha_resp, 4,
                          config.step4_fixpoint, trace)
    _halt(out, 4, trace, "all neighbouring stress distributions are alike")
    return out


def step5_assign_labels(series: SubjectSeries, adjusted: AdjustedSeries,
                        seg: Segmentation) -> LabeledDataset:
    """Temporal labels plus a ranking of labels by mean adjusted stress (highest first)."""
    if seg.n_segments < 2:
        raise ValueError("labels need at least two segments")
    means = tuple(float(adjusted.values[s:e].mean()) for s, e in seg.spans())
    ranking = tuple(sorted(range(1, len(means) + 1), key=lambda k: (-means[k - 1], k)))
    return LabeledDataset(
        t=np.arange(1, seg.T + 1),
        passive=series.passive,
        labels=seg.labels(),
        stress_ranking=ranking,
        segment_means=means,
    )


def compute_adjusted(series: SubjectSeries, config: PipelineConfig) -> AdjustedSeries:
    return adjust_stress(series, build_partition(series), config.pam_cells)


def run_pipeline(series: SubjectSeries, config: PipelineConfig | None = None,
                 adjusted: AdjustedSeries | None = None) -> PipelineResult:
    """Steps 1 through 4, then labels when at least two segments survive.

    ``adjusted`` overrides the adjustment computed from ``series`` itself.
    """
    config = config or PipelineConfig()
    if adjusted is None:
        adjusted = compute_adjusted(series, config)
    trace = PipelineTrace()
    seg = step1_initial_segments(series, config, trace)
    if seg.n_segments > 1:
        seg = step2_prune_insignificant(series, adjusted, seg, config, trace)
    if seg.n_segments > 1:
        seg = step3_merge_similar_association(series, adjusted, seg, config, trace)
    if seg.n_segments > 1:
        seg = step4_merge_similar_response(series, seg, config, trace)
    if seg.n_segments == 1:
        return PipelineResult(seg, None, trace)
    return PipelineResult(seg, step5_assign_labels(series, adjusted, seg), trace)
