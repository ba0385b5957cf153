"""Rolling-window hold-out experiment, response-only baselines and metrics.

Windows of ``window_len`` days start at day ``start_t`` and advance by
``step``. Each window is held out, the pipeline is rerun on the remaining
days, and on success every method labels the held-out days. The full-data
segmentation supplies the true labels.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .classify import fit_lda, fit_logistic, fit_random_forest, kmeans, nearest_center, predict
from .model import AdjustedSeries, LabeledDataset, Segmentation, SubjectSeries
from .pam import adjust_stress, build_partition
from .pipeline import PipelineConfig, PipelineHalted, compute_adjusted, run_pipeline
from .stats import fit_ols, predict_ols

METHODS = ("Reg", "LDA", "RF", "Resp", "Pred")
CLASSIFIER_METHODS = ("Reg", "LDA", "RF")


@dataclass(frozen=True)
class ExperimentConfig:
    window_len: int = 5
    start_t: int = 6
    step: int = 5
    max_successes: int = 50
    methods: tuple[str, ...] = METHODS
    seed: int = 0
    # rebuild the arousal/valence partition from training days only
    pam_training_only: bool = False
    logistic_l2: float = 1e-4
    logistic_max_iter: int = 1000
    logistic_tol: float = 1e-6
    rf_n_trees: int = 200
    rf_mtry: int | None = None
    rf_min_leaf: int = 2

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.window_len < 1 or self.step < 1 or self.start_t < 1:
            raise ValueError("window_len, step and start_t must be positive")
        if self.max_successes < 1:
            raise ValueError("max_successes must be positive")
        unknown = set(self.methods) - set(METHODS)
        if unknown or not self.methods:
            raise ValueError(f"methods must be a non-empty subset of {METHODS}")


@dataclass(frozen=True)
class Metrics:
    recall_per_class: tuple[float, ...]
    precision_per_class: tuple[float, ...]
    f1_per_class: tuple[float, ...]
    recall: float
    precision: float
    accuracy: float
    micro_recall: float
    micro_precision: float


@dataclass
class WindowRecord:
    window: tuple[int, int]
    success: bool
    halt_step: int | None = None
    n_segments_train: int | None = None
    # N* on training data differed from the full data; labels were rank-aligned
    label_mismatch: bool = False
    true_labels: list[int] = field(default_factory=list)
    predictions: dict[str, list[int]] = field(default_factory=dict)


@dataclass
class ExperimentReport:
    n_classes: int
    full_boundaries: tuple[int, ...]
    records: list[WindowRecord]
    skipped_windows: list[tuple[int, int]]
    confusion: dict[str, np.ndarray]
    metrics: dict[str, Metrics]
    metric_warnings: dict[str, list[str]] = field(default_factory=dict)

    @property
    def n_successes(self) -> int:
        return sum(r.success for r in self.records)

    @property
    def n_trials(self) -> int:
        return sum(len(r.true_labels) for r in self.records if r.success)

    def to_dict(self) -> dict:
        return {
            "n_classes": self.n_classes,
            "full_boundaries": list(self.full_boundaries),
            "n_successes": self.n_successes,
            "n_trials": self.n_trials,
            "skipped_windows": [list(w) for w in self.skipped_windows],
            "records": [asdict(r) | {"window": list(r.window)} for r in self.records],
            "confusion": {m: c.tolist() for m, c in self.confusion.items()},
            "metrics": {m: asdict(v) for m, v in self.metrics.items()},
            "metric_warnings": self.metric_warnings,
        }


def enumerate_windows(T: int, config: ExperimentConfig) -> list[tuple[int, int]]:
    """All ``(first, last)`` day ranges with ``last <= T``."""
    out = []
    first = config.start_t
    while first + config.window_len - 1 <= T:
        out.append((first, first + config.window_len - 1))
        first += config.step
    return out


def contains_boundary(window: tuple[int, int], boundaries) -> bool:
    first, last = window
    return any(first <= b <= last for b in boundaries)


def true_labels(full: Segmentation, window: tuple[int, int]) -> np.ndarray:
    first, last = window
    if not 1 <= first <= last <= full.T:
        raise IndexError(f"window {window} outside 1..{full.T}")
    labels = full.labels()[first - 1:last]
    if np.unique(labels).size > 1:
        raise ValueError(f"window {window} straddles a change point")
    return labels


def _order_by_stress(means) -> np.ndarray:
    """Labels ``1..N`` sorted by mean adjusted stress, lowest first (ties: earlier)."""
    return np.array(sorted(range(1, len(means) + 1), key=lambda k: (means[k - 1], k)))


def fit_response_centers(train_values, n_classes: int) -> np.ndarray:
    return kmeans(train_values, n_classes).centers


def label_by_centers(values, centers, segment_means) -> np.ndarray:
    """Nearest center, mapped to the segment with the same stress rank.

    Centers are ascending, so the ``j``-th center goes to the segment with the
    ``j``-th smallest mean adjusted stress.
    """
    order = _order_by_stress(segment_means)
    return order[nearest_center(values, centers)]


def resp_baseline(train_values, test_values, segment_means) -> np.ndarray:
    centers = fit_response_centers(train_values, len(segment_means))
    return label_by_centers(test_values, centers, segment_means)


def pred_baseline(train_X, train_values, test_X, centers, segment_means) -> np.ndarray:
    fit = fit_ols(train_X, train_values)
    return label_by_centers(predict_ols(fit, test_X), centers, segment_means)


def metrics(confusion) -> Metrics:
    """Macro recall/precision, accuracy and per-class F1.

    Rows are true classes and columns predicted classes. A zero denominator
    yields 0 and a warning.
    """
    C = np.asarray(confusion)
    if C.ndim != 2 or C.shape[0] != C.shape[1] or C.size == 0:
        raise ValueError("confusion matrix must be square and non-empty")
    total = C.sum()
    if total == 0:
        raise ValueError("confusion matrix is all zeros")
    tp = np.diag(C)
    instances = C.sum(axis=1)
    predicted = C.sum(axis=0)

    def ratio(num, den, what):
        out = []
        for k, (a, b) in enumerate(zip(num, den), start=1):
            if b == 0:
                warnings.warn(f"{what} of class {k} undefined (zero denominator); set to 0")
                out.append(0.0)
            else:
                out.append(float(a / b))
        return tuple(out)

    rec = ratio(tp, instances, "recall")
    prec = ratio(tp, predicted, "precision")
    f1 = ratio([2 * r * p for r, p in zip(rec, prec)], [r + p for r, p in zip(rec, prec)], "F1")
    return Metrics(
        recall_per_class=rec,
        precision_per_class=prec,
        f1_per_class=f1,
        recall=float(np.mean(rec)),
        precision=float(np.mean(prec)),
        accuracy=float(tp.sum() / total),
        micro_recall=float(tp.sum() / instances.sum()),
        micro_precision=float(tp.sum() / predicted.sum()),
    )


def _align_labels(pred, train: LabeledDataset, full: LabeledDataset) -> np.ndarray:
    """Map training labels to full-data labels holding the same stress rank."""
    rank = {lab: r for r, lab in enumerate(train.stress_ranking)}
    top = full.n_classes - 1
    return np.array([full.stress_ranking[min(rank[int(p)], top)] for p in pred])


def _run_window(args) -> WindowRecord:
    series, adjusted, full, window, index, pcfg, ecfg = args
    first, last = window
    rows = np.r_[0:first - 1, last:series.T]
    test = np.arange(first - 1, last)
    train = series.take(rows)
    if ecfg.pam_training_only:
        adj_all = adjust_stress(series, build_partition(series, rows), pcfg.pam_cells)
    else:
        adj_all = adjusted
    adj_train = AdjustedSeries(adj_all.values[rows], adj_all.adjustment[rows])
    truth = true_labels(Segmentation(series.T, full.boundaries), window)
    result = run_pipeline(train, pcfg, adjusted=adj_train)
    record = WindowRecord(window, not result.halted, result.trace.halt_step,
                          result.segmentation.n_segments, true_labels=truth.tolist())
    if result.halted:
        return record
    labeled = result.labeled
    record.label_mismatch = labeled.n_classes != full.labeled.n_classes
    X_train, X_test = train.passive, series.passive[test]
    seed = int(np.random.SeedSequence([ecfg.seed, index]).generate_state(1)[0])
    fitters = {
        "Reg": lambda: fit_logistic(X_train, labeled.labels, l2=ecfg.logistic_l2,
                                    max_iter=ecfg.logistic_max_iter, tol=ecfg.logistic_tol),
        "LDA": lambda: fit_lda(X_train, labeled.labels),
        "RF": lambda: fit_random_forest(X_train, labeled.labels, n_trees=ecfg.rf_n_trees,
                                        mtry=ecfg.rf_mtry, min_leaf=ecfg.rf_min_leaf, seed=seed),
    }
    for method in ecfg.methods:
        if method in fitters:
            pred, _ = predict(fitters[method](), X_test)
            if record.label_mismatch:
                pred = _align_labels(pred, labeled, full.labeled)
            record.predictions[method] = [int(v) for v in pred]
    if {"Resp", "Pred"} & set(ecfg.methods):
        means = full.labeled.segment_means
        centers = fit_response_centers(adj_train.values, len(means))
        if "Resp" in ecfg.methods:
            record.predictions["Resp"] = label_by_centers(
                adj_all.values[test], centers, means).tolist()
        if "Pred" in ecfg.methods:
            record.predictions["Pred"] = pred_baseline(
                X_train, adj_train.values, X_test, centers, means).tolist()
    return record


@dataclass(frozen=True)
class _Full:
    boundaries: tuple[int, ...]
    labeled: LabeledDataset


def run_rolling_experiment(series: SubjectSeries, pipeline_config: PipelineConfig | None = None,
                           config: ExperimentConfig | None = None, *, workers: int = 1
                           ) -> ExperimentReport:
    """Hold out each window in turn until ``max_successes`` windows succeed.

    With ``workers > 1`` windows run in separate processes; the report is
    identical to the serial one because records are kept in window order and
    truncated at the same success.
    """
    pcfg = pipeline_config or PipelineConfig()
    ecfg = config or ExperimentConfig()
    adjusted = compute_adjusted(series, pcfg)
    full_result = run_pipeline(series, pcfg, adjusted=adjusted)
    if full_result.halted:
        raise PipelineHalted(full_result.trace.halt_step, full_result.trace.halt_reason)
    full = _Full(full_result.segmentation.boundaries, full_result.labeled)
    windows = enumerate_windows(series.T, ecfg)
    skipped = [w for w in windows if contains_boundary(w, full.boundaries)]
    todo = [w for w in windows if not contains_boundary(w, full.boundaries)]
    jobs = ((series, adjusted, full, w, i, pcfg, ecfg) for i, w in enumerate(todo))

    records: list[WindowRecord] = []

    def consume(results) -> bool:
        successes = 0
        for rec in results:
            records.append(rec)
            successes += rec.success
            if successes >= ecfg.max_successes:
                return True
        return False

    if workers > 1:
        pool = ProcessPoolExecutor(max_workers=workers)
        try:
            stopped = consume(pool.map(_run_window, jobs))
        finally:
            pool.shutdown(wait=True, cancel_futures=True)
    else:
        stopped = consume(map(_run_window, jobs))

    if stopped:
        skipped = [w for w in skipped if w < records[-1].window]
    K = full.labeled.n_classes
    confusion = {m: np.zeros((K, K), dtype=np.int64) for m in ecfg.methods}
    for rec in records:
        if not rec.success:
            continue
        for m in ecfg.methods:
            for t, p in zip(rec.true_labels, rec.predictions[m]):
                confusion[m][t - 1, p - 1] += 1
    scored, notes = {}, {}
    for m, c in confusion.items():
        if c.sum():
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                scored[m] = metrics(c)
            notes[m] = [str(w.message) for w in caught]
    return ExperimentReport(K, full.boundaries, records, skipped, confusion, scored, notes)
