from fractions import Fraction

import numpy as np
import pytest

from coseg.edivisive import DivergenceConfig
from coseg.evaluation import (
    ExperimentConfig,
    contains_boundary,
    enumerate_windows,
    label_by_centers,
    metrics,
    pred_baseline,
    resp_baseline,
    run_rolling_experiment,
    true_labels,
)
from coseg.model import Segmentation
from coseg.pipeline import PipelineConfig, PipelineHalted
from coseg.synth import generate, null_scenario, three_regime_scenario
from oracles import nearest_label_oracle

FAST = PipelineConfig(divergence=DivergenceConfig(num_permutations=99))


def test_true_labels_around_boundaries():
    full = Segmentation(150, (50, 112))
    assert true_labels(full, (46, 50)).tolist() == [1] * 5
    assert true_labels(full, (51, 55)).tolist() == [2] * 5
    assert true_labels(full, (113, 117)).tolist() == [3] * 5
    with pytest.raises(ValueError):
        true_labels(full, (110, 114))
    with pytest.raises(IndexError):
        true_labels(full, (148, 152))


def test_window_enumeration_and_skip_rule():
    cfg = ExperimentConfig()
    assert enumerate_windows(30, cfg) == [(6, 10), (11, 15), (16, 20), (21, 25), (26, 30)]
    assert enumerate_windows(29, cfg)[-1] == (21, 25)
    assert contains_boundary((46, 50), [50])
    assert contains_boundary((50, 54), [50])
    assert not contains_boundary((51, 55), [50])


def test_metrics_hand_computed():
    m = metrics([[3, 1], [2, 4]])
    f = Fraction
    rec = (f(3, 4), f(4, 6))
    prec = (f(3, 5), f(4, 5))
    f1 = tuple(2 * r * p / (r + p) for r, p in zip(rec, prec))
    assert m.recall_per_class == pytest.approx([float(x) for x in rec], abs=1e-15)
    assert m.precision_per_class == pytest.approx([float(x) for x in prec], abs=1e-15)
    assert m.f1_per_class == pytest.approx([float(x) for x in f1], abs=1e-15)
    assert m.recall == pytest.approx(float(sum(rec) / 2), abs=1e-15)
    assert m.precision == pytest.approx(float(sum(prec) / 2), abs=1e-15)
    assert m.accuracy == 0.7 == m.micro_recall == m.micro_precision


def test_metrics_degenerate():
    with pytest.warns(UserWarning) as caught:
        m = metrics([[2, 0], [1, 0]])
    messages = [str(w.message) for w in caught]
    assert any("precision of class 2" in t for t in messages)
    assert any("F1 of class 2" in t for t in messages)
    assert m.precision_per_class[1] == 0.0 and m.f1_per_class[1] == 0.0
    with pytest.raises(ValueError):
        metrics(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        metrics([[1, 2, 3]])


def test_label_by_centers_matches_oracle(rng):
    means = (4.0, 1.0, 2.5)
    centers = np.array([1.0, 2.5, 4.0])
    values = rng.uniform(0, 6, 200)
    values[:3] = [1.75, 3.25, 2.5]  # two exact ties and one exact hit
    got = label_by_centers(values, centers, means)
    # centers ascending pair with segments ordered by increasing mean: 2, 3, 1
    assert got.tolist() == nearest_label_oracle(values, centers, [2, 3, 1])
    assert got[:3].tolist() == [2, 3, 3]


def test_resp_baseline_clusters_training_values():
    train = np.r_[np.full(10, 1.0), np.full(10, 5.0)]
    assert resp_baseline(train, [0.5, 4.0, 3.0], (5.2, 0.9)).tolist() == [2, 1, 2]


def test_pred_baseline_uses_fitted_regression():
    X = np.arange(20.0)[:, None]
    y = 0.5 * X[:, 0]
    pred = pred_baseline(X, y, np.array([[1.0], [19.0]]), np.array([0.0, 10.0]), (3.0, 0.0))
    assert pred.tolist() == [2, 1]


def test_experiment_accounting():
    s, _ = generate(three_regime_scenario(seed=1))
    cfg = ExperimentConfig(max_successes=6, rf_n_trees=20)
    rep = run_rolling_experiment(s, FAST, cfg)
    assert rep.n_successes == 6
    assert rep.n_trials == cfg.window_len * rep.n_successes
    for m, C in rep.confusion.items():
        assert C.sum() == rep.n_trials
        assert rep.metrics[m].accuracy == rep.metrics[m].micro_recall
    windows = [r.window for r in rep.records]
    assert windows == sorted(windows)
    assert not any(contains_boundary(w, rep.full_boundaries) for w in windows)
    assert all(w < windows[-1] for w in rep.skipped_windows)
    d = rep.to_dict()
    assert d["n_trials"] == rep.n_trials and set(d["metrics"]) == set(cfg.methods)


def test_experiment_training_only_partition_and_parallel_equal():
    s, _ = generate(three_regime_scenario(seed=1))
    cfg = ExperimentConfig(max_successes=3, rf_n_trees=10, pam_training_only=True,
                           methods=("LDA", "Resp"))
    a = run_rolling_experiment(s, FAST, cfg)
    b = run_rolling_experiment(s, FAST, cfg, workers=2)
    assert a.to_dict() == b.to_dict()
    assert set(a.confusion) == {"LDA", "Resp"}


def test_experiment_requires_full_segmentation():
    s, _ = generate(null_scenario(seed=0))
    with pytest.raises(PipelineHalted):
        run_rolling_experiment(s, FAST)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(methods=("SVM",))
    with pytest.raises(ValueError):
        ExperimentConfig(window_len=0)
