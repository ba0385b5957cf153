import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coseg.classify import (
    ClassifierModel,
    fit_lda,
    fit_logistic,
    fit_random_forest,
    kmeans,
    nearest_center,
    predict,
)
from coseg.classify.logistic import loss_and_grad
from oracles import dp_kmeans_1d


def blobs(rng, centers, n_each, spread=0.3):
    X = np.vstack([rng.normal(c, spread, (n_each, len(c))) for c in centers])
    y = np.repeat(np.arange(1, len(centers) + 1), n_each)
    return X, y


def xor(rng, n_each=50):
    corners = [(-1, -1), (1, 1), (-1, 1), (1, -1)]
    X = np.vstack([rng.normal(c, 0.15, (n_each, 2)) for c in corners])
    y = np.repeat([1, 1, 2, 2], n_each)
    return X, y


@pytest.mark.parametrize("fit", [fit_logistic, fit_lda, fit_random_forest])
def test_separable_blobs_perfect(rng, fit):
    X, y = blobs(rng, [(0, 0), (5, 5)], 40)
    assert np.mean(predict(fit(X, y), X)[0] == y) == 1.0


def test_logistic_gradient_matches_finite_differences(rng):
    A = np.hstack([np.ones((20, 1)), rng.standard_normal((20, 3))])
    y = rng.integers(0, 3, 20)
    W = rng.standard_normal((2, 4))
    _, grad = loss_and_grad(W, A, y, 0.3)
    h = 1e-6
    num = np.zeros_like(W)
    for idx in np.ndindex(W.shape):
        Wp, Wm = W.copy(), W.copy()
        Wp[idx] += h
        Wm[idx] -= h
        num[idx] = (loss_and_grad(Wp, A, y, 0.3)[0] - loss_and_grad(Wm, A, y, 0.3)[0]) / (2 * h)
    assert np.allclose(grad, num, rtol=1e-6, atol=1e-8)


def test_logistic_shapes_and_convergence(rng):
    X, y = blobs(rng, [(0, 0, 0), (3, 0, 0), (0, 3, 0)], 30, spread=1.0)
    model = fit_logistic(X, y)
    assert model.params["weights"].shape == (2, 4)
    assert model.hyper["grad_norm"] <= 1e-6
    S = predict(model, X)[1]
    assert np.allclose(S.sum(axis=1), 1.0)


def test_lda_symmetric_boundary(rng):
    X = np.r_[rng.normal(-3, 1, 100), rng.normal(3, 1, 100)][:, None]
    y = np.repeat([1, 2], 100)
    model = fit_lda(X, y)
    grid = np.linspace(-2, 2, 4001)[:, None]
    labels = predict(model, grid)[0]
    crossing = grid[np.argmax(labels == 2), 0]
    assert abs(crossing) <= 0.2


def test_lda_invariant_to_duplicated_rows(rng):
    X, y = blobs(rng, [(0, 0), (2, 1), (1, 3)], 20, spread=1.0)
    a, b = fit_lda(X, y), fit_lda(np.vstack([X, X]), np.r_[y, y])
    for key in ("means", "coef", "const", "priors"):
        assert np.allclose(a.params[key], b.params[key], rtol=1e-12, atol=1e-12)


def test_lda_three_classes(rng):
    X, y = blobs(rng, [(0, 0), (4, 0), (0, 4)], 60, spread=0.8)
    assert np.mean(predict(fit_lda(X, y), X)[0] == y) >= 0.95


def test_lda_excludes_singleton_class(rng):
    X, y = blobs(rng, [(0, 0), (4, 4)], 10)
    X = np.vstack([X, [[9, 9]]])
    y = np.r_[y, 3]
    with pytest.warns(UserWarning, match="fewer than 2"):
        model = fit_lda(X, y)
    assert model.classes == (1, 2)


def test_xor_needs_nonlinear_model(rng):
    X, y = xor(rng)
    Xt, yt = xor(np.random.default_rng(99))
    rf = fit_random_forest(X, y, n_trees=100, seed=1)
    assert np.mean(predict(rf, Xt)[0] == yt) >= 0.95
    assert np.mean(predict(fit_logistic(X, y), Xt)[0] == yt) <= 0.7


def test_single_full_tree_memorises(rng):
    X = rng.standard_normal((60, 3))
    y = rng.integers(1, 4, 60)
    rf = fit_random_forest(X, y, n_trees=1, mtry=3, min_leaf=1, bootstrap=False)
    assert np.mean(predict(rf, X)[0] == y) == 1.0


def test_forest_seed_determinism_and_oob(rng):
    X, y = blobs(rng, [(0, 0), (1.5, 1.5)], 40, spread=1.0)
    a = fit_random_forest(X, y, n_trees=30, seed=4)
    b = fit_random_forest(X, y, n_trees=30, seed=4)
    c = fit_random_forest(X, y, n_trees=30, seed=5)
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())
    assert json.dumps(a.to_dict()) != json.dumps(c.to_dict())
    assert 0.0 <= a.hyper["oob_error"] <= 0.5
    assert a.hyper["mtry"] == 2


@pytest.mark.parametrize("fit", [fit_logistic, fit_lda, fit_random_forest])
def test_json_round_trip(rng, fit):
    X, y = blobs(rng, [(0, 0), (2, 2), (4, 0)], 15, spread=1.0)
    model = fit(X, y)
    back = ClassifierModel.from_dict(json.loads(json.dumps(model.to_dict())))
    Xt = rng.standard_normal((25, 2)) * 3
    assert np.array_equal(predict(model, Xt)[1], predict(back, Xt)[1])


def test_predict_validates_dimensions(rng):
    X, y = blobs(rng, [(0, 0), (3, 3)], 10)
    with pytest.raises(ValueError):
        predict(fit_lda(X, y), np.zeros((2, 3)))
    with pytest.raises(ValueError):
        fit_logistic(X, np.ones(20, int))


def test_kmeans_examples():
    res = kmeans([1, 1, 2, 10, 11, 12], 2)
    assert np.allclose(res.centers, [4 / 3, 11])
    assert res.assignment.tolist() == [0, 0, 0, 1, 1, 1]
    assert nearest_center([1.5], [1.0, 2.0]).tolist() == [0]
    with pytest.raises(ValueError):
        kmeans([1, 1, 1], 2)


def test_kmeans_matches_exact_optimum(rng):
    for k in (2, 3, 4):
        values = np.concatenate([rng.normal(10 * j, 1, 25) for j in range(k)])
        res = kmeans(values, k)
        assert res.objective == pytest.approx(dp_kmeans_1d(values, k), abs=1e-9)
        assert np.all(np.diff(res.centers) > 0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-50, 50, allow_nan=False), min_size=4, max_size=40),
       st.integers(1, 4))
def test_kmeans_objective_non_increasing(values, k):
    if np.unique(values).size < k:
        return
    res = kmeans(values, k)
    h = np.array(res.objective_history)
    assert np.all(np.diff(h) <= 1e-9 * max(1.0, h[0]))
    assert res.objective >= dp_kmeans_1d(values, k) - 1e-9 * max(1.0, h[0])
