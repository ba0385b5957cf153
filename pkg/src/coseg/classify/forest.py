"""Random forest of Gini CART trees.

Each tree sees a bootstrap resample and, at every node, a random subset of
``mtry`` features. Tree ``b`` draws from ``SeedSequence([seed, b])``, so trees
can be grown in any order with identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .._backend import kernels
from .base import ClassifierModel, require_classes, training_arrays


@dataclass
class _Tree:
    feature: list
    threshold: list
    left: list
    right: list
    counts: list

    def add(self, counts) -> int:
        self.feature.append(-1)
        self.threshold.append(math.nan)
        self.left.append(-1)
        self.right.append(-1)
        self.counts.append(counts)
        return len(self.feature) - 1

    def arrays(self) -> dict:
        return {
            "feature": np.array(self.feature, dtype=np.int64),
            "threshold": np.array(self.threshold, dtype=float),
            "left": np.array(self.left, dtype=np.int64),
            "right": np.array(self.right, dtype=np.int64),
            "counts": np.array(self.counts, dtype=float),
        }


def grow_tree(X, y_idx, rows, n_classes, mtry, min_leaf, rng) -> dict:
    """Split every impure node that admits a split with ``min_leaf`` rows per side."""
    tree = _Tree([], [], [], [], [])
    root = tree.add(np.bincount(y_idx[rows], minlength=n_classes))
    stack = [(root, rows)]
    p = X.shape[1]
    while stack:
        node, idx = stack.pop()
        counts = tree.counts[node]
        if np.count_nonzero(counts) < 2 or len(idx) < 2 * min_leaf:
            continue
        features = np.sort(rng.choice(p, size=mtry, replace=False)).astype(np.int64)
        f, thr, _ = kernels.gini_best_split(X, y_idx, idx, features, n_classes, min_leaf)
        if f < 0:
            continue
        go_left = X[idx, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        tree.feature[node] = int(f)
        tree.threshold[node] = float(thr)
        tree.left[node] = tree.add(np.bincount(y_idx[li], minlength=n_classes))
        tree.right[node] = tree.add(np.bincount(y_idx[ri], minlength=n_classes))
        stack.append((tree.right[node], ri))
        stack.append((tree.left[node], li))
    return tree.arrays()


def tree_leaves(tree: dict, X: np.ndarray) -> np.ndarray:
    node = np.zeros(len(X), dtype=np.int64)
    active = tree["feature"][node] >= 0
    while active.any():
        cur = node[active]
        f = tree["feature"][cur]
        go_left = X[np.flatnonzero(active), f] <= tree["threshold"][cur]
        node[active] = np.where(go_left, tree["left"][cur], tree["right"][cur])
        active = tree["feature"][node] >= 0
    return node


def _tree_votes(tree: dict, X: np.ndarray) -> np.ndarray:
    # argmax picks the first maximum, i.e. the smaller label on ties
    return np.argmax(tree["counts"][tree_leaves(tree, X)], axis=1)


def fit_random_forest(data, y=None, *, n_trees: int = 200, mtry: int | None = None,
                      min_leaf: int = 2, seed: int = 0, bootstrap: bool = True
                      ) -> ClassifierModel:
    X, y = training_arrays(data, y)
    classes = require_classes(y)
    y_idx = np.searchsorted(classes, y).astype(np.int64)
    n, p = X.shape
    mtry = math.ceil(math.sqrt(p)) if mtry is None else int(mtry)
    if not 1 <= mtry <= p:
        raise ValueError(f"mtry must lie in 1..{p}, got {mtry}")
    if n_trees < 1 or min_leaf < 1:
        raise ValueError("n_trees and min_leaf must be positive")
    K = classes.size
    trees = []
    oob_votes = np.zeros((n, K))
    for b in range(n_trees):
        rng = np.random.default_rng(np.random.SeedSequence([seed, b]))
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        rows = np.sort(rows).astype(np.int64)
        tree = grow_tree(X, y_idx, rows, K, mtry, min_leaf, rng)
        trees.append(tree)
        if bootstrap:
            oob = np.setdiff1d(np.arange(n), rows)
            if oob.size:
                oob_votes[oob, _tree_votes(tree, X[oob])] += 1
    voted = oob_votes.sum(axis=1) > 0
    oob_error = (float(np.mean(np.argmax(oob_votes[voted], axis=1) != y_idx[voted]))
                 if voted.any() else math.nan)
    return ClassifierModel(
        kind="random_forest",
        classes=tuple(int(c) for c in classes),
        n_features=p,
        params={"trees": trees},
        hyper={"n_trees": n_trees, "mtry": mtry, "min_leaf": min_leaf, "seed": seed,
               "bootstrap": bootstrap, "oob_error": oob_error},
    )


def scores(model: ClassifierModel, X: np.ndarray) -> np.ndarray:
    """Fraction of trees voting for each class."""
    K = len(model.classes)
    votes = np.zeros((len(X), K))
    rows = np.arange(len(X))
    for tree in model.params["trees"]:
        votes[rows, _tree_votes(tree, X)] += 1
    return votes / len(model.params["trees"])
