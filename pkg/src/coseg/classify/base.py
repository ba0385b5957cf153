"""Shared model container, prediction entry point and JSON round trip."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

KINDS = ("logistic", "lda", "random_forest")


@dataclass(frozen=True, eq=False)
class ClassifierModel:
    """A fitted classifier.

    ``params`` holds kind-specific arrays (or, for forests, a list of trees
    made of arrays); ``hyper`` holds the settings used to fit it.
    """

    kind: str
    classes: tuple[int, ...]
    n_features: int
    params: dict
    hyper: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "classes": list(self.classes),
            "n_features": self.n_features,
            "params": _to_json(self.params),
            "hyper": dict(self.hyper),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClassifierModel":
        return cls(d["kind"], tuple(d["classes"]), int(d["n_features"]),
                   _from_json(d["params"]), dict(d.get("hyper", {})))


def _to_json(obj):
    if isinstance(obj, np.ndarray):
        return {"__array__": obj.tolist(), "dtype": str(obj.dtype)}
    if isinstance(obj, dict):
        return {k: _to_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_json(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _from_json(obj):
    if isinstance(obj, dict):
        if "__array__" in obj:
            return np.array(obj["__array__"], dtype=obj["dtype"])
        return {k: _from_json(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_from_json(v) for v in obj]
    return obj


def training_arrays(data, y=None) -> tuple[np.ndarray, np.ndarray]:
    """Accept a LabeledDataset or an explicit ``(X, y)`` pair."""
    if y is None:
        X, y = data.passive, data.labels
    else:
        X = data
    X = np.asarray(X, dtype=float)
    X = X[:, None] if X.ndim == 1 else X
    y = np.asarray(y)
    if y.shape != (X.shape[0],):
        raise ValueError(f"{X.shape[0]} rows but {y.shape} labels")
    if not np.isfinite(X).all():
        raise ValueError("features must be finite")
    return np.ascontiguousarray(X), y.astype(np.int64)


def require_classes(y: np.ndarray) -> np.ndarray:
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError(f"need at least 2 classes, got {classes.tolist()}")
    return classes


def predict(model: ClassifierModel, X) -> tuple[np.ndarray, np.ndarray]:
    """Labels and per-class scores; ties go to the smaller label."""
    from . import forest, lda, logistic

    X = np.asarray(X, dtype=float)
    X = X[:, None] if X.ndim == 1 else X
    if X.shape[1] != model.n_features:
        raise ValueError(f"model expects {model.n_features} features, got {X.shape[1]}")
    scorer = {"logistic": logistic.scores, "lda": lda.scores,
              "random_forest": forest.scores}[model.kind]
    S = scorer(model, np.ascontiguousarray(X))
    return np.asarray(model.classes)[np.argmax(S, axis=1)], S
