"""Step 5 classifiers and the 1-D k-means used by the response-only baseline."""

from .base import KINDS, ClassifierModel, predict
from .forest import fit_random_forest
from .kmeans import KMeansResult, kmeans, nearest_center
from .lda import fit_lda
from .logistic import fit_logistic, loss_and_grad

__all__ = [
    "KINDS",
    "ClassifierModel",
    "KMeansResult",
    "fit_lda",
    "fit_logistic",
    "fit_random_forest",
    "kmeans",
    "loss_and_grad",
    "nearest_center",
    "predict",
]
