"""Co-segmentation of passive sensing series against self-reported stress.

The main entry points are :func:`run_pipeline` (segment and label one
subject) and :func:`run_rolling_experiment` (hold-out evaluation).
"""

from ._backend import BACKEND
from .edivisive import DivergenceConfig, detect_change_points
from .evaluation import ExperimentConfig, run_rolling_experiment
from .model import DataError, Segmentation, SubjectSeries, validate_dataset
from .pipeline import PipelineConfig, PipelineHalted, run_pipeline

__all__ = [
    "BACKEND",
    "DataError",
    "DivergenceConfig",
    "ExperimentConfig",
    "PipelineConfig",
    "PipelineHalted",
    "Segmentation",
    "SubjectSeries",
    "detect_change_points",
    "run_pipeline",
    "run_rolling_experiment",
    "validate_dataset",
]
