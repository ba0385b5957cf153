"""Flat run configuration shared by the CLI subcommands.

Every key has a default; unknown keys are rejected so typos fail loudly.
Input and output paths are command-line arguments and never part of the
configuration, which keeps reports independent of where files live.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields

from .edivisive import DivergenceConfig
from .evaluation import METHODS, ExperimentConfig
from .pipeline import DEFAULT_PAM_CELLS, PipelineConfig


@dataclass(frozen=True)
class RunConfig:
    # change-point detection
    alpha: float = 1.0
    min_size: int = 30
    num_permutations: int = 499
    p0: float = 0.05
    seed: int = 0
    divergence_prefactor: str = "pairwise"
    # merge steps
    alpha_assoc: float = 0.05
    alpha_chow: float = 0.05
    alpha_resp: float = 0.05
    step3_fixpoint: bool = False
    step4_fixpoint: bool = False
    # stress adjustment: neither, arousal only, valence only, both beyond sub-divider
    pam_cells: tuple[float, float, float, float] = DEFAULT_PAM_CELLS
    pam_training_only: bool = False
    # rolling experiment
    window_len: int = 5
    start_t: int = 6
    step: int = 5
    max_successes: int = 50
    methods: tuple[str, ...] = METHODS
    # ingestion
    impute_radius: int = 3
    # classifiers
    logistic_l2: float = 1e-4
    logistic_max_iter: int = 1000
    logistic_tol: float = 1e-6
    rf_n_trees: int = 200
    rf_mtry: int | None = None
    rf_min_leaf: int = 2

    def __post_init__(self):
        object.__setattr__(self, "pam_cells", tuple(float(x) for x in self.pam_cells))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.impute_radius < 0:
            raise ValueError("impute_radius must be non-negative")
        # build the component configs once so invalid values fail here
        self.pipeline_config()
        self.experiment_config()

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {unknown}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("config file must hold a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pam_cells"] = list(self.pam_cells)
        d["methods"] = list(self.methods)
        return d

    def divergence_config(self) -> DivergenceConfig:
        return DivergenceConfig(
            alpha=self.alpha, min_size=self.min_size, num_permutations=self.num_permutations,
            p0=self.p0, seed=self.seed, prefactor=self.divergence_prefactor,
        )

    def pipeline_config(self) -> PipelineConfig:
        return PipelineConfig(
            divergence=self.divergence_config(),
            alpha_assoc=self.alpha_assoc, alpha_chow=self.alpha_chow,
            alpha_resp=self.alpha_resp, step3_fixpoint=self.step3_fixpoint,
            step4_fixpoint=self.step4_fixpoint, pam_cells=self.pam_cells,
        )

    def experiment_config(self) -> ExperimentConfig:
        return ExperimentConfig(
            window_len=self.window_len, start_t=self.start_t, step=self.step,
            max_successes=self.max_successes, methods=self.methods, seed=self.seed,
            pam_training_only=self.pam_training_only, logistic_l2=self.logistic_l2,
            logistic_max_iter=self.logistic_max_iter, logistic_tol=self.logistic_tol,
            rf_n_trees=self.rf_n_trees, rf_mtry=self.rf_mtry, rf_min_leaf=self.rf_min_leaf,
        )
