"""Time series classification with Gaussian mixtures of reconstructed phase spaces."""

from .classifier import (
    ClassifierBundle,
    GridSearchResult,
    classify,
    grid_search,
    sequence_log_likelihood,
    train,
)
from .data import Dataset, LakeClass, TimeSeries, load_dataset, write_dataset
from .embedding import EmbeddingParams, PhaseSpace, embed
from .gmm import FitConfig, GmmModel, fit_em
from .metrics import EvalReport, evaluate
from .persist import load_bundle, save_bundle
from .synthetic import SyntheticSpec, generate_synthetic

__version__ = "0.1.0"

__all__ = [
    "ClassifierBundle",
    "Dataset",
    "EmbeddingParams",
    "EvalReport",
    "FitConfig",
    "GmmModel",
    "GridSearchResult",
    "LakeClass",
    "PhaseSpace",
    "SyntheticSpec",
    "TimeSeries",
    "classify",
    "embed",
    "evaluate",
    "fit_em",
    "generate_synthetic",
    "grid_search",
    "load_bundle",
    "load_dataset",
    "save_bundle",
    "sequence_log_likelihood",
    "train",
    "write_dataset",
]
