"""Ultra marginal feature importance (UMFI) and marginal contribution feature importance (MCI)."""

from .core import Dataset, FeatureSubset, ImportanceReport, Method, SeedSpec, TaskKind, load_csv, subset_matrix
from .forest import EvaluationFunction, ForestConfig, fit_forest, oob_score
from .importance import MciConfig, MciMode, UmfiConfig, mci, training_count_audit, umfi
from .removal import BackendKind, RemovalBackend, build_s_star, lr_remove, ot_remove

__all__ = [
    "BackendKind", "Dataset", "EvaluationFunction", "FeatureSubset", "ForestConfig",
    "ImportanceReport", "MciConfig", "MciMode", "Method", "RemovalBackend", "SeedSpec",
    "TaskKind", "UmfiConfig", "build_s_star", "fit_forest", "load_csv", "lr_remove",
    "mci", "oob_score", "ot_remove", "subset_matrix", "training_count_audit", "umfi",
]
