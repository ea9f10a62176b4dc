"""Feature ranking and condition prediction for 6-DoF optical head-tracker data."""
__version__ = "0.1.0"

from .dataset import (BOTH_TARGETS, FEATURE_NAMES, Dataset, Target, TrackingRecord, clean,
                      extract, ingest, rotation_matrix, synthesize, table2_dataset, write_csv)
from .evaluation import EvaluationReport, accuracy, kfold, run_cv, run_grid, split
from .models import (MultinomialLogisticRegression, NeuralNetClassifier,
                     RandomForestClassifier, SMOClassifier, load_model, make_model, save_model)
from .sade import SadeConfig, SadeFeatureRanker, objective_eq1, rank_features, run_sade

__all__ = [
    "BOTH_TARGETS", "FEATURE_NAMES", "Dataset", "EvaluationReport", "MultinomialLogisticRegression",
    "NeuralNetClassifier", "RandomForestClassifier", "SMOClassifier", "SadeConfig",
    "SadeFeatureRanker", "Target", "TrackingRecord", "accuracy", "clean", "extract", "ingest",
    "kfold", "load_model", "make_model", "objective_eq1", "rank_features", "rotation_matrix",
    "run_cv", "run_grid", "run_sade", "save_model", "split", "synthesize", "table2_dataset", "write_csv",
]
