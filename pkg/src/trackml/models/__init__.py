"""The four condition classifiers behind a common fit/predict interface."""
from .base import MajorityClassifier, TrackClassifier, gini, load_model, save_model
from .forest import RandomForestClassifier
from .linear import MultinomialLogisticRegression
from .neural import NeuralNetClassifier
from .svm import SMOClassifier

MODEL_KINDS = {
    "rforest": RandomForestClassifier,
    "lm": MultinomialLogisticRegression,
    "svm": SMOClassifier,
    "nn": NeuralNetClassifier,
}

DISPLAY_NAMES = {
    "rforest": "R Forest",
    "lm": "Linear Model",
    "svm": "SVM",
    "nn": "NN",
    "majority": "Majority",
}


def make_model(kind: str, **params) -> TrackClassifier:
    """Build a classifier by short name with its default settings overridden by ``params``."""
    try:
        cls = MODEL_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown model kind {kind!r}; choose from {sorted(MODEL_KINDS)}") from None
    return cls(**params)


__all__ = [
    "DISPLAY_NAMES", "MODEL_KINDS", "MajorityClassifier", "MultinomialLogisticRegression",
    "NeuralNetClassifier", "RandomForestClassifier", "SMOClassifier", "TrackClassifier",
    "gini", "load_model", "make_model", "save_model",
]
