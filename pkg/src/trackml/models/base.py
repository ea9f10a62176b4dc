"""Shared pieces of the four classifiers: validation, fallbacks and persistence."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

FORMAT_NAME = "trackml-model"
FORMAT_VERSION = 1


def gini(counts) -> float:
    """Gini impurity ``1 - sum(p_k ** 2)`` of a vector of class counts."""
    counts = np.asarray(counts, dtype=float)
    if np.any(counts < 0):
        raise ValueError("class counts must be non-negative")
    total = counts.sum()
    if total <= 0:
        raise ValueError("gini of an empty node is undefined")
    p = counts / total
    return float(1.0 - np.sum(p * p))


class TrackClassifier(ClassifierMixin, BaseEstimator):
    """Common fit/predict plumbing.

    Subclasses implement ``_fit(X, y_index)`` on class indices and
    ``_decide(X)`` returning class indices, plus ``_get_state`` /
    ``_set_state`` for persistence.
    """

    kind = None

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        classes, y_index = np.unique(y, return_inverse=True)
        if len(classes) < 2:
            raise ValueError("training data must contain at least two classes")
        self.classes_ = classes
        self.n_features_in_ = X.shape[1]
        self._fit(X, y_index)
        return self

    def predict(self, X):
        check_is_fitted(self, "classes_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return self.classes_[self._decide(X)]

    def _fit(self, X, y_index):
        raise NotImplementedError

    def _decide(self, X):
        raise NotImplementedError

    def _get_state(self) -> dict:
        raise NotImplementedError

    def _set_state(self, state: dict) -> None:
        raise NotImplementedError


def majority_index(y_index, n_classes: int) -> int:
    """Most frequent class index; ties go to the lowest index."""
    return int(np.argmax(np.bincount(y_index, minlength=n_classes)))


class MajorityClassifier(TrackClassifier):
    """Always predicts the most frequent training class."""

    kind = "majority"

    def _fit(self, X, y_index):
        self.majority_ = majority_index(y_index, len(self.classes_))

    def _decide(self, X):
        return np.full(X.shape[0], self.majority_, dtype=int)

    def _get_state(self):
        return {"majority": self.majority_}

    def _set_state(self, state):
        self.majority_ = int(state["majority"])


def standardize_fit(X):
    """Column means and scales; constant columns get scale 1."""
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    return mean, scale


def _to_jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, dict):
        return {k: _to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_jsonable(v) for v in value]
    return value


def save_model(model: TrackClassifier, path) -> None:
    """Write a fitted model as versioned JSON."""
    check_is_fitted(model, "classes_")
    payload = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": model.kind,
        "params": _to_jsonable(model.get_params()),
        "classes": model.classes_.tolist(),
        "n_features": int(model.n_features_in_),
        "state": _to_jsonable(model._get_state()),
    }
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path) -> TrackClassifier:
    from . import MODEL_KINDS

    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != FORMAT_NAME:
        raise ValueError(f"{path} is not a saved model")
    if payload.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model file version {payload.get('version')}")
    registry = dict(MODEL_KINDS, majority=MajorityClassifier)
    cls = registry[payload["kind"]]
    params = payload["params"]
    model = cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in params.items()})
    model.classes_ = np.asarray(payload["classes"])
    model.n_features_in_ = int(payload["n_features"])
    model._set_state(payload["state"])
    return model
