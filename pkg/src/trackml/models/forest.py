"""Random forest of CART trees grown on Gini impurity."""
from __future__ import annotations

import numpy as np
from joblib import Parallel, delayed

from .base import TrackClassifier, majority_index

LEAF = -1


def _best_split(X, y, n_classes, features, min_leaf):
    """Lowest weighted-Gini threshold split over ``features``.

    Returns ``(feature, threshold)`` or ``None`` if no feature can be split.
    """
    n = len(y)
    onehot = np.eye(n_classes)[y]
    total = onehot.sum(axis=0)
    n_left = np.arange(1, n, dtype=float)[:, None]
    n_right = n - n_left
    best_score, best = np.inf, None
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        left = np.cumsum(onehot[order], axis=0)[:-1]
        right = total - left
        gini_left = 1.0 - np.sum((left / n_left) ** 2, axis=1)
        gini_right = 1.0 - np.sum((right / n_right) ** 2, axis=1)
        score = (n_left[:, 0] * gini_left + n_right[:, 0] * gini_right) / n
        valid = xs[1:] > xs[:-1]
        if min_leaf > 1:
            pos = np.arange(1, n)
            valid &= (pos >= min_leaf) & (n - pos >= min_leaf)
        if not valid.any():
            continue
        score = np.where(valid, score, np.inf)
        i = int(np.argmin(score))
        if score[i] < best_score:
            threshold = 0.5 * (xs[i] + xs[i + 1])
            if not xs[i] <= threshold < xs[i + 1]:
                threshold = xs[i]
            best_score, best = score[i], (int(f), float(threshold))
    return best


def build_tree(X, y, n_classes, max_features, rng, max_depth=None, min_leaf=1):
    """Grow one tree; returns parallel node arrays.

    A node is a leaf when ``feature == -1``; ``value`` holds its class index.
    Samples with ``x[feature] <= threshold`` go left.
    """
    n_features = X.shape[1]
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node():
        for arr, default in ((feature, LEAF), (threshold, 0.0), (left, LEAF),
                             (right, LEAF), (value, 0)):
            arr.append(default)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        y_node = y[idx]
        value[node] = majority_index(y_node, n_classes)
        if (np.all(y_node == y_node[0]) or len(idx) < 2 * min_leaf
                or (max_depth is not None and depth >= max_depth)):
            continue
        candidates = rng.permutation(n_features)
        split = _best_split(X[idx], y_node, n_classes, candidates[:max_features], min_leaf)
        if split is None and max_features < n_features:
            # Keep searching past mtry when no sampled feature separates the node.
            split = _best_split(X[idx], y_node, n_classes, candidates[max_features:], min_leaf)
        if split is None:
            continue
        f, thr = split
        go_left = X[idx, f] <= thr
        feature[node], threshold[node] = f, thr
        left[node], right[node] = new_node(), new_node()
        stack.append((right[node], idx[~go_left], depth + 1))
        stack.append((left[node], idx[go_left], depth + 1))

    return {
        "feature": np.array(feature, dtype=np.int64),
        "threshold": np.array(threshold, dtype=float),
        "left": np.array(left, dtype=np.int64),
        "right": np.array(right, dtype=np.int64),
        "value": np.array(value, dtype=np.int64),
    }


def apply_tree(tree, X):
    """Class index predicted by one tree for each row of ``X``."""
    node = np.zeros(X.shape[0], dtype=np.int64)
    rows = np.arange(X.shape[0])
    while True:
        feat = tree["feature"][node]
        internal = feat != LEAF
        if not internal.any():
            return tree["value"][node]
        go_left = X[rows[internal], feat[internal]] <= tree["threshold"][node[internal]]
        node[internal] = np.where(go_left, tree["left"][node[internal]],
                                  tree["right"][node[internal]])


def _fit_one(X, y, n_classes, max_features, seed, bootstrap, max_depth, min_leaf):
    rng = np.random.default_rng(seed)
    if bootstrap:
        sample = rng.integers(0, len(y), len(y))
        X, y = X[sample], y[sample]
    return build_tree(X, y, n_classes, max_features, rng, max_depth, min_leaf)


class RandomForestClassifier(TrackClassifier):
    """Bagged CART trees with ``max_features`` candidate features per split.

    Parameters
    ----------
    n_estimators : int, default=500
    max_features : int or None, default=None
        Features sampled per node; ``None`` means ``floor(sqrt(n_features))``.
    max_depth : int or None, default=None
        Trees grow until leaves are pure when ``None``.
    min_samples_leaf : int, default=1
    bootstrap : bool, default=True
        Draw each tree's sample with replacement; when false every tree sees
        the full training set.
    random_state : int, default=0
    n_jobs : int, default=1
        Trees are built in parallel; seeds are fixed per tree index so the
        fitted forest does not depend on this value.

    Training rows are put into a canonical (lexicographic) order first, so
    the forest is identical for any permutation of the same training set.
    """

    kind = "rforest"

    def __init__(self, n_estimators=500, max_features=None, max_depth=None,
                 min_samples_leaf=1, bootstrap=True, random_state=0, n_jobs=1):
        self.n_estimators = n_estimators
        self.max_features = max_features
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.bootstrap = bootstrap
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _fit(self, X, y_index):
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        d = X.shape[1]
        mtry = int(np.floor(np.sqrt(d))) if self.max_features is None else int(self.max_features)
        if not 1 <= mtry <= d:
            raise ValueError(f"max_features must lie in [1, {d}]")
        order = np.lexsort(np.column_stack([X, y_index]).T[::-1])
        X, y_index = X[order], y_index[order]
        seeds = np.random.SeedSequence(self.random_state).spawn(self.n_estimators)
        args = (X, y_index, len(self.classes_), mtry)
        rest = (self.bootstrap, self.max_depth, self.min_samples_leaf)
        if self.n_jobs == 1:
            self.trees_ = [_fit_one(*args, s, *rest) for s in seeds]
        else:
            self.trees_ = Parallel(n_jobs=self.n_jobs)(
                delayed(_fit_one)(*args, s, *rest) for s in seeds)

    def vote_counts(self, X):
        votes = np.zeros((X.shape[0], len(self.classes_)), dtype=np.int64)
        rows = np.arange(X.shape[0])
        for tree in self.trees_:
            np.add.at(votes, (rows, apply_tree(tree, X)), 1)
        return votes

    def _decide(self, X):
        # argmax picks the first class in ascending order on ties.
        return np.argmax(self.vote_counts(X), axis=1)

    def _get_state(self):
        return {"trees": self.trees_}

    def _set_state(self, state):
        self.trees_ = [{k: np.asarray(v, dtype=float if k == "threshold" else np.int64)
                        for k, v in tree.items()} for tree in state["trees"]]
