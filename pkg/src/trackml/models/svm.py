"""One-vs-one C-SVC with an RBF kernel, trained by sequential minimal optimization."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .base import TrackClassifier, majority_index, standardize_fit


def rbf_kernel(A, B, gamma):
    sq = (np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :] - 2.0 * A @ B.T)
    return np.exp(-gamma * np.maximum(sq, 0.0))


@dataclass
class SMOResult:
    alpha: np.ndarray
    bias: float
    n_iter: int
    gap: float


def dual_objective(alpha, K, y):
    """``0.5 * a^T Q a - sum(a)`` with ``Q_ij = y_i y_j K_ij`` (minimized)."""
    ay = alpha * y
    return float(0.5 * ay @ K @ ay - alpha.sum())


def smo(K, y, C, tol=1e-4, max_iter=100_000):
    """Solve the binary soft-margin dual for labels ``y`` in {-1, +1}.

    Working pairs are chosen as the maximal violating pair; the loop ends when
    the violation gap drops below ``tol``.
    """
    n = len(y)
    y = y.astype(float)
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of the dual objective: Q @ alpha - 1
    diag = np.diag(K)
    gap = np.inf
    it = 0
    for it in range(max_iter):
        score = -y * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not up.any() or not low.any():
            gap = 0.0
            break
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        j = int(np.flatnonzero(low)[np.argmin(score[low])])
        gap = score[i] - score[j]
        if gap < tol:
            break
        curvature = max(diag[i] + diag[j] - 2.0 * K[i, j], 1e-12)
        t = gap / curvature
        t_max_i = C - alpha[i] if y[i] > 0 else alpha[i]
        t_max_j = alpha[j] if y[j] > 0 else C - alpha[j]
        t = min(t, t_max_i, t_max_j)
        alpha[i] += y[i] * t
        alpha[j] -= y[j] * t
        # Snap to the box so bound membership tests stay exact.
        for k in (i, j):
            if alpha[k] < 1e-12 * C:
                alpha[k] = 0.0
            elif alpha[k] > C * (1 - 1e-12):
                alpha[k] = C
        grad += t * y * (K[:, i] - K[:, j])

    score = -y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        bias = float(np.mean(score[free]))
    else:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        hi = score[up].max() if up.any() else score[low].min()
        lo = score[low].min() if low.any() else score[up].max()
        bias = float(0.5 * (hi + lo))
    return SMOResult(alpha, bias, it, float(gap))


class SMOClassifier(TrackClassifier):
    """Soft-margin SVM, one binary machine per class pair.

    Features are standardized with training statistics.  ``gamma="scale"``
    means ``1 / n_features`` on the standardized features.  Prediction is a
    majority vote over the pairwise machines; ties go to the lowest class.
    When all training rows are identical the model falls back to predicting
    the majority class.
    """

    kind = "svm"

    def __init__(self, C=10.0, gamma="scale", tol=1e-4, max_iter=100_000):
        self.C = C
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter

    def _gamma(self, n_features):
        return 1.0 / n_features if self.gamma == "scale" else float(self.gamma)

    def _fit(self, X, y_index):
        if self.C <= 0:
            raise ValueError("C must be > 0")
        self.mean_, self.scale_ = standardize_fit(X)
        Z = (X - self.mean_) / self.scale_
        self.gamma_ = self._gamma(X.shape[1])
        self.fallback_ = None
        if np.all(Z == Z[0]):
            self.fallback_ = majority_index(y_index, len(self.classes_))
            self.machines_ = []
            return
        K_full = rbf_kernel(Z, Z, self.gamma_)
        self.machines_ = []
        for a, b in combinations(range(len(self.classes_)), 2):
            idx = np.flatnonzero((y_index == a) | (y_index == b))
            y = np.where(y_index[idx] == a, 1.0, -1.0)
            result = smo(K_full[np.ix_(idx, idx)], y, self.C, self.tol, self.max_iter)
            sv = result.alpha > 0
            self.machines_.append({
                "classes": [a, b],
                "support_vectors": Z[idx[sv]],
                "dual_coef": result.alpha[sv] * y[sv],
                "bias": result.bias,
            })

    def pair_decisions(self, X):
        """Signed decision value of every pairwise machine, shape (n, n_pairs)."""
        Z = (X - self.mean_) / self.scale_
        out = np.empty((X.shape[0], len(self.machines_)))
        for m, machine in enumerate(self.machines_):
            K = rbf_kernel(Z, machine["support_vectors"], self.gamma_)
            out[:, m] = K @ machine["dual_coef"] + machine["bias"]
        return out

    def _decide(self, X):
        if self.fallback_ is not None:
            return np.full(X.shape[0], self.fallback_, dtype=int)
        votes = np.zeros((X.shape[0], len(self.classes_)), dtype=np.int64)
        decisions = self.pair_decisions(X)
        for m, machine in enumerate(self.machines_):
            a, b = machine["classes"]
            winner = np.where(decisions[:, m] > 0, a, b)
            np.add.at(votes, (np.arange(X.shape[0]), winner), 1)
        return np.argmax(votes, axis=1)

    def _get_state(self):
        return {"mean": self.mean_, "scale": self.scale_, "gamma": self.gamma_,
                "fallback": self.fallback_, "machines": self.machines_}

    def _set_state(self, state):
        self.mean_ = np.asarray(state["mean"], dtype=float)
        self.scale_ = np.asarray(state["scale"], dtype=float)
        self.gamma_ = float(state["gamma"])
        self.fallback_ = state["fallback"]
        self.machines_ = [{
            "classes": list(m["classes"]),
            "support_vectors": np.asarray(m["support_vectors"], dtype=float).reshape(
                -1, len(self.mean_)),
            "dual_coef": np.asarray(m["dual_coef"], dtype=float),
            "bias": float(m["bias"]),
        } for m in state["machines"]]
