"""Multinomial logistic regression trained by gradient descent with backtracking."""
from __future__ import annotations

import numpy as np
from scipy.special import log_softmax, softmax

from .base import TrackClassifier


def _design(X):
    return np.column_stack([np.ones(X.shape[0]), X])


def nll_and_gradient(coef, X1, Y):
    """Mean negative log-likelihood and its gradient.

    ``coef`` has shape (n_features + 1, n_classes) with the intercept in row 0,
    ``X1`` carries the matching column of ones and ``Y`` is one-hot.
    """
    scores = X1 @ coef
    loss = -np.sum(Y * log_softmax(scores, axis=1)) / X1.shape[0]
    grad = X1.T @ (softmax(scores, axis=1) - Y) / X1.shape[0]
    return float(loss), grad


class MultinomialLogisticRegression(TrackClassifier):
    """Softmax regression on raw features plus an intercept.

    Each step takes the negative gradient with an Armijo backtracking line
    search, so the recorded ``loss_history_`` never increases.  Training
    stops once the largest gradient component falls below ``tol`` or after
    ``max_iter`` steps.
    """

    kind = "lm"

    def __init__(self, max_iter=1000, tol=1e-6, initial_step=1.0):
        self.max_iter = max_iter
        self.tol = tol
        self.initial_step = initial_step

    def _fit(self, X, y_index):
        X1 = _design(X)
        Y = np.eye(len(self.classes_))[y_index]
        coef = np.zeros((X1.shape[1], Y.shape[1]))
        loss, grad = nll_and_gradient(coef, X1, Y)
        history = [loss]
        step = self.initial_step
        self.n_iter_ = 0
        for _ in range(self.max_iter):
            g2 = float(np.sum(grad * grad))
            if np.max(np.abs(grad)) < self.tol:
                break
            while True:
                candidate = coef - step * grad
                new_loss, new_grad = nll_and_gradient(candidate, X1, Y)
                if new_loss <= loss - 0.5 * step * g2 or step < 1e-16:
                    break
                step *= 0.5
            if new_loss > loss:
                break
            coef, loss, grad = candidate, new_loss, new_grad
            history.append(loss)
            self.n_iter_ += 1
            step *= 2.0
        self.coef_ = coef
        self.loss_history_ = np.array(history)

    def decision_function(self, X):
        return _design(X) @ self.coef_

    def _decide(self, X):
        return np.argmax(self.decision_function(X), axis=1)

    def _get_state(self):
        return {"coef": self.coef_}

    def _set_state(self, state):
        self.coef_ = np.asarray(state["coef"], dtype=float)
