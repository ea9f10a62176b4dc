"""Feed-forward network with logistic hidden units and a softmax output."""
from __future__ import annotations

import numpy as np
from scipy.special import expit, log_softmax, softmax

from .base import TrackClassifier, majority_index, standardize_fit


def layer_shapes(n_in, hidden, n_out):
    sizes = [n_in, *hidden, n_out]
    return [(sizes[k] + 1, sizes[k + 1]) for k in range(len(sizes) - 1)]


def unpack(params, shapes):
    """Split a flat parameter vector into per-layer matrices (bias in row 0)."""
    out, start = [], 0
    for rows, cols in shapes:
        out.append(params[start:start + rows * cols].reshape(rows, cols))
        start += rows * cols
    return out


def forward(params, shapes, X):
    """Activations of every layer; the last entry holds output scores."""
    acts = [X]
    weights = unpack(params, shapes)
    for k, W in enumerate(weights):
        z = W[0] + acts[-1] @ W[1:]
        acts.append(z if k == len(weights) - 1 else expit(z))
    return acts


def loss_and_gradient(params, shapes, X, Y):
    """Mean cross-entropy and its gradient with respect to ``params``."""
    acts = forward(params, shapes, X)
    weights = unpack(params, shapes)
    n = X.shape[0]
    loss = -np.sum(Y * log_softmax(acts[-1], axis=1)) / n
    delta = (softmax(acts[-1], axis=1) - Y) / n
    grads = [None] * len(weights)
    for k in range(len(weights) - 1, -1, -1):
        a = acts[k]
        grads[k] = np.vstack([delta.sum(axis=0), a.T @ delta])
        if k:
            delta = (delta @ weights[k][1:].T) * a * (1.0 - a)
    return float(loss), np.concatenate([g.ravel() for g in grads])


class NeuralNetClassifier(TrackClassifier):
    """Full-batch network trained with iRprop- step adaptation.

    Parameters
    ----------
    hidden_layer_sizes : tuple of int, default=(10,)
    max_iter : int, default=100
    max_weights : int, default=10000
        Upper limit on the number of trainable parameters.
    random_state : int, default=0
    initial_step, max_step : float
        Rprop step size at the start and its ceiling.

    Inputs are standardized using training statistics kept on the model.
    """

    kind = "nn"

    def __init__(self, hidden_layer_sizes=(10,), max_iter=100, max_weights=10000,
                 random_state=0, initial_step=0.1, max_step=50.0):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.max_iter = max_iter
        self.max_weights = max_weights
        self.random_state = random_state
        self.initial_step = initial_step
        self.max_step = max_step

    def _fit(self, X, y_index):
        hidden = tuple(int(h) for h in self.hidden_layer_sizes)
        if not hidden or min(hidden) < 1:
            raise ValueError("hidden_layer_sizes needs at least one layer of >= 1 unit")
        self.shapes_ = layer_shapes(X.shape[1], hidden, len(self.classes_))
        n_params = sum(r * c for r, c in self.shapes_)
        if n_params > self.max_weights:
            raise ValueError(f"network has {n_params} weights, above max_weights={self.max_weights}")
        self.mean_, self.scale_ = standardize_fit(X)
        Z = (X - self.mean_) / self.scale_
        self.fallback_ = None
        if np.all(Z == Z[0]):
            self.fallback_ = majority_index(y_index, len(self.classes_))

        rng = np.random.default_rng(self.random_state)
        params = np.concatenate([
            rng.uniform(-1.0, 1.0, r * c) / np.sqrt(r) for r, c in self.shapes_])
        Y = np.eye(len(self.classes_))[y_index]
        step = np.full_like(params, self.initial_step)
        prev_grad = np.zeros_like(params)
        history = []
        for _ in range(self.max_iter):
            loss, grad = loss_and_gradient(params, self.shapes_, Z, Y)
            history.append(loss)
            agree = grad * prev_grad
            step = np.where(agree > 0, np.minimum(step * 1.2, self.max_step), step)
            step = np.where(agree < 0, np.maximum(step * 0.5, 1e-6), step)
            grad = np.where(agree < 0, 0.0, grad)
            params = params - np.sign(grad) * step
            prev_grad = grad
        self.params_ = params
        self.loss_history_ = np.array(history)

    def predict_scores(self, X):
        Z = (X - self.mean_) / self.scale_
        return softmax(forward(self.params_, self.shapes_, Z)[-1], axis=1)

    def _decide(self, X):
        if self.fallback_ is not None:
            return np.full(X.shape[0], self.fallback_, dtype=int)
        return np.argmax(self.predict_scores(X), axis=1)

    def _get_state(self):
        return {"shapes": [list(s) for s in self.shapes_], "params": self.params_,
                "mean": self.mean_, "scale": self.scale_, "fallback": self.fallback_}

    def _set_state(self, state):
        self.shapes_ = [tuple(s) for s in state["shapes"]]
        self.params_ = np.asarray(state["params"], dtype=float)
        self.mean_ = np.asarray(state["mean"], dtype=float)
        self.scale_ = np.asarray(state["scale"], dtype=float)
        self.fallback_ = state["fallback"]
