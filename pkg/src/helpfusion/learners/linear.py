"""L2-regularised logistic regression by full-batch gradient descent."""

from __future__ import annotations

import numpy as np

from .base import Model, TrainSet, sigmoid


def log_loss(w, b, X, y, l2):
    """Mean log-loss plus ``l2/2 * |w|^2`` (the bias is not penalised)."""
    z = X @ w + b
    # log(1 + exp(-z)) for y=1 and log(1 + exp(z)) for y=0
    per = np.logaddexp(0.0, np.where(y, -z, z))
    return float(per.mean() + 0.5 * l2 * (w @ w))


def log_loss_grad(w, b, X, y, l2):
    r = sigmoid(X @ w + b) - y
    return X.T @ r / len(y) + l2 * w, float(r.mean())


class LogisticRegression(Model):
    algorithm = "logistic"

    def __init__(self, feature_dim, w=None, b=0.0, epochs=0):
        super().__init__(feature_dim)
        self.w = np.zeros(feature_dim) if w is None else np.asarray(w, dtype=np.float64)
        self.b = float(b)
        self.epochs = int(epochs)

    @classmethod
    def fit(cls, train: TrainSet, params, seed=None):
        train.require_both_classes(cls.algorithm)
        X = train.features
        y = train.targets.astype(np.float64)
        w = np.zeros(train.dim)
        b = 0.0
        epoch = 0
        for epoch in range(1, params.logistic_max_epochs + 1):
            gw, gb = log_loss_grad(w, b, X, y, params.logistic_l2)
            if max(np.abs(gw).max(initial=0.0), abs(gb)) < params.logistic_tol:
                break
            w -= params.logistic_lr * gw
            b -= params.logistic_lr * gb
        return cls(train.dim, w, b, epoch)

    def score_batch(self, X):
        return sigmoid(self.check_input(X) @ self.w + self.b)

    def params_dict(self):
        return {"w": self.w.tolist(), "b": self.b}

    @classmethod
    def from_params(cls, feature_dim, p):
        return cls(feature_dim, p["w"], p["b"])
