"""Soft-margin SVM with an RBF kernel, trained by SMO on the dual."""

from __future__ import annotations

import numpy as np

from ._backend import kernels
from .base import Model, TrainSet, sigmoid


def rbf_kernel(A, B, gamma):
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * (A @ B.T)
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


def default_gamma(X):
    """``1 / (d * mean per-feature variance)``, or 1.0 when every feature is constant."""
    v = float(X.var(axis=0).mean())
    return 1.0 / (X.shape[1] * v) if v > 0 else 1.0


def dual_objective(alpha, K, y):
    """``0.5 * a'Qa - sum(a)`` with ``Q = yy' * K`` (minimised by SMO)."""
    ay = alpha * y
    return 0.5 * ay @ K @ ay - alpha.sum()


def kkt_violation(alpha, K, y, C, b):
    """Largest violation of the soft-margin KKT conditions at ``(alpha, b)``."""
    f = K @ (alpha * y) + b
    margin = y * f
    worst = 0.0
    lower = alpha <= 0
    upper = alpha >= C
    free_ = ~lower & ~upper
    if lower.any():
        worst = max(worst, float(np.max(1.0 - margin[lower], initial=0.0)))
    if upper.any():
        worst = max(worst, float(np.max(margin[upper] - 1.0, initial=0.0)))
    if free_.any():
        worst = max(worst, float(np.max(np.abs(margin[free_] - 1.0))))
    return worst


def bias_from_gradient(alpha, G, y, C):
    free_ = (alpha > 0) & (alpha < C)
    if free_.any():
        return float(np.mean(-y[free_] * G[free_]))
    v = -y * G
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
    hi = v[up].max() if up.any() else 0.0
    lo = v[low].min() if low.any() else 0.0
    return float((hi + lo) / 2.0)


class SVM(Model):
    algorithm = "svm_rbf"

    def __init__(self, feature_dim, support, coef, b, gamma, C, gap=0.0, iterations=0):
        super().__init__(feature_dim)
        self.support = np.ascontiguousarray(support, dtype=np.float64).reshape(-1, feature_dim)
        self.coef = np.asarray(coef, dtype=np.float64)  # alpha_i * y_i
        self.b = float(b)
        self.gamma = float(gamma)
        self.C = float(C)
        self.gap = float(gap)
        self.iterations = int(iterations)

    @classmethod
    def fit(cls, train: TrainSet, params, seed=None):
        train.require_both_classes(cls.algorithm)
        X = train.features
        y = np.where(train.targets, 1.0, -1.0)
        gamma = params.svm_gamma or default_gamma(X)
        K = np.ascontiguousarray(rbf_kernel(X, X, gamma))
        alpha, G, gap, it = kernels.smo_solve(K, y, float(params.svm_C), float(params.svm_tol),
                                              int(params.svm_max_iter))
        alpha = np.asarray(alpha)
        b = bias_from_gradient(alpha, np.asarray(G), y, params.svm_C)
        sv = alpha > 0
        model = cls(train.dim, X[sv], alpha[sv] * y[sv], b, gamma, params.svm_C, gap, it)
        model.alpha = alpha
        return model

    def decision_function(self, X):
        X = self.check_input(X)
        if len(self.coef) == 0:
            return np.full(X.shape[0], self.b)
        return rbf_kernel(X, self.support, self.gamma) @ self.coef + self.b

    def score_batch(self, X):
        return sigmoid(self.decision_function(X))

    def params_dict(self):
        return {"support": self.support.tolist(), "coef": self.coef.tolist(), "b": self.b,
                "gamma": self.gamma, "C": self.C}

    @classmethod
    def from_params(cls, feature_dim, p):
        return cls(feature_dim, p["support"], p["coef"], p["b"], p["gamma"], p["C"])
