from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateDataError, ValidationError

ALGORITHMS = ("svm_rbf", "logistic", "tree", "gaussian_nb", "forest")
BASELINE = "random_baseline"
ALL_ALGORITHMS = ALGORITHMS + (BASELINE,)


@dataclass(frozen=True)
class LearnerParams:
    """Hyper-parameters for every learner; the forest defaults follow the reference setup."""

    forest_n_estimators: int = 1600
    forest_max_depth: int = 20
    forest_bootstrap: bool = True
    forest_max_features: int | None = None  # None: floor(sqrt(d))
    forest_min_samples_split: int = 2
    svm_C: float = 1.0
    svm_gamma: float | None = None  # None: 1 / (d * mean per-feature variance)
    svm_tol: float = 1e-3
    svm_max_iter: int = 200_000
    logistic_lr: float = 0.5
    logistic_l2: float = 1e-4
    logistic_max_epochs: int = 1000
    logistic_tol: float = 1e-6
    tree_max_depth: int = 20
    tree_min_samples_split: int = 2
    tree_max_features: int | None = None  # None: all features
    nb_var_floor: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        for name in ("forest_n_estimators", "forest_max_depth", "forest_min_samples_split",
                     "svm_max_iter", "logistic_max_epochs", "tree_max_depth",
                     "tree_min_samples_split"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be positive")
        for name in ("forest_max_features", "tree_max_features"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ValidationError(f"{name} must be positive")
        for name in ("svm_C", "svm_tol", "logistic_lr", "logistic_tol", "nb_var_floor"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if self.svm_gamma is not None and not self.svm_gamma > 0:
            raise ValidationError("svm_gamma must be positive")
        if self.logistic_l2 < 0:
            raise ValidationError("logistic_l2 must be non-negative")


@dataclass(frozen=True)
class TrainSet:
    features: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        y = np.asarray(self.targets, dtype=bool)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValidationError(f"feature rows ({X.shape[0]}) and targets ({y.shape[0]}) differ")
        if X.shape[0] == 0:
            raise ValidationError("training set is empty")
        if not np.isfinite(X).all():
            raise ValidationError("training features contain NaN or infinite values")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "targets", y)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def require_both_classes(self, algorithm):
        if self.targets.all() or not self.targets.any():
            raise DegenerateDataError(f"{algorithm} needs at least one instance of each class")


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class Model:
    """A fitted classifier. Subclasses implement ``score_batch``."""

    algorithm = ""

    def __init__(self, feature_dim: int):
        self.feature_dim = int(feature_dim)

    def check_input(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.feature_dim:
            raise ValueError(f"{self.algorithm} expects {self.feature_dim} features, got {X.shape[1]}")
        return np.ascontiguousarray(X)

    def score_batch(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict_batch(self, X) -> np.ndarray:
        return self.score_batch(X) >= 0.5

    def params_dict(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"algorithm": self.algorithm, "feature_dim": self.feature_dim,
                "params": self.params_dict()}
