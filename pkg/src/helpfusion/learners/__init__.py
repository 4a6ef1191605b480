"""Five fusion learners and a random baseline behind one fit/score/predict surface.

Model files are JSON::

    {"format": "helpfusion-model", "version": 1,
     "algorithm": "forest", "feature_dim": 40, "params": {...}}
"""

from __future__ import annotations

import json

import numpy as np

from ..errors import DataFormatError
from ._backend import BACKEND
from .base import ALGORITHMS, ALL_ALGORITHMS, BASELINE, LearnerParams, Model, TrainSet
from .bayes import GaussianNB, RandomBaseline
from .linear import LogisticRegression
from .svm import SVM
from .tree import DecisionTree, RandomForest

MODEL_FORMAT = "helpfusion-model"
MODEL_VERSION = 1

_REGISTRY = {
    "svm_rbf": SVM,
    "logistic": LogisticRegression,
    "tree": DecisionTree,
    "gaussian_nb": GaussianNB,
    "forest": RandomForest,
    BASELINE: RandomBaseline,
}

__all__ = [
    "ALGORITHMS", "ALL_ALGORITHMS", "BACKEND", "BASELINE", "LearnerParams", "Model", "TrainSet",
    "fit", "score", "predict", "random_baseline", "save_model", "load_model",
]


def fit(algorithm: str, train, params: LearnerParams | None = None, seed: int | None = None) -> Model:
    """Fit ``algorithm`` on ``train`` (a :class:`TrainSet` or an ``(X, y)`` pair)."""
    if algorithm not in _REGISTRY:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALL_ALGORITHMS)}")
    params = params or LearnerParams()
    if not isinstance(train, TrainSet):
        train = TrainSet(*train)
    return _REGISTRY[algorithm].fit(train, params, params.seed if seed is None else seed)


def score(model: Model, x) -> float | np.ndarray:
    """Score in [0, 1] for one feature vector, or an array of scores for a matrix."""
    x = np.asarray(x, dtype=np.float64)
    s = model.score_batch(x)
    return float(s[0]) if x.ndim == 1 else s


def predict(model: Model, x):
    """``score >= 0.5``; an exact 0.5 predicts true."""
    s = score(model, x)
    return bool(s >= 0.5) if np.ndim(s) == 0 else s >= 0.5


def random_baseline(seed: int, feature_dim: int | None = None) -> RandomBaseline:
    return RandomBaseline(feature_dim, seed)


def model_to_json(model: Model) -> dict:
    return {"format": MODEL_FORMAT, "version": MODEL_VERSION, **model.to_dict()}


def model_from_json(doc) -> Model:
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise DataFormatError("not a helpfusion model file (field 'format')")
    if doc.get("version") != MODEL_VERSION:
        raise DataFormatError(f"unsupported model version {doc.get('version')!r} (field 'version')")
    algo = doc.get("algorithm")
    if algo not in _REGISTRY:
        raise DataFormatError(f"unknown algorithm {algo!r} (field 'algorithm')")
    dim = doc.get("feature_dim")
    return _REGISTRY[algo].from_params(None if dim == -1 else dim, doc["params"])


def save_model(model: Model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_json(model), fh)


def load_model(path) -> Model:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}: invalid JSON ({exc.msg})") from None
    return model_from_json(doc)
