"""Sliding-window feature construction over per-session decision streams.

Instance ``t`` of a session with window size ``s`` is the concatenation
``X_t, X_{t-1}, ..., X_{t-(s-1)}`` (most recent first), where vectors
before the start of the session are zero. Windows never cross sessions and
targets are copied unchanged.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

BASE_DIM = 4


@dataclass(frozen=True)
class WindowedInstance:
    features: tuple[float, ...]
    target: bool
    session_id: str
    event_index: int


class WindowedCorpus(Sequence):
    """Pooled windowed instances, backed by arrays.

    ``features`` is ``(N, 4*s)`` float64, ``targets`` is ``(N,)`` bool.
    Indexing yields :class:`WindowedInstance` objects.
    """

    def __init__(self, features, targets, session_ids, event_index, window):
        self.features = np.ascontiguousarray(features, dtype=np.float64)
        self.targets = np.asarray(targets, dtype=bool)
        self.session_ids = np.asarray(session_ids, dtype=object)
        self.event_index = np.asarray(event_index, dtype=np.int64)
        self.window = int(window)

    def __len__(self):
        return len(self.targets)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        return WindowedInstance(
            tuple(float(v) for v in self.features[i]),
            bool(self.targets[i]),
            str(self.session_ids[i]),
            int(self.event_index[i]),
        )

    @property
    def prevalence(self) -> float:
        return float(self.targets.mean()) if len(self) else 0.0


def _as_matrix(stream) -> tuple[np.ndarray, np.ndarray]:
    if len(stream) == 0:
        return np.zeros((0, BASE_DIM)), np.zeros(0, dtype=bool)
    X = np.array([tuple(v) for v, _ in stream], dtype=np.float64)
    y = np.array([bool(h) for _, h in stream], dtype=bool)
    if X.shape[1] != BASE_DIM:
        raise ValueError(f"decision vectors must have length {BASE_DIM}")
    return X, y


def window_matrix(X: np.ndarray, s: int) -> np.ndarray:
    """Windowed feature matrix for one session's ``(T, 4)`` decision matrix."""
    if s < 1:
        raise ValueError(f"window size must be >= 1, got {s}")
    T, d = X.shape
    out = np.zeros((T, d * s), dtype=np.float64)
    for lag in range(min(s, T)):
        out[lag:, lag * d:(lag + 1) * d] = X[:T - lag]
    return out


def build_windowed(stream, s: int, session_id: str = "") -> list[WindowedInstance]:
    """Windowed instances for one session's ``[(DecisionVector, help), ...]`` stream."""
    if s < 1:
        raise ValueError(f"window size must be >= 1, got {s}")
    X, y = _as_matrix(stream)
    W = window_matrix(X, s)
    return [
        WindowedInstance(tuple(float(v) for v in W[t]), bool(y[t]), session_id, t)
        for t in range(len(y))
    ]


def build_corpus(decision_streams, s: int) -> WindowedCorpus:
    """Window every session independently and pool the results in session order.

    ``decision_streams`` is ``[(session_id, stream), ...]``.
    """
    if s < 1:
        raise ValueError(f"window size must be >= 1, got {s}")
    feats, targets, sids, idx = [], [], [], []
    for sid, stream in decision_streams:
        X, y = _as_matrix(stream)
        feats.append(window_matrix(X, s))
        targets.append(y)
        sids.extend([sid] * len(y))
        idx.append(np.arange(len(y)))
    if not feats:
        return WindowedCorpus(np.zeros((0, BASE_DIM * s)), [], [], [], s)
    return WindowedCorpus(np.vstack(feats), np.concatenate(targets), sids, np.concatenate(idx), s)


def write_corpus_csv(corpus: WindowedCorpus, path) -> None:
    dim = corpus.features.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["session_id", "event_index", "target", *(f"f{j}" for j in range(dim))])
        for i in range(len(corpus)):
            w.writerow([corpus.session_ids[i], int(corpus.event_index[i]), int(corpus.targets[i]),
                        *(f"{v:.6f}" for v in corpus.features[i])])
