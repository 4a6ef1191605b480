"""Confusion matrices, precision/recall/F1 and ROC/PR curves with trapezoidal AUC.

Every 0/0 ratio evaluates to 0.0 so the metrics are total.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            if getattr(self, name) < 0:
                raise ValueError(f"confusion count {name} must be non-negative")

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp + other.tp, self.fp + other.fp,
                               self.fn + other.fn, self.tn + other.tn)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def as_tuple(self):
        return (self.tp, self.fp, self.fn, self.tn)


@dataclass(frozen=True)
class CurvePoint:
    x: float
    y: float
    tag: object = None


def confusion(predictions, targets) -> ConfusionMatrix:
    p = np.asarray(predictions, dtype=bool)
    t = np.asarray(targets, dtype=bool)
    if p.shape != t.shape:
        raise ValueError("predictions and targets differ in length")
    if p.size == 0:
        raise ValueError("confusion of an empty prediction set")
    return ConfusionMatrix(
        tp=int(np.count_nonzero(p & t)),
        fp=int(np.count_nonzero(p & ~t)),
        fn=int(np.count_nonzero(~p & t)),
        tn=int(np.count_nonzero(~p & ~t)),
    )


def _ratio(num, den) -> float:
    return num / den if den else 0.0


def precision_recall_f1(cm: ConfusionMatrix) -> tuple[float, float, float]:
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    f1 = _ratio(2 * precision * recall, precision + recall)
    return precision, recall, f1


def f1_score(cm: ConfusionMatrix) -> float:
    return precision_recall_f1(cm)[2]


def is_degenerate(cm: ConfusionMatrix) -> bool:
    """True when any of precision, recall or F1 fell back to the 0/0 rule."""
    return cm.tp + cm.fp == 0 or cm.tp + cm.fn == 0


def roc_point(cm: ConfusionMatrix, tag=None) -> CurvePoint:
    return CurvePoint(_ratio(cm.fp, cm.fp + cm.tn), _ratio(cm.tp, cm.tp + cm.fn), tag)


def pr_point(cm: ConfusionMatrix, tag=None) -> CurvePoint:
    precision, recall, _ = precision_recall_f1(cm)
    return CurvePoint(recall, precision, tag)


def _anchored(points: Sequence[CurvePoint], kind: str) -> list[tuple[float, float]]:
    if not points:
        raise ValueError("auc needs at least one point")
    if kind not in ("roc", "pr"):
        raise ValueError(f"unknown curve kind {kind!r}")
    xy = sorted((float(p.x), float(p.y)) for p in points)
    if kind == "roc":
        return [(0.0, 0.0), *xy, (1.0, 1.0)]
    return [(0.0, xy[0][1]), *xy, (1.0, xy[-1][1])]


def auc(points: Sequence[CurvePoint], kind: str = "roc") -> float:
    """Trapezoidal area under an anchored ROC or PR curve.

    ROC curves are closed with (0, 0) and (1, 1); PR curves are extended
    horizontally from the first point to recall 0 and from the last to recall 1.
    Points are ordered by ``(x, y)``, so a run of points sharing an x is
    entered at its lowest y and left at its highest.
    """
    xy = _anchored(points, kind)
    area = 0.0
    for (x0, y0), (x1, y1) in zip(xy, xy[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


def curve_over_windows(per_window: Mapping[int, ConfusionMatrix], kind: str = "roc"):
    """One point per window size from its aggregated matrix, plus the curve's AUC."""
    make = roc_point if kind == "roc" else pr_point
    points = [make(cm, tag=w) for w, cm in sorted(per_window.items())]
    return points, auc(points, kind)


def threshold_curve(scores, targets, kind: str = "roc") -> list[CurvePoint]:
    """Conventional score-threshold sweep for a fixed window.

    A point is emitted for each distinct score used as threshold
    (predict ``score >= threshold``), from the highest score down.
    """
    s = np.asarray(scores, dtype=np.float64)
    t = np.asarray(targets, dtype=bool)
    make = roc_point if kind == "roc" else pr_point
    points = []
    for thr in np.unique(s)[::-1]:
        points.append(make(confusion(s >= thr, t), tag=float(thr)))
    return points
