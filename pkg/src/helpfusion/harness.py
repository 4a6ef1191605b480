"""Repeated balanced cross-validation over the (window size x algorithm) grid.

Every cell ``(window, algorithm, iteration)`` draws all of its randomness
from a seed hashed out of ``(master_seed, window, algorithm, iteration)``,
so results do not depend on execution order or worker count.
"""

from __future__ import annotations

import csv
import hashlib
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import DETECTOR_NAMES
from .learners import ALL_ALGORITHMS, BASELINE, LearnerParams, TrainSet, fit
from .metrics import ConfusionMatrix, confusion, curve_over_windows, precision_recall_f1
from .windowing import WindowedCorpus, build_corpus

log = logging.getLogger(__name__)

RECORDS_HEADER = ["window_size", "algorithm", "iteration", "tp", "fp", "fn", "tn"]
SUMMARY_HEADER = ["window_size", "algorithm", "f1", "precision", "recall"]
CURVES_HEADER = ["kind", "algorithm", "tag", "x", "y"]
AUC_HEADER = ["algorithm", "roc_auc", "pr_auc"]


@dataclass(frozen=True)
class ExperimentConfig:
    window_sizes: tuple = tuple(range(1, 51))
    algorithms: tuple = ALL_ALGORITHMS
    iterations: int = 50
    folds: int = 10
    master_seed: int = 0
    params: LearnerParams = field(default_factory=LearnerParams)

    def __post_init__(self):
        object.__setattr__(self, "window_sizes", tuple(int(w) for w in self.window_sizes))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        if not self.window_sizes or min(self.window_sizes) < 1:
            raise ValueError("window sizes must be positive integers")
        if len(set(self.window_sizes)) != len(self.window_sizes):
            raise ValueError("window sizes must be distinct")
        if not self.algorithms:
            raise ValueError("at least one algorithm is required")
        for a in self.algorithms:
            if a not in ALL_ALGORITHMS:
                raise ValueError(f"unknown algorithm {a!r}")
        if self.iterations < 1 or self.folds < 1:
            raise ValueError("iterations and folds must be positive")

    def cells(self):
        """All ``(window, algorithm, iteration)`` cells in canonical order."""
        return [(w, a, i) for w in self.window_sizes for a in self.algorithms
                for i in range(self.iterations)]


QUICK_WINDOWS = (1, 5, 10, 15, 20)
QUICK_ITERATIONS = 5
QUICK_TREES = 100


def quick_config(**overrides) -> ExperimentConfig:
    """Desk-scale preset: five window sizes up to 20, 5 iterations, 100-tree forests."""
    from dataclasses import replace as _replace

    params = overrides.pop("params", LearnerParams())
    params = _replace(params, forest_n_estimators=min(params.forest_n_estimators, QUICK_TREES))
    base = dict(window_sizes=QUICK_WINDOWS, iterations=QUICK_ITERATIONS, params=params)
    base.update(overrides)
    return ExperimentConfig(**base)


@dataclass(frozen=True)
class BalancedTrainSet:
    indices: np.ndarray        # positives followed by sampled negatives
    n_positive: int
    with_replacement: bool


@dataclass(frozen=True)
class ExperimentRecord:
    window_size: int
    algorithm: str
    iteration: int
    cm: ConfusionMatrix
    skipped_folds: int = 0
    resampled_folds: int = 0

    @property
    def f1(self) -> float:
        return precision_recall_f1(self.cm)[2]


class SkipFold(Exception):
    """A training split without positives: the fold cannot be balanced."""


def cell_seed(master_seed, window, algorithm, iteration) -> int:
    key = f"{int(master_seed)}:{int(window)}:{algorithm}:{int(iteration)}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def shuffle(instances, seed):
    """Seeded uniform permutation of a list of windowed instances."""
    items = list(instances)
    order = np.random.default_rng(seed).permutation(len(items))
    return [items[i] for i in order]


def kfold(n, k):
    """Contiguous folds over positions ``0..n-1``; the first ``n % k`` folds get one extra."""
    if k < 1:
        raise ValueError("fold count must be positive")
    if n < k:
        raise ValueError(f"cannot split {n} instances into {k} folds")
    sizes = [n // k + (1 if f < n % k else 0) for f in range(k)]
    bounds = np.cumsum([0] + sizes)
    return [np.arange(bounds[f], bounds[f + 1]) for f in range(k)]


def balance(train_indices, targets, rng) -> BalancedTrainSet:
    """All training positives plus as many negatives, sampled without replacement when possible."""
    train_indices = np.asarray(train_indices, dtype=np.intp)
    y = np.asarray(targets, dtype=bool)[train_indices]
    pos = train_indices[y]
    neg = train_indices[~y]
    n = len(pos)
    if n == 0:
        raise SkipFold("no positive instances in the training split")
    if len(neg) == 0:
        raise SkipFold("no negative instances in the training split")
    replace = len(neg) < n
    if replace:
        log.info("balancing: %d positives but only %d negatives; resampling with replacement", n, len(neg))
    chosen = rng.choice(neg, size=n, replace=replace)
    return BalancedTrainSet(np.concatenate([pos, chosen]), n, replace)


def iteration_split(n, k, iteration_seed):
    """``(permutation, folds, rng for balancing, per-fold fit seeds)`` for one cell."""
    shuffle_ss, balance_ss, fit_ss = np.random.SeedSequence(iteration_seed).spawn(3)
    order = np.random.default_rng(shuffle_ss).permutation(n)
    folds = [order[f] for f in kfold(n, k)]
    fit_seeds = [int(c.generate_state(1, dtype=np.uint64)[0]) for c in fit_ss.spawn(k)]
    return order, folds, np.random.default_rng(balance_ss), fit_seeds


def run_iteration(corpus: WindowedCorpus, window_size, algorithm, iteration_seed,
                  config: ExperimentConfig, iteration=0) -> ExperimentRecord:
    X, y = corpus.features, corpus.targets
    n = len(y)
    _, folds, rng, fit_seeds = iteration_split(n, config.folds, iteration_seed)
    total = ConfusionMatrix()
    skipped = resampled = 0
    for f, test in enumerate(folds):
        mask = np.ones(n, dtype=bool)
        mask[test] = False
        train_idx = np.flatnonzero(mask)
        try:
            bal = balance(train_idx, y, rng)
        except SkipFold as exc:
            log.warning("window %s %s iteration %s fold %d skipped: %s",
                        window_size, algorithm, iteration, f, exc)
            skipped += 1
            preds = np.zeros(len(test), dtype=bool)
        else:
            resampled += bal.with_replacement
            model = fit(algorithm, TrainSet(X[bal.indices], y[bal.indices]), config.params, fit_seeds[f])
            preds = model.predict_batch(X[test])
        total = total + confusion(preds, y[test])
    return ExperimentRecord(window_size, algorithm, iteration, total, skipped, resampled)


def detector_iteration(corpus: WindowedCorpus, detector, iteration_seed, folds=10,
                       threshold=0.5) -> ConfusionMatrix:
    """A single detector's current-event score thresholded, on the same test folds as a cell."""
    j = DETECTOR_NAMES.index(detector) if isinstance(detector, str) else int(detector)
    y = corpus.targets
    _, fold_idx, _, _ = iteration_split(len(y), folds, iteration_seed)
    total = ConfusionMatrix()
    for test in fold_idx:
        total = total + confusion(corpus.features[test, j] >= threshold, y[test])
    return total


# -- sweep ----------------------------------------------------------------------

_WORKER = {}


def _init_worker(streams, config):
    _WORKER["streams"] = streams
    _WORKER["config"] = config
    _WORKER["corpora"] = {}


def _corpus_for(window):
    cache = _WORKER["corpora"]
    if window not in cache:
        cache.clear()
        cache[window] = build_corpus(_WORKER["streams"], window)
    return cache[window]


def _run_cell(cell):
    window, algorithm, iteration = cell
    config = _WORKER["config"]
    corpus = _corpus_for(window)
    seed = cell_seed(config.master_seed, window, algorithm, iteration)
    return run_iteration(corpus, window, algorithm, seed, config, iteration)


@dataclass
class SweepReport:
    config: ExperimentConfig
    records: list
    corpus_size: int
    prevalence: float

    def record_map(self):
        return {(r.window_size, r.algorithm, r.iteration): r for r in self.records}

    def summary(self):
        """``{(window, algorithm): (f1, precision, recall)}``, equal-weight means over iterations."""
        groups = {}
        for r in self.records:
            groups.setdefault((r.window_size, r.algorithm), []).append(precision_recall_f1(r.cm))
        out = {}
        for key, vals in groups.items():
            arr = np.array(vals)
            p, rc, f1 = arr.mean(axis=0)
            out[key] = (float(f1), float(p), float(rc))
        return out

    def iteration_f1(self, window, algorithm):
        return [r.f1 for r in self.records if r.window_size == window and r.algorithm == algorithm]

    def window_matrices(self, algorithm):
        out = {}
        for r in self.records:
            if r.algorithm == algorithm:
                out[r.window_size] = out.get(r.window_size, ConfusionMatrix()) + r.cm
        return out

    def curves(self):
        """``{algorithm: {"roc": (points, auc), "pr": (points, auc)}}`` over window sizes."""
        return {a: {kind: curve_over_windows(self.window_matrices(a), kind) for kind in ("roc", "pr")}
                for a in self.config.algorithms}

    @property
    def skipped_folds(self):
        return sum(r.skipped_folds for r in self.records)

    @property
    def resampled_folds(self):
        return sum(r.resampled_folds for r in self.records)

    def write(self, outdir) -> dict:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        paths = {name: outdir / f"{name}.csv" for name in ("records", "summary", "curves", "auc")}
        write_records(self.records, paths["records"])
        with open(paths["summary"], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SUMMARY_HEADER)
            summary = self.summary()
            for win in self.config.window_sizes:
                for a in self.config.algorithms:
                    f1, p, r = summary[(win, a)]
                    w.writerow([win, a, f"{f1:.6f}", f"{p:.6f}", f"{r:.6f}"])
        curves = self.curves()
        with open(paths["curves"], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CURVES_HEADER)
            for a in self.config.algorithms:
                for kind in ("roc", "pr"):
                    for pt in curves[a][kind][0]:
                        w.writerow([kind, a, pt.tag, f"{pt.x:.6f}", f"{pt.y:.6f}"])
        with open(paths["auc"], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(AUC_HEADER)
            for a in self.config.algorithms:
                w.writerow([a, f"{curves[a]['roc'][1]:.6f}", f"{curves[a]['pr'][1]:.6f}"])
        return paths


def write_records(records, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORDS_HEADER)
        for r in records:
            w.writerow([r.window_size, r.algorithm, r.iteration, *r.cm.as_tuple()])


def read_records(path) -> list[ExperimentRecord]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RECORDS_HEADER:
            raise ValueError(f"{path}: header must be {','.join(RECORDS_HEADER)}")
        for row in reader:
            if row:
                w, a, i, tp, fp, fn, tn = row
                out.append(ExperimentRecord(int(w), a, int(i), ConfusionMatrix(int(tp), int(fp), int(fn), int(tn))))
    return out


def run_sweep(decision_streams, config: ExperimentConfig = ExperimentConfig(), threads=1,
              progress=None) -> SweepReport:
    """Run every cell of the grid; ``threads > 1`` spreads cells over worker processes.

    ``decision_streams`` is ``[(session_id, [(DecisionVector, help), ...]), ...]``.
    """
    streams = [(sid, [(tuple(v), bool(h)) for v, h in stream]) for sid, stream in decision_streams]
    n = sum(len(s) for _, s in streams)
    if n < config.folds:
        raise ValueError(f"corpus of {n} instances is smaller than the fold count {config.folds}")
    prevalence = sum(h for _, s in streams for _, h in s) / n
    cells = config.cells()
    results = []
    if threads <= 1:
        _init_worker(streams, config)
        for k, cell in enumerate(cells):
            results.append(_run_cell(cell))
            if progress:
                progress(k + 1, len(cells))
    else:
        with ProcessPoolExecutor(max_workers=threads, initializer=_init_worker,
                                 initargs=(streams, config)) as pool:
            # window-major chunks keep each worker's corpus cache warm
            chunk = max(1, len(config.algorithms) * config.iterations // max(1, threads))
            for k, rec in enumerate(pool.map(_run_cell, cells, chunksize=chunk)):
                results.append(rec)
                if progress:
                    progress(k + 1, len(cells))
    order = {a: i for i, a in enumerate(config.algorithms)}
    results.sort(key=lambda r: (r.window_size, order[r.algorithm], r.iteration))
    return SweepReport(config, results, n, prevalence)


def default_threads():
    return os.cpu_count() or 1


__all__ = [
    "AUC_HEADER", "BASELINE", "BalancedTrainSet", "CURVES_HEADER", "ExperimentConfig",
    "ExperimentRecord", "QUICK_WINDOWS", "RECORDS_HEADER", "SUMMARY_HEADER", "SkipFold", "SweepReport", "balance",
    "cell_seed", "detector_iteration", "iteration_split", "kfold", "quick_config", "read_records", "run_iteration",
    "run_sweep", "shuffle", "write_records",
]
