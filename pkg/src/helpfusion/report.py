"""Text tables and static SVG charts built from a sweep's records."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .learners import BASELINE
from .metrics import ConfusionMatrix, curve_over_windows, precision_recall_f1

GRID_WINDOWS = (1, 10, 20, 30, 40, 41, 47, 48, 50)

LABELS = {
    "svm_rbf": "SVM (RBF)",
    "logistic": "Logistic regression",
    "tree": "Decision tree",
    "gaussian_nb": "Gaussian NB",
    "forest": "Random forest",
    BASELINE: "Random (baseline)",
}


class RecordTable:
    """Per-(window, algorithm) aggregates over the iterations in a records list."""

    def __init__(self, records):
        if not records:
            raise ValueError("no records to report on")
        self.records = list(records)
        self.algorithms = list(dict.fromkeys(r.algorithm for r in self.records))
        self.windows = sorted({r.window_size for r in self.records})
        groups = {}
        pooled = {}
        for r in self.records:
            key = (r.window_size, r.algorithm)
            groups.setdefault(key, []).append(precision_recall_f1(r.cm))
            pooled[key] = pooled.get(key, ConfusionMatrix()) + r.cm
        self.mean = {k: tuple(np.mean(v, axis=0)) for k, v in groups.items()}  # (p, r, f1)
        self.pooled = pooled

    def f1(self, window, algorithm) -> float:
        return float(self.mean[(window, algorithm)][2])

    def f1_series(self, algorithm):
        return [self.f1(w, algorithm) for w in self.windows if (w, algorithm) in self.mean]

    def average_series(self):
        """Mean F1 over the learners (baseline excluded) at each window size."""
        algos = [a for a in self.algorithms if a != BASELINE] or self.algorithms
        return [float(np.mean([self.f1(w, a) for a in algos if (w, a) in self.mean])) for w in self.windows]

    def curves(self, algorithm):
        per_window = {w: self.pooled[(w, algorithm)] for w in self.windows if (w, algorithm) in self.pooled}
        return {kind: curve_over_windows(per_window, kind) for kind in ("roc", "pr")}


def select_windows(available, requested=None):
    requested = GRID_WINDOWS if requested is None else tuple(requested)
    chosen = [w for w in requested if w in set(available)]
    return chosen or list(available)


def f1_grid(table: RecordTable, windows) -> str:
    """Algorithms by window sizes; each row's best window is wrapped in ``**``."""
    head = ["Algorithm"] + [f"s={w}" for w in windows]
    rows = []
    for a in table.algorithms:
        vals = [table.f1(w, a) if (w, a) in table.mean else None for w in windows]
        present = [v for v in vals if v is not None]
        best = max(present) if present else None
        cells = []
        for v in vals:
            if v is None:
                cells.append("-")
            elif v == best:
                cells.append(f"**{v:.2f}**")
            else:
                cells.append(f"{v:.2f}")
        rows.append([LABELS.get(a, a)] + cells)
    return _render(head, rows)


def auc_table(table: RecordTable) -> str:
    rows = []
    for a in table.algorithms:
        c = table.curves(a)
        rows.append([LABELS.get(a, a), f"{c['roc'][1]:.2f}", f"{c['pr'][1]:.2f}"])
    return _render(["Algorithm", "ROC AUC", "PR AUC"], rows)


def _render(head, rows) -> str:
    widths = [max(len(str(r[i])) for r in [head] + rows) for i in range(len(head))]

    def line(r):
        return "  ".join(str(c).ljust(w) if i == 0 else str(c).rjust(w) for i, (c, w) in enumerate(zip(r, widths)))

    rule = "  ".join("-" * w for w in widths)
    return "\n".join([line(head), rule] + [line(r) for r in rows]) + "\n"


def write_auc_csv(table: RecordTable, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["algorithm", "roc_auc", "pr_auc"])
        for a in table.algorithms:
            c = table.curves(a)
            w.writerow([a, f"{c['roc'][1]:.6f}", f"{c['pr'][1]:.6f}"])


# -- charts ---------------------------------------------------------------------

def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # stable ids and no timestamp, so reruns give identical files
    matplotlib.rcParams["svg.hashsalt"] = "helpfusion"
    return plt


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})


def plot_f1(table: RecordTable, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for a in table.algorithms:
        ws = [w for w in table.windows if (w, a) in table.mean]
        ax.plot(ws, table.f1_series(a), marker=".", linewidth=1, label=LABELS.get(a, a))
    ax.plot(table.windows, table.average_series(), color="black", linewidth=2.5, label="Average")
    ax.set_xlabel("window size (events)")
    ax.set_ylabel("mean F1")
    ax.set_ylim(0, 1)
    ax.legend(fontsize=8, loc="lower right")
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def plot_curves(table: RecordTable, kind, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 5))
    for a in table.algorithms:
        points, area = table.curves(a)[kind]
        xs = [p.x for p in points]
        ys = [p.y for p in points]
        order = np.lexsort((ys, xs))
        ax.plot(np.array(xs)[order], np.array(ys)[order], marker=".", linewidth=1,
                label=f"{LABELS.get(a, a)} ({area:.2f})")
    if kind == "roc":
        ax.plot([0, 1], [0, 1], color="grey", linestyle=":", linewidth=1)
        ax.set_xlabel("false positive rate")
        ax.set_ylabel("true positive rate")
    else:
        ax.set_xlabel("recall")
        ax.set_ylabel("precision")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.legend(fontsize=8, loc="lower right")
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def render(records, outdir, windows=None) -> dict:
    """Write the grid, AUC table and charts under ``outdir``; returns the paths and texts."""
    table = RecordTable(records)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    cols = select_windows(table.windows, windows)
    grid = f1_grid(table, cols)
    aucs = auc_table(table)
    paths = {
        "f1_grid": outdir / "f1_grid.txt",
        "auc_table": outdir / "auc_table.txt",
        "auc_csv": outdir / "auc.csv",
        "f1_chart": outdir / "f1_vs_window.svg",
        "roc_chart": outdir / "roc.svg",
        "pr_chart": outdir / "pr.svg",
    }
    paths["f1_grid"].write_text(grid, encoding="utf-8")
    paths["auc_table"].write_text(aucs, encoding="utf-8")
    write_auc_csv(table, paths["auc_csv"])
    plot_f1(table, paths["f1_chart"])
    plot_curves(table, "roc", paths["roc_chart"])
    plot_curves(table, "pr", paths["pr_chart"])
    return {"paths": paths, "grid": grid, "auc": aucs, "windows": cols}
