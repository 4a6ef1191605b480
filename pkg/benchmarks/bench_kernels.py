"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--rows 1800] [--window 10]

The workload mirrors one cross-validation fold: a balanced training set
drawn from a synthetic corpus at the given window size.
"""

import argparse
import sys
import time

import numpy as np

from helpfusion.harness import balance
from helpfusion.learners._backend import get
from helpfusion.learners.svm import default_gamma, rbf_kernel
from helpfusion.synthgen import GeneratorConfig, generate
from helpfusion.windowing import build_corpus


def workload(rows, window, seed):
    corpus = build_corpus(generate(GeneratorConfig(seed=seed)).streams, window)
    rng = np.random.default_rng(seed)
    bal = balance(np.arange(len(corpus)), corpus.targets, rng)
    idx = rng.choice(bal.indices, size=min(rows, len(bal.indices)), replace=False)
    return np.ascontiguousarray(corpus.features[idx]), corpus.targets[idx]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--rows", type=int, default=1800)
    ap.add_argument("--window", type=int, default=10)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args(argv)

    X, y = workload(args.rows, args.window, args.seed)
    y8 = y.astype(np.uint8)
    ys = np.where(y, 1.0, -1.0)
    samples = np.random.default_rng(0).integers(0, len(y), len(y)).astype(np.intp)
    mf = max(1, int(np.sqrt(X.shape[1])))
    K = np.ascontiguousarray(rbf_kernel(X, X, default_gamma(X)))
    print(f"workload: {X.shape[0]} rows x {X.shape[1]} features, sqrt-features {mf}")

    backends = {}
    for name in ("compiled", "python"):
        try:
            backends[name] = get(name)
        except ImportError:
            print(f"{name} backend unavailable; skipping")

    results = {}
    for name, k in backends.items():
        tree = k.grow_tree(X, y8, samples, 20, 2, mf, 1)
        results[(name, "grow_tree")] = best_of(lambda: k.grow_tree(X, y8, samples, 20, 2, mf, 1), args.repeat)
        results[(name, "tree_apply")] = best_of(lambda: k.tree_apply(tree[0], tree[1], tree[2], tree[3], X),
                                                args.repeat)
        results[(name, "smo_solve")] = best_of(lambda: k.smo_solve(K, ys, 1.0, 1e-3, 200000),
                                               max(1, args.repeat // 2))

    print(f"{'kernel':<12}" + "".join(f"{n:>12}" for n in backends) + f"{'speed-up':>10}")
    for kern in ("grow_tree", "tree_apply", "smo_solve"):
        row = f"{kern:<12}" + "".join(f"{results[(n, kern)] * 1e3:>10.2f}ms" for n in backends)
        if len(backends) == 2:
            row += f"{results[('python', kern)] / results[('compiled', kern)]:>9.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    sys.exit(main())
