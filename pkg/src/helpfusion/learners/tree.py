"""CART decision tree (Gini) and a bagged random forest built on it."""

from __future__ import annotations

import math

import numpy as np

from ._backend import kernels
from .base import Model, TrainSet


class TreeStructure:
    """Flat node arrays of one fitted tree."""

    __slots__ = ("feature", "threshold", "left", "right", "n_pos", "n")

    def __init__(self, feature, threshold, left, right, n_pos, n):
        self.feature = np.ascontiguousarray(feature, dtype=np.int64)
        self.threshold = np.ascontiguousarray(threshold, dtype=np.float64)
        self.left = np.ascontiguousarray(left, dtype=np.int64)
        self.right = np.ascontiguousarray(right, dtype=np.int64)
        self.n_pos = np.ascontiguousarray(n_pos, dtype=np.int64)
        self.n = np.ascontiguousarray(n, dtype=np.int64)

    @property
    def node_count(self) -> int:
        return len(self.feature)

    def depth(self) -> int:
        best, stack = 0, [(0, 0)]
        while stack:
            node, d = stack.pop()
            best = max(best, d)
            if self.feature[node] >= 0:
                stack.append((self.left[node], d + 1))
                stack.append((self.right[node], d + 1))
        return best

    def apply(self, X) -> np.ndarray:
        return kernels.tree_apply(self.feature, self.threshold, self.left, self.right, X)

    def leaf_fraction(self, X) -> np.ndarray:
        leaves = self.apply(X)
        return self.n_pos[leaves] / self.n[leaves]

    def votes(self, X) -> np.ndarray:
        # leaf majority with ties voting true
        leaves = self.apply(X)
        return 2 * self.n_pos[leaves] >= self.n[leaves]

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in self.__slots__}

    @classmethod
    def from_dict(cls, d):
        return cls(*(d[k] for k in cls.__slots__))

    def __eq__(self, other):
        return isinstance(other, TreeStructure) and all(
            np.array_equal(getattr(self, k), getattr(other, k)) for k in self.__slots__)


def tree_seeds(seed, count):
    """Per-tree ``(bootstrap generator, split-sampling seed)`` pairs derived from one seed."""
    out = []
    for child in np.random.SeedSequence(int(seed)).spawn(count):
        split_seed = int(child.generate_state(1, dtype=np.uint64)[0])
        out.append((np.random.default_rng(child), split_seed))
    return out


def grow(train: TrainSet, samples, max_depth, min_samples_split, max_features, split_seed):
    y = train.targets.astype(np.uint8)
    arrays = kernels.grow_tree(train.features, y, np.ascontiguousarray(samples, dtype=np.intp),
                               int(max_depth), int(min_samples_split), int(max_features),
                               np.uint64(split_seed))
    return TreeStructure(*arrays)


class DecisionTree(Model):
    algorithm = "tree"

    def __init__(self, feature_dim, structure: TreeStructure):
        super().__init__(feature_dim)
        self.structure = structure

    @classmethod
    def fit(cls, train: TrainSet, params, seed):
        max_features = params.tree_max_features or train.dim
        _, split_seed = tree_seeds(seed, 1)[0]
        s = grow(train, np.arange(len(train.targets)), params.tree_max_depth,
                 params.tree_min_samples_split, min(max_features, train.dim), split_seed)
        return cls(train.dim, s)

    def score_batch(self, X):
        return self.structure.leaf_fraction(self.check_input(X))

    def params_dict(self):
        return self.structure.to_dict()

    @classmethod
    def from_params(cls, feature_dim, p):
        return cls(feature_dim, TreeStructure.from_dict(p))


class RandomForest(Model):
    """Bagged Gini trees; the score is the fraction of trees voting true."""

    algorithm = "forest"

    def __init__(self, feature_dim, trees):
        super().__init__(feature_dim)
        self.trees = list(trees)

    @classmethod
    def fit(cls, train: TrainSet, params, seed):
        n = len(train.targets)
        d = train.dim
        max_features = params.forest_max_features or max(1, int(math.isqrt(d)))
        trees = []
        for rng, split_seed in tree_seeds(seed, params.forest_n_estimators):
            if params.forest_bootstrap:
                samples = rng.integers(0, n, size=n)
            else:
                samples = np.arange(n)
            trees.append(grow(train, samples, params.forest_max_depth,
                              params.forest_min_samples_split, min(max_features, d), split_seed))
        return cls(d, trees)

    def score_batch(self, X):
        X = self.check_input(X)
        votes = np.zeros(X.shape[0], dtype=np.int64)
        for t in self.trees:
            votes += t.votes(X)
        return votes / len(self.trees)

    def params_dict(self):
        return {"trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_params(cls, feature_dim, p):
        return cls(feature_dim, [TreeStructure.from_dict(t) for t in p["trees"]])
