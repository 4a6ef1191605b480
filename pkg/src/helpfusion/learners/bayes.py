"""Gaussian naive Bayes and the fair-coin baseline."""

from __future__ import annotations

import numpy as np

from .base import Model, TrainSet


class GaussianNB(Model):
    algorithm = "gaussian_nb"

    def __init__(self, feature_dim, prior_pos, mean_pos, var_pos, mean_neg, var_neg):
        super().__init__(feature_dim)
        self.prior_pos = float(prior_pos)
        self.mean_pos = np.asarray(mean_pos, dtype=np.float64)
        self.var_pos = np.asarray(var_pos, dtype=np.float64)
        self.mean_neg = np.asarray(mean_neg, dtype=np.float64)
        self.var_neg = np.asarray(var_neg, dtype=np.float64)

    @classmethod
    def fit(cls, train: TrainSet, params, seed=None):
        X, y = train.features, train.targets
        floor = params.nb_var_floor
        d = train.dim

        def moments(rows):
            if len(rows) == 0:
                return np.zeros(d), np.full(d, floor)
            return rows.mean(0), np.maximum(rows.var(0), floor)

        mp, vp = moments(X[y])
        mn, vn = moments(X[~y])
        return cls(d, y.mean(), mp, vp, mn, vn)

    def log_odds(self, X):
        X = self.check_input(X)
        # per-feature differences first, so identical class terms cancel exactly
        term_pos = -0.5 * np.log(self.var_pos) - (X - self.mean_pos) ** 2 / (2.0 * self.var_pos)
        term_neg = -0.5 * np.log(self.var_neg) - (X - self.mean_neg) ** 2 / (2.0 * self.var_neg)
        with np.errstate(divide="ignore", invalid="ignore"):
            prior = np.log(self.prior_pos) - np.log1p(-self.prior_pos)
            return prior + (term_pos - term_neg).sum(axis=1)

    def score_batch(self, X):
        lo = self.log_odds(X)
        out = np.empty_like(lo)
        pos = lo >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-lo[pos]))
        e = np.exp(lo[~pos])
        out[~pos] = e / (1.0 + e)
        return out

    def params_dict(self):
        return {"prior_pos": self.prior_pos, "mean_pos": self.mean_pos.tolist(),
                "var_pos": self.var_pos.tolist(), "mean_neg": self.mean_neg.tolist(),
                "var_neg": self.var_neg.tolist()}

    @classmethod
    def from_params(cls, feature_dim, p):
        return cls(feature_dim, p["prior_pos"], p["mean_pos"], p["var_pos"], p["mean_neg"], p["var_neg"])


class RandomBaseline(Model):
    """Scores are uniform draws from the model's own seeded stream; predictions are fair coins."""

    algorithm = "random_baseline"

    def __init__(self, feature_dim, seed, state=None):
        super().__init__(-1 if feature_dim is None else feature_dim)
        self.seed = int(seed)
        self.rng = np.random.default_rng(self.seed)
        if state is not None:
            self.rng.bit_generator.state = state

    @classmethod
    def fit(cls, train: TrainSet, params, seed):
        return cls(train.dim, seed)

    def check_input(self, X):
        if self.feature_dim < 0:
            X = np.asarray(X, dtype=np.float64)
            return X.reshape(1, -1) if X.ndim == 1 else X
        return super().check_input(X)

    def score_batch(self, X):
        X = self.check_input(X)
        return self.rng.random(X.shape[0])

    def params_dict(self):
        return {"seed": self.seed, "state": self.rng.bit_generator.state}

    @classmethod
    def from_params(cls, feature_dim, p):
        return cls(feature_dim, p["seed"], p.get("state"))
