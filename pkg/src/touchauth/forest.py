from __future__ import annotations

import math

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .tree import DecisionTree, presort, train_tree

THRESHOLD = 0.5


def _check_binary(y):
    labels = np.unique(y)
    if not np.isin(labels, (0, 1)).all():
        raise ValueError(f"labels must be 0 (genuine) or 1 (imposter), got {labels}")
    return y.astype(np.int64)


def predict_from_score(score: np.ndarray, threshold: float = THRESHOLD) -> np.ndarray:
    """Label 0 (genuine) where ``score >= threshold``, else 1."""
    return np.where(np.asarray(score) >= threshold, 0, 1)


def _fit_one(X, y, seed_seq, bootstrap, max_depth, min_leaf, mtry, presorted):
    rng = np.random.default_rng(seed_seq)
    n = X.shape[0]
    sample_idx = rng.integers(0, n, n) if bootstrap else np.arange(n)
    return train_tree(X, y, rng, max_depth, min_leaf, mtry, sample_idx, presorted)


class RandomForestAuthenticator(BaseEstimator, ClassifierMixin):
    """Random forest scoring how likely a sample is to come from the genuine user.

    Parameters
    ----------
    n_estimators : int, default=100
    max_depth : int or None, default=None
        None grows each tree until its leaves are pure.
    min_samples_leaf : int, default=1
    max_features : int, "sqrt" or None, default="sqrt"
        Candidate features drawn at each split; "sqrt" is floor(sqrt(n_features)).
    bootstrap : bool, default=True
    random_state : int, default=0
        Root of one independent RNG stream per tree, so the forest does not
        depend on ``n_jobs``.
    n_jobs : int or None, default=None
    """

    def __init__(
        self,
        n_estimators=100,
        max_depth=None,
        min_samples_leaf=1,
        max_features="sqrt",
        bootstrap=True,
        random_state=0,
        n_jobs=None,
    ):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _mtry(self, n_features):
        if self.max_features is None:
            return n_features
        if self.max_features == "sqrt":
            return max(1, math.isqrt(n_features))
        return int(self.max_features)

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        y = _check_binary(y)
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.array([0, 1])
        X = np.ascontiguousarray(X)
        seeds = np.random.SeedSequence(self.random_state).spawn(self.n_estimators)
        mtry = self._mtry(X.shape[1])
        presorted = presort(X)
        self.estimators_ = Parallel(n_jobs=self.n_jobs, prefer="threads")(
            delayed(_fit_one)(X, y, s, self.bootstrap, self.max_depth, self.min_samples_leaf, mtry, presorted)
            for s in seeds
        )
        return self

    def genuine_score(self, X) -> np.ndarray:
        """Mean over trees of the genuine fraction in the leaf each sample reaches."""
        check_is_fitted(self, "estimators_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        total = np.zeros(X.shape[0])
        for tree in self.estimators_:
            total += tree.genuine_fraction(X)
        return total / len(self.estimators_)

    def predict_proba(self, X) -> np.ndarray:
        score = self.genuine_score(X)
        return np.column_stack([score, 1.0 - score])

    def predict(self, X) -> np.ndarray:
        return predict_from_score(self.genuine_score(X))

    def to_dict(self) -> dict:
        check_is_fitted(self, "estimators_")
        return {
            "kind": "random_forest",
            "params": self.get_params(),
            "n_features_in": self.n_features_in_,
            "trees": [t.to_dict() for t in self.estimators_],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RandomForestAuthenticator":
        model = cls(**d["params"])
        model.n_features_in_ = d["n_features_in"]
        model.classes_ = np.array([0, 1])
        model.estimators_ = [DecisionTree.from_dict(t) for t in d["trees"]]
        return model
