from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .forest import _check_binary, predict_from_score


class KNNAuthenticator(BaseEstimator, ClassifierMixin):
    """Exact brute-force k-nearest-neighbour scorer.

    The score of a query is the fraction of its ``n_neighbors`` nearest
    reference samples (Euclidean) that are genuine. Equal distances are
    resolved in favour of the earlier reference sample. Inputs are expected to
    be standardized already.
    """

    def __init__(self, n_neighbors=5, chunk_size=512):
        self.n_neighbors = n_neighbors
        self.chunk_size = chunk_size

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        if not 1 <= self.n_neighbors <= X.shape[0]:
            raise ValueError(f"n_neighbors={self.n_neighbors} must lie in [1, {X.shape[0]}]")
        self.X_ = X
        self.y_ = _check_binary(y)
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.array([0, 1])
        return self

    def kneighbors(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Distances and reference indices of the k nearest neighbours, nearest first."""
        check_is_fitted(self, "X_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        k = self.n_neighbors
        dist_out = np.empty((X.shape[0], k))
        idx_out = np.empty((X.shape[0], k), dtype=np.int64)
        for start in range(0, X.shape[0], self.chunk_size):
            q = X[start : start + self.chunk_size]
            # accumulate one feature at a time: bounded memory, fixed summation order
            d = np.zeros((q.shape[0], self.X_.shape[0]))
            for j in range(self.n_features_in_):
                d += (q[:, j, None] - self.X_[None, :, j]) ** 2
            np.sqrt(d, out=d)
            kth = np.partition(d, k - 1, axis=1)[:, k - 1]
            for row in range(q.shape[0]):
                cand = np.flatnonzero(d[row] <= kth[row])
                cand = cand[np.argsort(d[row, cand], kind="stable")][:k]
                idx_out[start + row] = cand
                dist_out[start + row] = d[row, cand]
        return dist_out, idx_out

    def genuine_score(self, X) -> np.ndarray:
        _, idx = self.kneighbors(X)
        return (self.y_[idx] == 0).mean(axis=1)

    def predict_proba(self, X) -> np.ndarray:
        score = self.genuine_score(X)
        return np.column_stack([score, 1.0 - score])

    def predict(self, X) -> np.ndarray:
        return predict_from_score(self.genuine_score(X))

    def to_dict(self) -> dict:
        check_is_fitted(self, "X_")
        return {
            "kind": "knn",
            "params": self.get_params(),
            "X": self.X_.tolist(),
            "y": self.y_.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KNNAuthenticator":
        return cls(**d["params"]).fit(np.asarray(d["X"], dtype=float), np.asarray(d["y"]))
