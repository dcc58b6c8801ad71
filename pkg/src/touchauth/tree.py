"""CART decision tree for binary genuine/imposter labels.

Nodes are stored in flat arrays (sklearn style). An internal node sends a
sample left when ``x[feature] <= threshold``; a leaf stores the fraction of
its training samples that were genuine (label 0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

LEAF = -1


@njit(cache=True, nogil=True)
def expand_order(presorted, counts, n):
    """Per-feature sorted order of a bootstrap sample.

    ``presorted[f]`` lists the rows of X by ascending feature f; each row is
    repeated as often as the bootstrap drew it.
    """
    d = presorted.shape[0]
    out = np.empty((d, n), dtype=np.int64)
    for f in range(d):
        k = 0
        for r in presorted[f]:
            for _ in range(counts[r]):
                out[f, k] = r
                k += 1
    return out


@njit(cache=True, nogil=True)
def _best_split(XT, y, order, start, end, features, min_leaf):
    """Lowest weighted-Gini (feature, threshold) over midpoints of distinct values.

    ``XT`` is the transposed (feature-major) design matrix and
    ``order[f, start:end]`` holds the node's rows sorted by feature f. Returns
    feature -1 when no candidate leaves ``min_leaf`` samples on each side.
    """
    n = end - start
    total1 = 0
    for i in range(start, end):
        total1 += y[order[0, i]]
    total0 = n - total1

    best_feature = -1
    best_threshold = 0.0
    best_cost = np.inf
    for f in features:
        col = XT[f]
        rows = order[f]
        left1 = 0
        for i in range(start, end - 1):
            left1 += y[rows[i]]
            a = col[rows[i]]
            b = col[rows[i + 1]]
            if not a < b:
                continue
            nl = i - start + 1
            nr = n - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            left0 = nl - left1
            right1 = total1 - left1
            right0 = total0 - left0
            # n * weighted Gini, up to the constant n
            cost = -(left0 * left0 + left1 * left1) / nl - (right0 * right0 + right1 * right1) / nr
            if cost < best_cost:
                best_cost = cost
                best_feature = f
                thr = a + (b - a) / 2.0
                if thr >= b:
                    thr = a
                best_threshold = thr
    return best_feature, best_threshold


@njit(cache=True, nogil=True)
def _partition(XT, order, start, end, feature, threshold, buf, goes_left):
    """Stable in-place split of every feature's segment; returns the boundary.

    The split feature's segment is already ordered, so its prefix up to the
    threshold is the left child; other features follow a per-row flag.
    """
    col = XT[feature]
    rows = order[feature]
    mid = start
    while mid < end and col[rows[mid]] <= threshold:
        goes_left[rows[mid]] = 1
        mid += 1
    for i in range(mid, end):
        goes_left[rows[i]] = 0
    for g in range(order.shape[0]):
        if g == feature:
            continue
        rows = order[g]
        nl = 0
        nr = 0
        for i in range(start, end):
            r = rows[i]
            if goes_left[r]:
                rows[start + nl] = r
                nl += 1
            else:
                buf[nr] = r
                nr += 1
        for j in range(nr):
            rows[start + nl + j] = buf[j]
    return mid


@njit(cache=True, nogil=True)
def _splitmix(state):
    state[0] += np.uint64(0x9E3779B97F4A7C15)
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def _shuffle(a, state):
    for i in range(a.shape[0] - 1, 0, -1):
        j = int((_splitmix(state) >> np.uint64(11)) * (1.0 / 9007199254740992.0) * (i + 1))
        a[i], a[j] = a[j], a[i]


@njit(cache=True, nogil=True)
def _grow(XT, y, order, max_depth, min_leaf, mtry, seed):
    """Depth-first growth; nodes are numbered in preorder, left child first.

    ``max_depth`` < 0 means unlimited. Returns the node arrays.
    """
    n_features = XT.shape[0]
    n = order.shape[1]
    cap = 2 * n + 1
    feature = np.full(cap, LEAF, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, LEAF, dtype=np.int64)
    right = np.full(cap, LEAF, dtype=np.int64)
    value = np.zeros(cap)
    count = np.zeros(cap, dtype=np.int64)
    genuine = np.zeros(cap, dtype=np.int64)

    buf = np.empty(n, dtype=np.int64)
    goes_left = np.zeros(XT.shape[1], dtype=np.uint8)
    perm = np.arange(n_features)
    state = np.array([seed], dtype=np.uint64)

    stack_node = np.empty(cap, dtype=np.int64)
    stack_start = np.empty(cap, dtype=np.int64)
    stack_end = np.empty(cap, dtype=np.int64)
    stack_depth = np.empty(cap, dtype=np.int64)

    g = 0
    for i in range(n):
        g += 1 - y[order[0, i]]
    count[0] = n
    genuine[0] = g
    value[0] = g / n
    n_nodes = 1
    top = 0
    stack_node[0], stack_start[0], stack_end[0], stack_depth[0] = 0, 0, n, 0
    top = 1
    while top > 0:
        top -= 1
        node = stack_node[top]
        start = stack_start[top]
        end = stack_end[top]
        depth = stack_depth[top]
        size = end - start
        if genuine[node] == 0 or genuine[node] == size:
            continue
        if (max_depth >= 0 and depth >= max_depth) or size < 2 * min_leaf:
            continue
        _shuffle(perm, state)
        f, thr = _best_split(XT, y, order, start, end, perm[:mtry], min_leaf)
        if f < 0 and mtry < n_features:
            f, thr = _best_split(XT, y, order, start, end, perm[mtry:], min_leaf)
        if f < 0:
            continue
        mid = _partition(XT, order, start, end, f, thr, buf, goes_left)
        lg = 0
        for i in range(start, mid):
            lg += 1 - y[order[0, i]]
        lc, rc = n_nodes, n_nodes + 1
        n_nodes += 2
        feature[node] = f
        threshold[node] = thr
        left[node] = lc
        right[node] = rc
        count[lc] = mid - start
        count[rc] = end - mid
        genuine[lc] = lg
        genuine[rc] = genuine[node] - lg
        value[lc] = lg / (mid - start)
        value[rc] = (genuine[node] - lg) / (end - mid)
        # right pushed first so the left subtree is expanded first
        stack_node[top], stack_start[top], stack_end[top], stack_depth[top] = rc, mid, end, depth + 1
        stack_node[top + 1], stack_start[top + 1], stack_end[top + 1], stack_depth[top + 1] = lc, start, mid, depth + 1
        top += 2
    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
        count[:n_nodes].copy(),
    )


@dataclass
class DecisionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray

    @property
    def node_count(self) -> int:
        return self.feature.shape[0]

    @property
    def depth(self) -> int:
        depth = np.zeros(self.node_count, dtype=int)
        for i in range(self.node_count):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row of ``X``."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            f = self.feature[node]
            active = f != LEAF
            if not active.any():
                return node
            r, nd = rows[active], node[active]
            go_left = X[r, f[active]] <= self.threshold[nd]
            node[active] = np.where(go_left, self.left[nd], self.right[nd])

    def genuine_fraction(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "n_samples": self.n_samples.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=float),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["value"], dtype=float),
            np.asarray(d["n_samples"], dtype=np.int64),
        )


def presort(X: np.ndarray) -> np.ndarray:
    """Row order of X by each feature, shape (n_features, n_samples)."""
    return np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T.astype(np.int64))


def train_tree(
    X: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    max_depth: int | None = None,
    min_leaf: int = 1,
    features_per_split: int | None = None,
    sample_idx: np.ndarray | None = None,
    presorted: np.ndarray | None = None,
) -> DecisionTree:
    """Grow a tree on ``X[sample_idx]`` (rows may repeat, as in a bootstrap).

    At each node ``features_per_split`` candidate features are drawn at
    random (the stream is seeded from ``rng``). If none of them can split the
    node, the remaining features are tried before the node is made a leaf, so
    an unrestricted tree always separates distinct points. ``presorted`` (from
    :func:`presort`) can be shared across the trees of a forest.
    """
    X = np.asarray(X, dtype=np.float64)
    XT = np.ascontiguousarray(X.T)
    y = np.ascontiguousarray(y, dtype=np.int64)
    n_features = X.shape[1]
    mtry = n_features if features_per_split is None else min(max(features_per_split, 1), n_features)
    if sample_idx is None:
        sample_idx = np.arange(X.shape[0], dtype=np.int64)
    sample_idx = np.asarray(sample_idx, dtype=np.int64)
    if sample_idx.size == 0:
        raise ValueError("cannot grow a tree on zero samples")
    if presorted is None:
        presorted = presort(X)
    counts = np.bincount(sample_idx, minlength=X.shape[0])
    order = expand_order(presorted, counts, sample_idx.size)
    seed = int(rng.integers(0, 2**63))
    depth = -1 if max_depth is None else int(max_depth)
    return DecisionTree(*_grow(XT, y, order, depth, int(min_leaf), mtry, np.uint64(seed)))
