"""CART regression trees.

Greedy recursive partitioning on total child SSE.  Candidate thresholds are
midpoints between consecutive distinct sorted values; routing is
``x[feature] <= threshold`` to the left child.  Equal-SSE ties break to the
lowest feature index, then the lowest threshold, so fits are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ShapeMismatch
from .rng import stream


@dataclass(eq=False)
class RegressionTree:
    """Flat node arrays; leaves have feature == -1 and left == right == -1."""

    feature: np.ndarray    # int32
    threshold: np.ndarray  # float64 (0 at leaves)
    left: np.ndarray       # int32
    right: np.ndarray      # int32
    value: np.ndarray      # float64, mean of y reaching the node
    n_samples: np.ndarray  # int64 training cover
    n_features: int

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def is_leaf(self, i: int) -> bool:
        return self.feature[i] < 0

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ShapeMismatch(f"expected {self.n_features} feature columns, got {X.shape}")
        node = np.zeros(X.shape[0], dtype=np.intp)
        while True:
            f = self.feature[node]
            active = f >= 0
            if not active.any():
                break
            rows = np.nonzero(active)[0]
            cur = node[rows]
            go_left = X[rows, f[active]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])
        return self.value[node]


def _resolve_max_features(max_features, p: int) -> int:
    if max_features is None:
        return p
    if isinstance(max_features, float):
        return min(p, max(1, math.ceil(max_features * p)))
    return min(p, max(1, int(max_features)))


class _TreeBuilder:
    def __init__(self, X, y, max_depth, min_samples_split, min_samples_leaf,
                 max_features, rng, splitter):
        self.X = X
        self.y = y
        self.max_depth = math.inf if max_depth is None else max_depth
        self.mss = max(2, int(min_samples_split))
        self.msl = max(1, int(min_samples_leaf))
        self.k_features = _resolve_max_features(max_features, X.shape[1])
        self.rng = rng
        self.splitter = splitter
        self.nodes = []  # (feature, threshold, left, right, value, n_samples)
        n = X.shape[0]
        self._sizes = np.arange(1, n + 1, dtype=np.float64)[:, None]  # sliced per node

    def build(self) -> RegressionTree:
        self._grow(np.arange(self.X.shape[0], dtype=np.intp), 0)
        f, t, l, r, v, n = zip(*self.nodes)
        return RegressionTree(
            feature=np.array(f, dtype=np.int32),
            threshold=np.array(t, dtype=np.float64),
            left=np.array(l, dtype=np.int32),
            right=np.array(r, dtype=np.int32),
            value=np.array(v, dtype=np.float64),
            n_samples=np.array(n, dtype=np.int64),
            n_features=self.X.shape[1],
        )

    def _candidate_features(self, p: int):
        if self.k_features >= p:
            return None  # all features
        return np.sort(self.rng.choice(p, size=self.k_features, replace=False))

    def _grow(self, idx: np.ndarray, depth: int) -> int:
        y_node = self.y[idx]
        m = idx.size
        mean = y_node.mean()
        pos = len(self.nodes)
        self.nodes.append(None)  # reserve preorder slot
        split = None
        if depth < self.max_depth and m >= self.mss:
            split = self._find_split(idx, y_node - mean)
        if split is None:
            self.nodes[pos] = (-1, 0.0, -1, -1, float(mean), int(m))
            return pos
        j, thr, left_local, right_local = split
        left = self._grow(idx[left_local], depth + 1)
        right = self._grow(idx[right_local], depth + 1)
        self.nodes[pos] = (int(j), float(thr), left, right, float(mean), int(m))
        return pos

    def _find_split(self, idx, yc):
        m = idx.size
        feats = self._candidate_features(self.X.shape[1])
        if self.splitter == "random":
            return self._find_split_random(idx, yc, feats)
        Xn = self.X[idx] if feats is None else self.X[np.ix_(idx, feats)]
        order = Xn.argsort(axis=0, kind="stable")
        Xs = np.take_along_axis(Xn, order, axis=0)
        csum = yc[order].cumsum(axis=0)
        total = csum[-1]
        k = self._sizes[:m - 1]
        left_sum = csum[:-1]
        rest = total - left_sum
        gain = left_sum * left_sum / k + rest * rest / (m - k)
        valid = Xs[1:] > Xs[:-1]
        if self.msl > 1:
            valid &= (k >= self.msl) & ((m - k) >= self.msl)
        gain = np.where(valid, gain, -np.inf)
        best = gain.max()
        s = float(yc.sum())
        if not best - s * s / m > 0.0:  # SSE must strictly decrease
            return None
        # Equal-gain candidates (same partition reachable through several
        # features) differ only by summation-order noise; treat gains within
        # a relative epsilon as tied and take the lowest (feature, threshold).
        eps = 1e-12 * (float(yc @ yc) + best)
        flat = int(np.argmax(gain.T >= best - eps))
        col, pos = divmod(flat, m - 1)
        a, b = Xs[pos, col], Xs[pos + 1, col]
        thr = (a + b) / 2.0
        if thr >= b:  # adjacent floats: midpoint may round up and break the partition
            thr = a
        j = int(col) if feats is None else int(feats[col])
        return j, float(thr), order[:pos + 1, col], order[pos + 1:, col]

    def _find_split_random(self, idx, yc, feats):
        # Extra-trees style: one uniform threshold per non-constant candidate
        # feature (draws happen in ascending feature order), best SSE wins.
        m = idx.size
        p = self.X.shape[1]
        total = yc.sum()
        base = total * total / m
        best = (0.0, None, None)
        for j in (range(p) if feats is None else feats):
            col = self.X[idx, j]
            lo, hi = col.min(), col.max()
            if hi <= lo:
                continue
            thr = self.rng.uniform(lo, hi)
            go_left = col <= thr
            kk = int(go_left.sum())
            if kk < self.msl or (m - kk) < self.msl or kk == 0 or kk == m:
                continue
            ls = yc[go_left].sum()
            gain = ls * ls / kk + (total - ls) ** 2 / (m - kk) - base
            if gain > best[0]:
                best = (gain, int(j), float(thr))
        if best[1] is None:
            return None
        j, thr = best[1], best[2]
        go_left = self.X[idx, j] <= thr
        local = np.arange(m, dtype=np.intp)
        return j, thr, local[go_left], local[~go_left]


def fit_cart(X, y, max_depth=None, min_samples_split=2, min_samples_leaf=1,
             max_features=None, seed=0, rng=None, splitter="best") -> RegressionTree:
    """Fit a CART regression tree.

    ``max_features`` (int count or float fraction) limits the candidate
    features drawn per node from the seeded stream; ``splitter='random'``
    draws one uniform threshold per candidate feature instead of scanning
    midpoints.  Degenerate inputs produce a single leaf.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ShapeMismatch("X must be (n, p) and y (n,)")
    if X.shape[0] < 1:
        raise ValueError("need at least one row")
    if rng is None:
        rng = stream(seed)
    builder = _TreeBuilder(X, y, max_depth, min_samples_split, min_samples_leaf,
                           max_features, rng, splitter)
    return builder.build()


def tree_training_sse(tree: RegressionTree, X, y) -> float:
    pred = tree.predict(X)
    return float(((np.asarray(y, dtype=np.float64) - pred) ** 2).sum())


def remap_tree_features(tree: RegressionTree, column_ids: np.ndarray, n_features: int) -> RegressionTree:
    """Rewrite feature indices of a tree fit on a column subset back to the original matrix."""
    feat = tree.feature.copy()
    internal = feat >= 0
    feat[internal] = np.asarray(column_ids, dtype=np.int32)[feat[internal]]
    return RegressionTree(
        feature=feat, threshold=tree.threshold, left=tree.left, right=tree.right,
        value=tree.value, n_samples=tree.n_samples, n_features=n_features,
    )
