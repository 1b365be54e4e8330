"""Boosted tree ensembles: least-squares gradient boosting, second-order
regularized boosting, and AdaBoost.R2."""

from __future__ import annotations

import math

import numpy as np

from .ensembles import EnsembleModel
from .exceptions import ShapeMismatch
from .rng import stream
from .trees import RegressionTree, fit_cart, remap_tree_features


def _as_xy(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ShapeMismatch("X must be (n, p) and y (n,)")
    return X, y


def fit_gradient_boosting(X, y, n_estimators=100, learning_rate=0.1, max_depth=3,
                          min_samples_split=2, min_samples_leaf=1, subsample=1.0,
                          seed=0) -> EnsembleModel:
    """Stagewise least-squares boosting.

    Stage m fits a CART to the residuals y - F on a without-replacement row
    subsample, then F advances by learning_rate times the tree.  Prediction
    is init_value + learning_rate * sum(tree outputs).
    """
    X, y = _as_xy(X, y)
    if n_estimators < 1 or learning_rate <= 0 or not 0.0 < subsample <= 1.0:
        raise ValueError("invalid boosting hyperparameters")
    n = X.shape[0]
    init = float(y.mean())
    F = np.full(n, init)
    rng = stream(seed)
    trees = []
    for _ in range(int(n_estimators)):
        if subsample < 1.0:
            k = max(1, math.floor(subsample * n))
            idx = np.sort(rng.permutation(n)[:k])
        else:
            idx = np.arange(n)
        tree = fit_cart(X[idx], y[idx] - F[idx], max_depth=max_depth,
                        min_samples_split=min_samples_split,
                        min_samples_leaf=min_samples_leaf, rng=rng)
        F += learning_rate * tree.predict(X)
        trees.append(tree)
    return EnsembleModel(
        kind="gradient_boosting", trees=tuple(trees), learning_rate=float(learning_rate),
        init_value=init, seed=seed,
        params={"n_estimators": int(n_estimators), "learning_rate": learning_rate,
                "max_depth": max_depth, "min_samples_split": min_samples_split,
                "min_samples_leaf": min_samples_leaf, "subsample": subsample},
    )


def _soft(g: np.ndarray, alpha: float):
    return np.sign(g) * np.maximum(np.abs(g) - alpha, 0.0)


class _GainTreeBuilder:
    """Second-order tree on squared loss: gradients g = F - y, unit hessians.

    Split gain is 0.5 * (G_L'^2/(H_L+lam) + G_R'^2/(H_R+lam) - G'^2/(H+lam))
    with G' the soft-thresholded gradient sum; leaf weight is
    -lr * G'/(H+lam).  Splits require strictly positive gain.
    """

    def __init__(self, X, g, max_depth, reg_alpha, reg_lambda, lr):
        self.X = X
        self.g = g
        self.max_depth = math.inf if max_depth is None else max_depth
        self.alpha = float(reg_alpha)
        self.lam = float(reg_lambda)
        self.lr = lr
        self.nodes = []

    def build(self) -> RegressionTree:
        self._grow(np.arange(self.X.shape[0], dtype=np.intp), 0)
        f, t, l, r, v, n = zip(*self.nodes)
        return RegressionTree(
            feature=np.array(f, dtype=np.int32), threshold=np.array(t, dtype=np.float64),
            left=np.array(l, dtype=np.int32), right=np.array(r, dtype=np.int32),
            value=np.array(v, dtype=np.float64), n_samples=np.array(n, dtype=np.int64),
            n_features=self.X.shape[1],
        )

    def _score(self, gsum, h):
        s = _soft(np.asarray(gsum), self.alpha)
        return s * s / (h + self.lam)

    def _grow(self, idx, depth) -> int:
        g_node = self.g[idx]
        m = idx.size
        G = g_node.sum()
        weight = float(-self.lr * _soft(np.float64(G), self.alpha) / (m + self.lam))
        pos = len(self.nodes)
        self.nodes.append(None)
        split = None
        if depth < self.max_depth and m >= 2:
            split = self._find_split(idx, g_node, G)
        if split is None:
            self.nodes[pos] = (-1, 0.0, -1, -1, weight, int(m))
            return pos
        j, thr, left_local, right_local = split
        left = self._grow(idx[left_local], depth + 1)
        right = self._grow(idx[right_local], depth + 1)
        self.nodes[pos] = (int(j), float(thr), left, right, weight, int(m))
        return pos

    def _find_split(self, idx, g_node, G):
        m = idx.size
        Xn = self.X[idx]
        order = Xn.argsort(axis=0, kind="stable")
        Xs = np.take_along_axis(Xn, order, axis=0)
        csum = g_node[order].cumsum(axis=0)
        GL = csum[:-1]
        HL = np.arange(1, m, dtype=np.float64)[:, None]
        gain = 0.5 * (self._score(GL, HL) + self._score(G - GL, m - HL)
                      - self._score(np.float64(G), float(m)))
        valid = Xs[1:] > Xs[:-1]
        gain = np.where(valid, gain, -np.inf)
        best = gain.max()
        if not best > 0.0:
            return None
        # tolerance tie-break mirrors the CART builder: lowest feature, then
        # lowest threshold, among gains equal up to summation noise
        eps = 1e-12 * (float(g_node @ g_node) + best)
        flat = int(np.argmax(gain.T >= best - eps))
        col, pos = divmod(flat, m - 1)
        a, b = Xs[pos, col], Xs[pos + 1, col]
        thr = (a + b) / 2.0
        if thr >= b:
            thr = a
        return int(col), float(thr), order[:pos + 1, col], order[pos + 1:, col]


def fit_second_order_boosting(X, y, n_estimators=100, learning_rate=0.3, max_depth=3,
                              subsample=1.0, colsample_bytree=1.0, reg_alpha=0.0,
                              reg_lambda=0.0, seed=0) -> EnsembleModel:
    """Regularized second-order boosting on squared loss.

    Shrinkage is folded into leaf weights, so prediction is
    init_value + sum(tree outputs).  Each tree sees a without-replacement row
    subsample and a ceil(colsample_bytree * p) column subsample.
    """
    X, y = _as_xy(X, y)
    if reg_alpha < 0 or reg_lambda < 0 or not 0 < subsample <= 1 or not 0 < colsample_bytree <= 1:
        raise ValueError("invalid boosting hyperparameters")
    n, p = X.shape
    init = float(y.mean())
    F = np.full(n, init)
    rng = stream(seed)
    n_cols = min(p, max(1, math.ceil(colsample_bytree * p)))
    trees = []
    for _ in range(int(n_estimators)):
        if subsample < 1.0:
            k = max(1, math.floor(subsample * n))
            idx = np.sort(rng.permutation(n)[:k])
        else:
            idx = np.arange(n)
        cols = np.sort(rng.choice(p, size=n_cols, replace=False)) if n_cols < p \
            else np.arange(p)
        g = F[idx] - y[idx]
        builder = _GainTreeBuilder(np.ascontiguousarray(X[np.ix_(idx, cols)]), g,
                                   max_depth, reg_alpha, reg_lambda, learning_rate)
        tree = remap_tree_features(builder.build(), cols, p)
        F += tree.predict(X)
        trees.append(tree)
    return EnsembleModel(
        kind="second_order_boosting", trees=tuple(trees), learning_rate=float(learning_rate),
        init_value=init, seed=seed,
        params={"n_estimators": int(n_estimators), "learning_rate": learning_rate,
                "max_depth": max_depth, "subsample": subsample,
                "colsample_bytree": colsample_bytree, "reg_alpha": reg_alpha,
                "reg_lambda": reg_lambda},
    )


_ADABOOST_PERFECT_WEIGHT = math.log(1e12)


def fit_adaboost_r2(X, y, n_estimators=50, learning_rate=1.0, loss="linear",
                    base_tree_params=None, seed=0) -> EnsembleModel:
    """AdaBoost.R2 (Drucker) with weighted-median prediction.

    Per round: weighted bootstrap, fit a tree, normalize absolute errors by
    the max, shape them by the loss, and reweight by beta^(lr*(1-L)).  A
    perfect round keeps the tree with a large finite weight and stops; an
    average loss >= 0.5 stops boosting (the offending tree is kept only when
    it is the first).
    """
    if loss not in ("linear", "square", "exponential"):
        raise ValueError(f"unknown loss {loss!r}")
    X, y = _as_xy(X, y)
    n = X.shape[0]
    base = {"max_depth": 3}
    base.update(base_tree_params or {})
    w = np.full(n, 1.0 / n)
    rng = stream(seed)
    trees, weights = [], []
    for _ in range(int(n_estimators)):
        idx = rng.choice(n, size=n, replace=True, p=w)
        tree = fit_cart(X[idx], y[idx], rng=rng, **base)
        err = np.abs(y - tree.predict(X))
        emax = err.max()
        if emax == 0.0:
            trees.append(tree)
            weights.append(_ADABOOST_PERFECT_WEIGHT)
            break
        L = err / emax
        if loss == "square":
            L = L * L
        elif loss == "exponential":
            L = 1.0 - np.exp(-L)
        L_bar = float((w * L).sum())
        if L_bar >= 0.5:
            if not trees:
                trees.append(tree)
                weights.append(0.0)
            break
        beta = L_bar / (1.0 - L_bar)
        trees.append(tree)
        weights.append(learning_rate * math.log(1.0 / beta))
        w = w * beta ** (learning_rate * (1.0 - L))
        w = w / w.sum()
    return EnsembleModel(
        kind="adaboost_r2", trees=tuple(trees), learning_rate=float(learning_rate),
        tree_weights=tuple(weights), seed=seed,
        params={"n_estimators": int(n_estimators), "learning_rate": learning_rate,
                "loss": loss, "base_tree_params": base},
    )
