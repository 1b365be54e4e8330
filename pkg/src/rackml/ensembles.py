"""Tree ensembles: bagging, random forest, extra trees, and the shared ensemble container."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ShapeMismatch
from .rng import stream
from .trees import RegressionTree, fit_cart, remap_tree_features

AVERAGING_KINDS = ("bagging", "random_forest", "extra_trees")
BOOSTING_KINDS = ("gradient_boosting", "second_order_boosting")
ALL_KINDS = AVERAGING_KINDS + BOOSTING_KINDS + ("adaboost_r2",)


@dataclass(eq=False)
class EnsembleModel:
    kind: str
    trees: tuple[RegressionTree, ...]
    learning_rate: float = 1.0
    init_value: float = 0.0
    tree_weights: tuple[float, ...] | None = None  # adaboost only
    seed: int = 0
    params: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return self.trees[0].n_features

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ShapeMismatch(f"expected {self.n_features} feature columns, got {X.shape}")
        if self.kind in AVERAGING_KINDS:
            acc = np.zeros(X.shape[0])
            for t in self.trees:
                acc += t.predict(X)
            return acc / len(self.trees)
        if self.kind == "gradient_boosting":
            acc = np.full(X.shape[0], self.init_value)
            for t in self.trees:
                acc += self.learning_rate * t.predict(X)
            return acc
        if self.kind == "second_order_boosting":
            acc = np.full(X.shape[0], self.init_value)
            for t in self.trees:
                acc += t.predict(X)
            return acc
        if self.kind == "adaboost_r2":
            preds = np.stack([t.predict(X) for t in self.trees])  # (T, n)
            return weighted_median(preds, np.asarray(self.tree_weights))
        raise ValueError(f"unknown ensemble kind {self.kind!r}")


def weighted_median(preds: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Per-column weighted median: the smallest sorted output whose cumulative
    weight reaches half of the total."""
    order = np.argsort(preds, axis=0, kind="stable")
    sorted_preds = np.take_along_axis(preds, order, axis=0)
    w = weights[order]                      # (T, n)
    cum = np.cumsum(w, axis=0)
    threshold = 0.5 * cum[-1]
    pick = (cum >= threshold).argmax(axis=0)
    return sorted_preds[pick, np.arange(preds.shape[1])]


def fit_bagging(X, y, n_estimators=10, max_samples=1.0, max_features=1.0,
                bootstrap=True, bootstrap_features=False, base_tree_params=None,
                seed=0) -> EnsembleModel:
    """Bag CART trees over row and column samples.

    Each estimator i draws from the stream (seed, i): first its row sample of
    ceil(max_samples * n) (with replacement iff ``bootstrap``), then its
    column sample of ceil(max_features * p) (with replacement iff
    ``bootstrap_features``).  Prediction is the unweighted mean.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, p = X.shape
    base = dict(base_tree_params or {})
    n_rows = min(n, max(1, math.ceil(max_samples * n)))
    n_cols = min(p, max(1, math.ceil(max_features * p)))
    trees = []
    for i in range(int(n_estimators)):
        rng = stream(seed, i)
        rows = rng.choice(n, size=n_rows, replace=True) if bootstrap \
            else np.sort(rng.choice(n, size=n_rows, replace=False))
        cols = rng.choice(p, size=n_cols, replace=True) if bootstrap_features \
            else np.sort(rng.choice(p, size=n_cols, replace=False))
        tree = fit_cart(X[np.ix_(rows, cols)], y[rows], rng=rng, **base)
        trees.append(remap_tree_features(tree, cols, p))
    return EnsembleModel(
        kind="bagging", trees=tuple(trees), seed=seed,
        params={"n_estimators": int(n_estimators), "max_samples": max_samples,
                "max_features": max_features, "bootstrap": bootstrap,
                "bootstrap_features": bootstrap_features, "base_tree_params": base},
    )


def fit_random_forest(X, y, n_estimators=100, max_depth=None, min_samples_split=2,
                      min_samples_leaf=1, max_features=1.0, seed=0) -> EnsembleModel:
    """Bootstrap n rows per tree; ``max_features`` applies per split inside the tree."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = X.shape[0]
    trees = []
    for i in range(int(n_estimators)):
        rng = stream(seed, i)
        rows = rng.choice(n, size=n, replace=True)
        trees.append(fit_cart(X[rows], y[rows], max_depth=max_depth,
                              min_samples_split=min_samples_split,
                              min_samples_leaf=min_samples_leaf,
                              max_features=max_features, rng=rng))
    return EnsembleModel(
        kind="random_forest", trees=tuple(trees), seed=seed,
        params={"n_estimators": int(n_estimators), "max_depth": max_depth,
                "min_samples_split": min_samples_split,
                "min_samples_leaf": min_samples_leaf, "max_features": max_features},
    )


def fit_extra_trees(X, y, n_estimators=100, max_depth=None, min_samples_split=2,
                    min_samples_leaf=1, max_features=1.0, seed=0) -> EnsembleModel:
    """As random forest but without bootstrap and with uniform random thresholds."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    trees = []
    for i in range(int(n_estimators)):
        rng = stream(seed, i)
        trees.append(fit_cart(X, y, max_depth=max_depth,
                              min_samples_split=min_samples_split,
                              min_samples_leaf=min_samples_leaf,
                              max_features=max_features, rng=rng, splitter="random"))
    return EnsembleModel(
        kind="extra_trees", trees=tuple(trees), seed=seed,
        params={"n_estimators": int(n_estimators), "max_depth": max_depth,
                "min_samples_split": min_samples_split,
                "min_samples_leaf": min_samples_leaf, "max_features": max_features},
    )
