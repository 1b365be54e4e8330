"""Shapley attribution for fitted models.

``tree_shap`` is the exact path-dependent polynomial-time algorithm: the
conditional expectation of a subset walk is defined by each tree's training
cover counts, so no background dataset is needed.  ``brute_force_shapley``
is the test oracle (exponential subset enumeration over the same value
function, or over an interventional background when one is supplied), and
``sampling_shap`` is the permutation-sampling fallback for non-tree models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .ensembles import AVERAGING_KINDS, EnsembleModel
from .exceptions import TooManyFeatures, UnsupportedModel
from .rng import stream
from .trees import RegressionTree


@dataclass(frozen=True)
class ShapExplanation:
    base_value: float
    phi: np.ndarray
    prediction: float
    feature_names: tuple[str, ...] | None = None

    def to_dict(self) -> dict:
        return {
            "base_value": self.base_value,
            "phi": [float(v) for v in self.phi],
            "prediction": self.prediction,
            "features": list(self.feature_names) if self.feature_names else None,
        }


# --- path-dependent TreeSHAP (Lundberg's EXTEND/UNWIND path algorithm) ---

def _extend(path, pz, po, pi):
    l = len(path)
    out = [e.copy() for e in path]
    out.append([pi, pz, po, 1.0 if l == 0 else 0.0])
    for i in range(l - 1, -1, -1):
        out[i + 1][3] += po * out[i][3] * (i + 1) / (l + 1)
        out[i][3] = pz * out[i][3] * (l - i) / (l + 1)
    return out


def _unwind(path, idx):
    last = len(path) - 1
    z_i, o_i = path[idx][1], path[idx][2]
    out = [e.copy() for e in path]
    n = out[last][3]
    for i in range(last - 1, -1, -1):
        if o_i != 0.0:
            tmp = out[i][3]
            out[i][3] = n * (last + 1) / ((i + 1) * o_i)
            n = tmp - out[i][3] * z_i * (last - i) / (last + 1)
        else:
            out[i][3] = out[i][3] * (last + 1) / (z_i * (last - i))
    for i in range(idx, last):
        out[i][0], out[i][1], out[i][2] = out[i + 1][0], out[i + 1][1], out[i + 1][2]
    return out[:last]


def _shap_single_tree(tree: RegressionTree, x: np.ndarray, phi: np.ndarray, scale: float):
    feature, thr = tree.feature, tree.threshold
    left, right = tree.left, tree.right
    value, cover = tree.value, tree.n_samples

    def recurse(node, path, pz, po, pi):
        path = _extend(path, pz, po, pi)
        f = feature[node]
        if f < 0:
            leaf = value[node] * scale
            for i in range(1, len(path)):
                w = math.fsum(e[3] for e in _unwind(path, i))
                phi[path[i][0]] += w * (path[i][2] - path[i][1]) * leaf
            return
        l, r = left[node], right[node]
        hot, cold = (l, r) if x[f] <= thr[node] else (r, l)
        iz = io = 1.0
        for k in range(len(path)):
            if path[k][0] == f:
                iz, io = path[k][1], path[k][2]
                path = _unwind(path, k)
                break
        c = cover[node]
        recurse(hot, path, iz * cover[hot] / c, io, int(f))
        recurse(cold, path, iz * cover[cold] / c, 0.0, int(f))

    recurse(0, [], 1.0, 1.0, -1)


def _tree_expectation(tree: RegressionTree) -> float:
    """Cover-weighted mean of leaf values (the tree's output expectation)."""
    total = 0.0
    stack = [(0, 1.0)]
    while stack:
        node, w = stack.pop()
        if tree.feature[node] < 0:
            total += w * tree.value[node]
        else:
            c = tree.n_samples[node]
            stack.append((tree.left[node], w * tree.n_samples[tree.left[node]] / c))
            stack.append((tree.right[node], w * tree.n_samples[tree.right[node]] / c))
    return total


def _tree_parts(model):
    """(trees, per-tree scale, offset) for additive tree models."""
    if isinstance(model, RegressionTree):
        return (model,), 1.0, 0.0
    if isinstance(model, EnsembleModel):
        if model.kind in AVERAGING_KINDS:
            return model.trees, 1.0 / len(model.trees), 0.0
        if model.kind == "gradient_boosting":
            return model.trees, model.learning_rate, model.init_value
        if model.kind == "second_order_boosting":
            return model.trees, 1.0, model.init_value
        raise UnsupportedModel(
            f"{model.kind} aggregates by weighted median, which is not additive; "
            "use sampling_shap")
    raise UnsupportedModel(f"{type(model).__name__} is not a tree model; use sampling_shap")


def tree_shap(model, x, feature_names=None) -> ShapExplanation:
    """Exact attribution for one instance of an additive tree model."""
    x = np.asarray(x, dtype=np.float64).ravel()
    trees, scale, offset = _tree_parts(model)
    phi = np.zeros(trees[0].n_features)
    base = offset
    for t in trees:
        _shap_single_tree(t, x, phi, scale)
        base += scale * _tree_expectation(t)
    prediction = float(model.predict(x[None, :])[0])
    return ShapExplanation(base_value=float(base), phi=phi, prediction=prediction,
                           feature_names=tuple(feature_names) if feature_names else None)


# --- oracles and sampling fallback ---

def _cover_walk(tree: RegressionTree, x, in_subset) -> float:
    def rec(node):
        f = tree.feature[node]
        if f < 0:
            return tree.value[node]
        l, r = tree.left[node], tree.right[node]
        if in_subset[f]:
            return rec(l) if x[f] <= tree.threshold[node] else rec(r)
        wl, wr = tree.n_samples[l], tree.n_samples[r]
        return (rec(l) * wl + rec(r) * wr) / (wl + wr)

    return rec(0)


def _value_function(model, x, background):
    p = x.size
    if background is not None:
        bg = background.X if isinstance(background, Dataset) else np.asarray(background, dtype=np.float64)

        def v(mask):
            M = bg.copy()
            for j in range(p):
                if mask >> j & 1:
                    M[:, j] = x[j]
            return float(model.predict(M).mean())

        return v
    trees, scale, offset = _tree_parts(model)

    def v(mask):
        in_subset = [(mask >> j & 1) == 1 for j in range(p)]
        return offset + scale * sum(_cover_walk(t, x, in_subset) for t in trees)

    return v


def brute_force_shapley(model, x, background=None, max_features: int = 10) -> np.ndarray:
    """Exact Shapley values by enumerating all feature subsets.

    With a background dataset the value function is interventional
    (features outside the subset are drawn from background rows); without
    one the model must be a tree kind and the subset walk uses training
    covers, matching tree_shap's conditional expectations.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    p = x.size
    if p > max_features:
        raise TooManyFeatures(f"{p} features exceeds limit {max_features}")
    v = _value_function(model, x, background)
    values = [v(mask) for mask in range(1 << p)]
    fact = [math.factorial(i) for i in range(p + 1)]
    phi = np.zeros(p)
    for mask in range(1 << p):
        s = bin(mask).count("1")
        w = fact[s] * fact[p - s - 1] / fact[p]
        for j in range(p):
            if not mask >> j & 1:
                phi[j] += w * (values[mask | (1 << j)] - values[mask])
    return phi


def sampling_shap(model, x, background, n_permutations: int = 200, seed: int = 0,
                  feature_names=None) -> ShapExplanation:
    """Permutation-sampling Shapley estimate for any fitted model.

    Marginal contributions are averaged over seeded random feature
    orderings with the interventional value function; the residual is
    spread equally so local accuracy holds exactly.
    """
    if n_permutations < 1:
        raise ValueError("n_permutations must be >= 1")
    bg = background.X if isinstance(background, Dataset) else np.asarray(background, dtype=np.float64)
    if bg.size == 0:
        raise ValueError("background must be non-empty")
    x = np.asarray(x, dtype=np.float64).ravel()
    p = x.size
    base = float(model.predict(bg).mean())
    fx = float(model.predict(x[None, :])[0])
    rng = stream(seed)
    phi = np.zeros(p)
    for _ in range(int(n_permutations)):
        order = rng.permutation(p)
        M = bg.copy()
        prev = base
        for j in order:
            M[:, j] = x[j]
            cur = float(model.predict(M).mean())
            phi[j] += cur - prev
            prev = cur
    phi /= n_permutations
    phi += (fx - base - phi.sum()) / p
    return ShapExplanation(base_value=base, phi=phi, prediction=fx,
                           feature_names=tuple(feature_names) if feature_names else None)


# --- global importance ---

@dataclass(frozen=True)
class ImportanceRanking:
    feature_names: tuple[str, ...]
    mean_abs_shap: np.ndarray
    ranks: tuple[int, ...]            # 1 = most important
    instance_values: np.ndarray       # (n, p) feature values
    instance_phis: np.ndarray         # (n, p)

    def to_dict(self) -> dict:
        return {
            "features": [
                {"name": n, "mean_abs_shap": float(m), "rank": r}
                for n, m, r in zip(self.feature_names, self.mean_abs_shap, self.ranks)
            ],
            "instances": [
                {"values": [float(v) for v in vals], "phis": [float(v) for v in phis]}
                for vals, phis in zip(self.instance_values, self.instance_phis)
            ],
        }

    def to_csv(self) -> str:
        """Flat beeswarm form: one line per (instance, feature)."""
        lines = ["instance,feature,value,phi,mean_abs_shap,rank"]
        rank_of = dict(zip(self.feature_names, self.ranks))
        mean_of = dict(zip(self.feature_names, self.mean_abs_shap))
        for i in range(self.instance_values.shape[0]):
            for j, name in enumerate(self.feature_names):
                lines.append(f"{i},{name},{self.instance_values[i, j]!r},"
                             f"{self.instance_phis[i, j]!r},"
                             f"{float(mean_of[name])!r},{rank_of[name]}")
        return "\n".join(lines) + "\n"


def shap_summary(model, Z, display_values=None, feature_names=None) -> ImportanceRanking:
    """Mean-|phi| global importance over a matrix of instances.

    ``Z`` is whatever the model consumes (transformed features for a
    pipeline model); ``display_values`` are the raw per-instance feature
    values exported for beeswarm plots (defaults to Z).
    """
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[0] < 1:
        raise ValueError("need a non-empty (n, p) matrix")
    n, p = Z.shape
    display = Z if display_values is None else np.asarray(display_values, dtype=np.float64)
    if feature_names is None:
        feature_names = tuple(f"x{j}" for j in range(p))
    phis = np.empty((n, p))
    for i in range(n):
        phis[i] = tree_shap(model, Z[i]).phi
    mean_abs = np.abs(phis).mean(axis=0)
    order = np.argsort(-mean_abs, kind="stable")
    ranks = np.empty(p, dtype=int)
    ranks[order] = np.arange(1, p + 1)
    return ImportanceRanking(
        feature_names=tuple(feature_names), mean_abs_shap=mean_abs,
        ranks=tuple(int(r) for r in ranks),
        instance_values=display.copy(), instance_phis=phis,
    )
