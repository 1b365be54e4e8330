"""Feature normalizer: per-column Yeo-Johnson transform followed by z-standardization.

Lambda is chosen per column by maximizing the profile log-likelihood

    LL(lambda) = -(n/2) * ln(var_biased(psi(x, lambda)))
                 + (lambda - 1) * sum(sign(x) * ln(|x| + 1))

with golden-section search on [-5, 5].  The mapping psi is monotone for all
lambda, so the transform preserves per-column rank order exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, ShapeMismatch

LAMBDA_LO, LAMBDA_HI = -5.0, 5.0
_GOLDEN_TOL = 1e-8
_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


def yeo_johnson(x: np.ndarray, lam: float) -> np.ndarray:
    """Apply the Yeo-Johnson map elementwise for a single lambda."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    # positive branch: ((x+1)^lam - 1)/lam, or log1p(x) at lam=0
    if abs(lam) < 1e-12:
        out[pos] = np.log1p(x[pos])
    else:
        out[pos] = np.expm1(lam * np.log1p(x[pos])) / lam
    # negative branch: -(((1-x)^(2-lam) - 1)/(2-lam)), or -log1p(-x) at lam=2
    neg = ~pos
    if abs(lam - 2.0) < 1e-12:
        out[neg] = -np.log1p(-x[neg])
    else:
        out[neg] = -np.expm1((2.0 - lam) * np.log1p(-x[neg])) / (2.0 - lam)
    return out


def yeo_johnson_inverse(u: np.ndarray, lam: float) -> np.ndarray:
    """Exact inverse of ``yeo_johnson``; raises DomainError off the image."""
    u = np.asarray(u, dtype=np.float64)
    out = np.empty_like(u)
    pos = u >= 0  # psi(0) = 0 and psi is increasing, so sign(u) == sign(x)
    if abs(lam) < 1e-12:
        out[pos] = np.expm1(u[pos])
    else:
        arg = lam * u[pos] + 1.0
        if np.any(arg <= 0.0):
            raise DomainError("inverse positive branch needs lambda*u + 1 > 0")
        out[pos] = np.expm1(np.log(arg) / lam)
    neg = ~pos
    if abs(lam - 2.0) < 1e-12:
        out[neg] = -np.expm1(-u[neg])
    else:
        arg = 1.0 - (2.0 - lam) * u[neg]
        if np.any(arg <= 0.0):
            raise DomainError("inverse negative branch needs 1 - (2-lambda)*u > 0")
        out[neg] = -np.expm1(np.log(arg) / (2.0 - lam))
    return out


def log_likelihood(x: np.ndarray, lam: float) -> float:
    """Profile log-likelihood of lambda for one column."""
    psi = yeo_johnson(x, lam)
    var = psi.var()  # biased variance
    if var <= 0.0:
        return -np.inf
    n = x.size
    return float(-0.5 * n * np.log(var) + (lam - 1.0) * np.sum(np.sign(x) * np.log1p(np.abs(x))))


def _golden_max(f, lo: float, hi: float, tol: float = _GOLDEN_TOL) -> float:
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


@dataclass(frozen=True)
class ColumnTransform:
    name: str
    lam: float
    post_mean: float
    post_std: float
    degenerate: bool


@dataclass(frozen=True)
class PowerTransformParams:
    columns: tuple[ColumnTransform, ...]

    @property
    def n_features(self) -> int:
        return len(self.columns)

    def to_list(self) -> list[dict]:
        return [
            {"name": c.name, "lambda": c.lam, "post_mean": c.post_mean,
             "post_std": c.post_std, "degenerate": c.degenerate}
            for c in self.columns
        ]

    @classmethod
    def from_list(cls, rows: list[dict]) -> "PowerTransformParams":
        return cls(tuple(
            ColumnTransform(r["name"], r["lambda"], r["post_mean"], r["post_std"], r["degenerate"])
            for r in rows
        ))


def fit_power_transform(X: np.ndarray, names=None) -> PowerTransformParams:
    """Fit lambda, mean and std per column.

    Constant columns get lambda 1 with the degenerate flag; they are centered
    but not scaled.  Ties in the likelihood break toward lambda = 1.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("X must be 2-d with at least two rows")
    if not np.isfinite(X).all():
        raise ValueError("X must be finite")
    p = X.shape[1]
    if names is None:
        names = [f"x{j}" for j in range(p)]
    cols = []
    for j in range(p):
        x = X[:, j]
        if x.max() == x.min():
            cols.append(ColumnTransform(names[j], 1.0, float(x[0]), 1.0, True))
            continue
        lam = _golden_max(lambda l: log_likelihood(x, l), LAMBDA_LO, LAMBDA_HI)
        if log_likelihood(x, 1.0) >= log_likelihood(x, lam):
            lam = 1.0
        psi = yeo_johnson(x, lam)
        cols.append(ColumnTransform(names[j], float(lam), float(psi.mean()),
                                    float(psi.std(ddof=1)), False))
    return PowerTransformParams(tuple(cols))


def apply_power_transform(params: PowerTransformParams, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != params.n_features:
        raise ShapeMismatch(f"expected {params.n_features} columns, got {X.shape}")
    Z = np.empty_like(X)
    for j, c in enumerate(params.columns):
        u = yeo_johnson(X[:, j], c.lam) - c.post_mean
        Z[:, j] = u if c.degenerate else u / c.post_std
    return Z


def inverse_power_transform(params: PowerTransformParams, Z: np.ndarray) -> np.ndarray:
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[1] != params.n_features:
        raise ShapeMismatch(f"expected {params.n_features} columns, got {Z.shape}")
    X = np.empty_like(Z)
    for j, c in enumerate(params.columns):
        u = Z[:, j] if c.degenerate else Z[:, j] * c.post_std
        X[:, j] = yeo_johnson_inverse(u + c.post_mean, c.lam)
    return X
