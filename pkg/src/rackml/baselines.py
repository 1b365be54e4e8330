"""Non-tree regressors: OLS, ridge, lasso, elastic net, Bayesian ridge,
partial least squares (NIPALS), and k-nearest neighbors.

All penalized fits operate on mean-centered data and never penalize the
intercept.  Lasso and elastic net use the 1/(2n) objective convention; ridge
solves the unscaled normal equations, so a ridge alpha comparable to an
elastic-net alpha differs by a factor of n.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import qr, solve_triangular

from .exceptions import ComponentOverflow, ShapeMismatch
from .rng import stream


@dataclass(eq=False)
class LinearModel:
    family: str
    coefficients: np.ndarray
    intercept: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return self.coefficients.size

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ShapeMismatch(f"expected {self.n_features} feature columns, got {X.shape}")
        return self.intercept + X @ self.coefficients


def _center(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ShapeMismatch("X must be (n, p) and y (n,)")
    if X.shape[0] < 2:
        raise ValueError("need at least two rows")
    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    return X - x_mean, y - y_mean, x_mean, y_mean


def fit_ols(X, y) -> LinearModel:
    """Least squares via column-pivoted QR; rank-deficient columns get coefficient 0."""
    Xc, yc, x_mean, y_mean = _center(X, y)
    n, p = Xc.shape
    Q, R, piv = qr(Xc, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = 0
    if diag.size and diag[0] > 0.0:
        rank = int((diag > diag[0] * max(n, p) * np.finfo(np.float64).eps).sum())
    beta_piv = np.zeros(p)
    if rank > 0:
        z = Q[:, :rank].T @ yc
        beta_piv[:rank] = solve_triangular(R[:rank, :rank], z)
    beta = np.zeros(p)
    beta[piv] = beta_piv
    dropped = [int(j) for j in piv[rank:]]
    return LinearModel(
        family="linear", coefficients=beta, intercept=y_mean - float(x_mean @ beta),
        diagnostics={"rank": rank, "dropped_columns": sorted(dropped)},
    )


def fit_ridge(X, y, alpha: float = 1.0) -> LinearModel:
    """Closed-form L2: beta = (Xc'Xc + alpha I)^-1 Xc'yc, one refinement step."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    Xc, yc, x_mean, y_mean = _center(X, y)
    p = Xc.shape[1]
    A = Xc.T @ Xc + alpha * np.eye(p)
    b = Xc.T @ yc
    beta = np.linalg.solve(A, b)
    beta += np.linalg.solve(A, b - A @ beta)  # iterative refinement
    return LinearModel(
        family="ridge", coefficients=beta, intercept=y_mean - float(x_mean @ beta),
        diagnostics={"alpha": alpha},
    )


def _soft_threshold(x: float, t: float) -> float:
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


def _coordinate_descent(Xc, yc, l1, l2, max_iter, tol, selection, seed):
    n, p = Xc.shape
    col_sq = (Xc * Xc).sum(axis=0) / n
    beta = np.zeros(p)
    resid = yc.copy()
    rng = stream(seed) if selection == "random" else None
    converged = False
    sweeps = 0
    max_delta = np.inf
    for sweeps in range(1, int(max_iter) + 1):
        max_delta = 0.0
        order = rng.permutation(p) if rng is not None else range(p)
        for j in order:
            if col_sq[j] == 0.0:
                continue
            old = beta[j]
            if old != 0.0:
                resid += Xc[:, j] * old
            rho = float(Xc[:, j] @ resid) / n
            new = _soft_threshold(rho, l1) / (col_sq[j] + l2)
            if new != 0.0:
                resid -= Xc[:, j] * new
            beta[j] = new
            delta = abs(new - old)
            if delta > max_delta:
                max_delta = delta
        if max_delta < tol:
            converged = True
            break
    return beta, converged, sweeps, max_delta


def fit_lasso(X, y, alpha: float, max_iter: int = 3000, tol: float = 1e-4,
              selection: str = "cyclic", seed: int = 0) -> LinearModel:
    """L1 regression, objective (1/(2n))||y - b0 - Xb||^2 + alpha ||b||_1.

    Coordinate descent with soft-thresholding; a NotConverged flag (result
    still returned) is set if max_iter sweeps pass without the largest
    coefficient change dropping below tol.
    """
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    if selection not in ("cyclic", "random"):
        raise ValueError(f"unknown selection {selection!r}")
    Xc, yc, x_mean, y_mean = _center(X, y)
    beta, converged, sweeps, final = _coordinate_descent(Xc, yc, alpha, 0.0,
                                                         max_iter, tol, selection, seed)
    if not converged:
        warnings.warn(f"lasso did not converge in {max_iter} sweeps (last change {final:.3g})")
    return LinearModel(
        family="lasso", coefficients=beta, intercept=y_mean - float(x_mean @ beta),
        diagnostics={"alpha": alpha, "iterations": sweeps, "converged": converged,
                     "final_tolerance": final},
    )


def fit_elastic_net(X, y, alpha: float, l1_ratio: float = 0.5, max_iter: int = 3000,
                    tol: float = 1e-4, seed: int = 0) -> LinearModel:
    """Mixed penalty alpha*(l1_ratio*||b||_1 + (1-l1_ratio)/2*||b||_2^2) on the 1/(2n) loss."""
    if alpha < 0 or not 0.0 <= l1_ratio <= 1.0:
        raise ValueError("need alpha >= 0 and l1_ratio in [0, 1]")
    Xc, yc, x_mean, y_mean = _center(X, y)
    beta, converged, sweeps, final = _coordinate_descent(
        Xc, yc, alpha * l1_ratio, alpha * (1.0 - l1_ratio), max_iter, tol, "cyclic", seed)
    if not converged:
        warnings.warn(f"elastic net did not converge in {max_iter} sweeps")
    return LinearModel(
        family="elastic_net", coefficients=beta, intercept=y_mean - float(x_mean @ beta),
        diagnostics={"alpha": alpha, "l1_ratio": l1_ratio, "iterations": sweeps,
                     "converged": converged, "final_tolerance": final},
    )


@dataclass(eq=False)
class BayesianLinearModel:
    coefficients: np.ndarray
    intercept: float
    alpha_: float   # noise precision
    lambda_: float  # weight precision
    posterior_covariance: np.ndarray
    hyperpriors: dict
    diagnostics: dict = field(default_factory=dict)
    family: str = "bayesian_ridge"

    @property
    def n_features(self) -> int:
        return self.coefficients.size

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ShapeMismatch(f"expected {self.n_features} feature columns, got {X.shape}")
        return self.intercept + X @ self.coefficients


def fit_bayesian_ridge(X, y, alpha_1=1e-6, alpha_2=1e-6, lambda_1=1e-6, lambda_2=1e-6,
                       max_iter: int = 300, tol: float = 1e-3) -> BayesianLinearModel:
    """Evidence maximization starting from alpha_ = lambda_ = 1.

    Each iteration computes the posterior (Sigma, mu) under the current
    precisions, then updates lambda_ and alpha_ from the effective number of
    parameters gamma.  Stops when the largest coefficient change is below
    tol; the returned mu/Sigma are the last ones computed inside the loop.
    """
    Xc, yc, x_mean, y_mean = _center(X, y)
    n, p = Xc.shape
    XtX = Xc.T @ Xc
    Xty = Xc.T @ yc
    eigvals = np.linalg.eigvalsh(XtX)
    alpha_, lambda_ = 1.0, 1.0
    mu = np.zeros(p)
    sigma = np.eye(p)
    converged = False
    iterations = 0
    for iterations in range(1, int(max_iter) + 1):
        prev = mu
        sigma = np.linalg.inv(alpha_ * XtX + lambda_ * np.eye(p))
        mu = alpha_ * (sigma @ Xty)
        gamma = float((alpha_ * eigvals / (lambda_ + alpha_ * eigvals)).sum())
        lambda_ = (gamma + 2.0 * lambda_1) / (float(mu @ mu) + 2.0 * lambda_2)
        rss = float(((yc - Xc @ mu) ** 2).sum())
        alpha_ = (n - gamma + 2.0 * alpha_1) / (rss + 2.0 * alpha_2)
        if iterations > 1 and float(np.abs(mu - prev).max()) < tol:
            converged = True
            break
    if not converged and max_iter > 1:
        warnings.warn(f"bayesian ridge did not converge in {max_iter} iterations")
    return BayesianLinearModel(
        coefficients=mu, intercept=y_mean - float(x_mean @ mu),
        alpha_=float(alpha_), lambda_=float(lambda_), posterior_covariance=sigma,
        hyperpriors={"alpha_1": alpha_1, "alpha_2": alpha_2,
                     "lambda_1": lambda_1, "lambda_2": lambda_2},
        diagnostics={"iterations": iterations, "converged": converged},
    )


@dataclass(eq=False)
class PLSModel:
    n_components: int            # components actually extracted
    x_weights: np.ndarray        # (p, k)
    x_loadings: np.ndarray       # (p, k)
    y_loadings: np.ndarray       # (k,)
    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: float
    coefficients: np.ndarray     # regression vector in original feature units
    intercept: float
    degenerate: bool = False     # stopped early on zero covariance
    scores: np.ndarray | None = None
    family: str = "pls"

    @property
    def n_features(self) -> int:
        return self.coefficients.size

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ShapeMismatch(f"expected {self.n_features} feature columns, got {X.shape}")
        return self.intercept + X @ self.coefficients


def fit_pls(X, y, n_components: int = 2) -> PLSModel:
    """PLS1 by NIPALS on centered, unit-variance-scaled X.

    Extraction stops early (degenerate flag) if the residual covariance
    X'y vanishes; with zero extracted components the model predicts the
    training mean.
    """
    Xc, yc, x_mean, y_mean = _center(X, y)
    n, p = Xc.shape
    bound = min(p, n - 1)
    if not 1 <= n_components <= bound:
        raise ComponentOverflow(f"n_components must be in [1, {bound}], got {n_components}")
    x_std = Xc.std(axis=0, ddof=1)
    x_std = np.where(x_std > 0.0, x_std, 1.0)
    Xw = Xc / x_std
    Xd, yd = Xw.copy(), yc.copy()
    scale0 = float(np.linalg.norm(Xd.T @ yd))
    tiny = 1e-12 * max(1.0, scale0)
    W, P, Q, T = [], [], [], []
    degenerate = False
    for _ in range(int(n_components)):
        cov = Xd.T @ yd
        norm = float(np.linalg.norm(cov))
        if norm <= tiny:
            degenerate = True
            break
        w = cov / norm
        t = Xd @ w
        tt = float(t @ t)
        p_load = (Xd.T @ t) / tt
        q = float(yd @ t) / tt
        Xd = Xd - np.outer(t, p_load)
        yd = yd - q * t
        W.append(w)
        P.append(p_load)
        Q.append(q)
        T.append(t)
    k = len(W)
    if k == 0:
        coef = np.zeros(p)
        return PLSModel(0, np.zeros((p, 0)), np.zeros((p, 0)), np.zeros(0),
                        x_mean, x_std, y_mean, coef, y_mean, True, np.zeros((n, 0)))
    Wm, Pm, qv = np.column_stack(W), np.column_stack(P), np.array(Q)
    b_scaled = Wm @ np.linalg.solve(Pm.T @ Wm, qv)
    coef = b_scaled / x_std
    return PLSModel(k, Wm, Pm, qv, x_mean, x_std, y_mean, coef,
                    y_mean - float(x_mean @ coef), degenerate, np.column_stack(T))


@dataclass(eq=False)
class KNNModel:
    X: np.ndarray
    y: np.ndarray
    n_neighbors: int
    weighting: str  # uniform | distance
    family: str = "knn"

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def predict(self, Q) -> np.ndarray:
        return predict_knn(self, Q)


def fit_knn(X, y, n_neighbors: int = 5, weights: str = "uniform",
            algorithm: str = "brute") -> KNNModel:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if not 1 <= n_neighbors <= X.shape[0]:
        raise ValueError("n_neighbors must be in [1, n]")
    if weights not in ("uniform", "distance"):
        raise ValueError(f"unknown weights {weights!r}")
    if algorithm != "brute":
        warnings.warn(f"algorithm {algorithm!r} is accepted but ignored; search is brute-force")
    return KNNModel(X=X, y=y, n_neighbors=int(n_neighbors), weighting=weights)


def predict_knn(model: KNNModel, Q) -> np.ndarray:
    """Brute-force Euclidean k-NN; distance ties break on the lower training index."""
    Q = np.asarray(Q, dtype=np.float64)
    if Q.ndim != 2 or Q.shape[1] != model.n_features:
        raise ShapeMismatch(f"expected {model.n_features} feature columns, got {Q.shape}")
    out = np.empty(Q.shape[0])
    k = model.n_neighbors
    for i, q in enumerate(Q):
        d2 = ((model.X - q) ** 2).sum(axis=1)
        nearest = np.argsort(d2, kind="stable")[:k]
        if model.weighting == "uniform":
            out[i] = model.y[nearest].mean()
        else:
            d = np.sqrt(d2[nearest])
            exact = d == 0.0
            if exact.any():
                out[i] = model.y[nearest[exact]].mean()
            else:
                w = 1.0 / d
                out[i] = float((w * model.y[nearest]).sum() / w.sum())
    return out
