"""Regression metrics: R^2, MAE, MSE/RMSE."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ZeroVariance


def _pair(y, y_hat):
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape or y.ndim != 1 or y.size < 1:
        raise ValueError("y and y_hat must be equal-length 1-d vectors")
    return y, y_hat


def r_squared(y, y_hat) -> float:
    """1 - SS_res / SS_tot; raises ZeroVariance on a constant target."""
    y, y_hat = _pair(y, y_hat)
    if y.size < 2:
        raise ValueError("R^2 needs at least two observations")
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        raise ZeroVariance("target has zero variance")
    ss_res = float(((y - y_hat) ** 2).sum())
    return 1.0 - ss_res / ss_tot


def mean_absolute_error(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    return float(np.abs(y - y_hat).mean())


def mean_squared_error(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    return float(((y - y_hat) ** 2).mean())


def root_mean_squared_error(y, y_hat) -> tuple[float, float]:
    """Returns (rmse, mse); rmse is the square root of the radicand mse."""
    mse = mean_squared_error(y, y_hat)
    return math.sqrt(mse), mse


@dataclass(frozen=True)
class MetricReport:
    r2: float | None  # None when the target had zero variance
    mse: float
    mae: float
    rmse: float
    n: int
    r2_degenerate: bool = False

    @classmethod
    def from_predictions(cls, y, y_hat) -> "MetricReport":
        y, y_hat = _pair(y, y_hat)
        rmse, mse = root_mean_squared_error(y, y_hat)
        mae = mean_absolute_error(y, y_hat)
        if y.size < 2:
            return cls(r2=None, mse=mse, mae=mae, rmse=rmse, n=y.size, r2_degenerate=True)
        try:
            r2 = r_squared(y, y_hat)
            degenerate = False
        except ZeroVariance:
            r2 = None
            degenerate = True
        return cls(r2=r2, mse=mse, mae=mae, rmse=rmse, n=y.size, r2_degenerate=degenerate)

    def to_dict(self) -> dict:
        return {"r2": self.r2, "mse": self.mse, "mae": self.mae, "rmse": self.rmse,
                "n": self.n, "r2_degenerate": self.r2_degenerate}
