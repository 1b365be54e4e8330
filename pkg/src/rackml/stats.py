"""Descriptive statistics: per-column summaries with histogram/KDE, Pearson correlation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset

_KDE_GRID_POINTS = 256


@dataclass(frozen=True)
class ColumnSummary:
    name: str
    count: int
    mean: float
    std: float  # sample std, denominator n-1
    min: float
    q1: float
    median: float
    q3: float
    max: float
    hist_edges: tuple[float, ...]
    hist_counts: tuple[int, ...]
    kde_grid: tuple[float, ...]
    kde_density: tuple[float, ...]
    degenerate: bool  # constant column: KDE bandwidth undefined

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "count": self.count,
            "mean": self.mean,
            "std": self.std,
            "min": self.min,
            "q1": self.q1,
            "median": self.median,
            "q3": self.q3,
            "max": self.max,
            "histogram": {"edges": list(self.hist_edges), "counts": list(self.hist_counts)},
            "kde": {"grid": list(self.kde_grid), "density": list(self.kde_density)},
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class SummaryStats:
    columns: tuple[ColumnSummary, ...]

    def to_dict(self) -> dict:
        return {"columns": [c.to_dict() for c in self.columns]}


@dataclass(frozen=True)
class CorrelationMatrix:
    labels: tuple[str, ...]
    values: np.ndarray  # symmetric, diagonal exactly 1
    degenerate: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        """Lower-triangle rendering: row i carries entries up to the diagonal."""
        tri = [[float(self.values[i, j]) for j in range(i + 1)] for i in range(len(self.labels))]
        return {
            "labels": list(self.labels),
            "lower_triangle": tri,
            "degenerate_columns": list(self.degenerate),
        }


def _column_summary(name: str, x: np.ndarray, bins: int) -> ColumnSummary:
    n = x.size
    lo, hi = float(x.min()), float(x.max())
    std = float(x.std(ddof=1))
    q1, med, q3 = (float(v) for v in np.quantile(x, [0.25, 0.5, 0.75]))
    degenerate = hi == lo
    if degenerate:
        edges = np.array([lo - 0.5, lo + 0.5])
        counts = np.array([n])
        grid = np.linspace(lo - 0.5, lo + 0.5, _KDE_GRID_POINTS)
        density = np.zeros(_KDE_GRID_POINTS)
    else:
        counts, edges = np.histogram(x, bins=bins, range=(lo, hi))
        # Gaussian KDE, Silverman bandwidth
        h = 1.06 * std * n ** (-0.2)
        grid = np.linspace(lo - 3.0 * h, hi + 3.0 * h, _KDE_GRID_POINTS)
        z = (grid[:, None] - x[None, :]) / h
        density = np.exp(-0.5 * z * z).sum(axis=1) / (n * h * np.sqrt(2.0 * np.pi))
    return ColumnSummary(
        name=name, count=n, mean=float(x.mean()), std=std,
        min=lo, q1=q1, median=med, q3=q3, max=hi,
        hist_edges=tuple(float(e) for e in edges),
        hist_counts=tuple(int(c) for c in counts),
        kde_grid=tuple(float(g) for g in grid),
        kde_density=tuple(float(v) for v in density),
        degenerate=degenerate,
    )


def summary_stats(d: Dataset, bins: int = 20) -> SummaryStats:
    """Summaries for all 10 features plus the target."""
    if d.n < 2:
        raise ValueError("need at least two rows")
    cols = d.columns()
    names = list(d.schema.names) + [d.schema.target.name]
    return SummaryStats(tuple(_column_summary(name, cols[:, j], bins) for j, name in enumerate(names)))


def pearson_correlation(d: Dataset) -> CorrelationMatrix:
    """11x11 Pearson matrix over features plus target.

    Zero-variance columns correlate 0 with everything by convention and are
    flagged; the diagonal is exactly 1 regardless.
    """
    if d.n < 2:
        raise ValueError("need at least two rows")
    if d.missing_mask.any():
        raise ValueError("correlation requires a dataset without missing values")
    cols = d.columns()
    names = list(d.schema.names) + [d.schema.target.name]
    centered = cols - cols.mean(axis=0)
    ss = (centered * centered).sum(axis=0)
    degen = ss == 0.0
    denom = np.sqrt(ss)
    denom[degen] = 1.0
    unit = centered / denom
    r = unit.T @ unit
    r[degen, :] = 0.0
    r[:, degen] = 0.0
    r = np.clip((r + r.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(r, 1.0)
    return CorrelationMatrix(
        labels=tuple(names),
        values=r,
        degenerate=tuple(n for n, g in zip(names, degen) if g),
    )
