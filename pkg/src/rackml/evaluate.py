"""Cross-validation, exhaustive grid search, and the multi-family bake-off."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .exceptions import KTooLarge, RackmlError
from .metrics import MetricReport
from .pipeline import FAMILIES, FittedPipeline, fit_pipeline, get_family, validate_config
from .rng import stream
from .util import repro_mode


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    folds: tuple[tuple[int, ...], ...]

    def to_dict(self) -> dict:
        return {"k": self.k, "folds": [list(f) for f in self.folds]}


def kfold_indices(n: int, k: int = 5, seed: int = 0, shuffle: bool = True) -> FoldAssignment:
    """Seeded shuffle then contiguous chunks; the first n % k folds get one extra row."""
    if not 2 <= k <= n:
        raise KTooLarge(f"k must be in [2, {n}], got {k}")
    idx = stream(seed).permutation(n) if shuffle else np.arange(n)
    base, extra = divmod(n, k)
    folds, start = [], 0
    for f in range(k):
        size = base + (1 if f < extra else 0)
        folds.append(tuple(int(i) for i in np.sort(idx[start:start + size])))
        start += size
    return FoldAssignment(k=k, folds=tuple(folds))


class FoldError(RackmlError):
    def __init__(self, fold: int, cause: Exception):
        self.fold = fold
        super().__init__(f"fold {fold}: {cause}")


def _agg(values):
    vals = [v for v in values if v is not None]
    if not vals:
        return None, None
    arr = np.asarray(vals, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


@dataclass(frozen=True)
class CrossValidation:
    fold_reports: tuple[MetricReport, ...]
    mean_rmse: float
    std_rmse: float
    mean_mae: float
    mean_r2: float | None
    fold_lambdas: tuple[tuple[float, ...], ...]  # fitted transform lambdas per fold

    def to_dict(self) -> dict:
        return {
            "folds": [r.to_dict() for r in self.fold_reports],
            "mean_rmse": self.mean_rmse, "std_rmse": self.std_rmse,
            "mean_mae": self.mean_mae, "mean_r2": self.mean_r2,
        }


def cross_validate(family, config: dict, train: Dataset, folds: FoldAssignment,
                   seed: int = 0) -> CrossValidation:
    """Fit the full pipeline per fold and score on the held-out fold.

    The power transform is refit inside every fold on the four training
    folds only, so no validation rows leak into the normalizer.
    """
    all_idx = np.arange(train.n)
    reports, lambdas = [], []
    for fi, fold in enumerate(folds.folds):
        val_idx = np.asarray(fold, dtype=np.intp)
        mask = np.ones(train.n, dtype=bool)
        mask[val_idx] = False
        fit_idx = all_idx[mask]
        try:
            pipe = fit_pipeline(family, config, train.X[fit_idx], train.y[fit_idx],
                                seed=seed, feature_names=list(train.schema.names))
            y_hat = pipe.predict(train.X[val_idx])
        except Exception as e:
            raise FoldError(fi, e) from e
        reports.append(MetricReport.from_predictions(train.y[val_idx], y_hat))
        lambdas.append(tuple(c.lam for c in pipe.transform.columns))
    mean_rmse, std_rmse = _agg([r.rmse for r in reports])
    mean_mae, _ = _agg([r.mae for r in reports])
    r2s = [r.r2 for r in reports]
    mean_r2 = None if any(v is None for v in r2s) else float(np.mean(r2s))
    return CrossValidation(tuple(reports), mean_rmse, std_rmse, mean_mae, mean_r2,
                           tuple(lambdas))


@dataclass(frozen=True)
class GridSearchResult:
    family: str
    selection_metric: str
    configs: tuple[dict, ...]
    cv_results: tuple[CrossValidation, ...]
    best_index: int

    @property
    def best_config(self) -> dict:
        return self.configs[self.best_index]

    @property
    def best_cv(self) -> CrossValidation:
        return self.cv_results[self.best_index]

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "selection_metric": self.selection_metric,
            "table": [
                {"config": dict(c), **cv.to_dict()}
                for c, cv in zip(self.configs, self.cv_results)
            ],
            "best_index": self.best_index,
            "best_config": dict(self.best_config),
        }


def expand_grid(grid: dict) -> list[dict]:
    """Cartesian product in deterministic order: keys sorted, values as given."""
    if not grid:
        return [{}]
    keys = sorted(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def grid_search(family: str, grid: dict, train: Dataset, folds: FoldAssignment,
                seed: int = 0) -> GridSearchResult:
    """Exhaustive search selecting the minimal mean CV RMSE.

    Ties break on lower RMSE std, then on enumeration order.
    """
    validate_config(family, {k: None for k in grid})
    configs = expand_grid(grid)
    results = [cross_validate(family, cfg, train, folds, seed=seed) for cfg in configs]
    best = min(range(len(configs)),
               key=lambda i: (results[i].mean_rmse, results[i].std_rmse, i))
    return GridSearchResult(family=family, selection_metric="mean_cv_rmse",
                            configs=tuple(configs), cv_results=tuple(results),
                            best_index=best)


@dataclass(frozen=True)
class FamilyOutcome:
    family: str
    best_config: dict
    cv: CrossValidation
    test_metrics: MetricReport
    pairs: tuple[tuple[float, float], ...]  # (actual, predicted) on the test set
    wall_time_s: float
    pipeline: FittedPipeline = field(repr=False, compare=False, default=None)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "best_config": dict(self.best_config),
            "cv": self.cv.to_dict(),
            "test": self.test_metrics.to_dict(),
            "wall_time_s": self.wall_time_s,
        }


@dataclass(frozen=True)
class ComparisonReport:
    outcomes: tuple[FamilyOutcome, ...]
    ranking: tuple[str, ...]  # family names, descending test r2
    failures: dict

    def to_dict(self) -> dict:
        return {
            "ranking": list(self.ranking),
            "families": {o.family: o.to_dict() for o in self.outcomes},
            "failures": dict(self.failures),
        }


def actual_vs_predicted(model_like, d: Dataset) -> tuple[tuple[tuple[float, float], ...], MetricReport]:
    """Row-ordered (actual, predicted) pairs plus metrics for any .predict object."""
    y_hat = model_like.predict(d.X)
    pairs = tuple((float(a), float(p)) for a, p in zip(d.y, y_hat))
    return pairs, MetricReport.from_predictions(d.y, y_hat)


def compare_models(train: Dataset, test: Dataset, families_with_grids: dict,
                   seed: int = 0, cv_k: int = 5) -> ComparisonReport:
    """Grid-search every family on train, refit the winner, score on test.

    Per-family failures are recorded and the report is still produced for
    the survivors.  In reproducible mode wall times are written as 0.
    """
    folds = kfold_indices(train.n, k=cv_k, seed=seed)
    outcomes, failures = [], {}
    for family, grid in families_with_grids.items():
        t0 = time.perf_counter()
        try:
            gs = grid_search(family, grid, train, folds, seed=seed)
            pipe = fit_pipeline(family, gs.best_config, train.X, train.y, seed=seed,
                                feature_names=list(train.schema.names))
            pairs, report = actual_vs_predicted(pipe, test)
        except Exception as e:
            failures[family] = f"{type(e).__name__}: {e}"
            continue
        wall = 0.0 if repro_mode() else time.perf_counter() - t0
        outcomes.append(FamilyOutcome(family=family, best_config=gs.best_config,
                                      cv=gs.best_cv, test_metrics=report, pairs=pairs,
                                      wall_time_s=wall, pipeline=pipe))
    ranked = sorted(outcomes,
                    key=lambda o: -np.inf if o.test_metrics.r2 is None else o.test_metrics.r2,
                    reverse=True)
    return ComparisonReport(outcomes=tuple(outcomes),
                            ranking=tuple(o.family for o in ranked),
                            failures=failures)
