"""End-to-end flows shared by the CLI and the service: train a bundle,
compare families, explain predictions."""

from __future__ import annotations

import numpy as np

from .bundle import FORMAT_VERSION, ModelBundle, grid_digest
from .data import Dataset, impute_missing, remove_outliers_iqr, train_test_split
from .evaluate import actual_vs_predicted, compare_models, grid_search, kfold_indices
from .exceptions import UnsupportedModel
from .pipeline import default_grids, fit_pipeline, get_family
from .shapley import ShapExplanation, sampling_shap, tree_shap
from .transform import apply_power_transform
from .util import now_iso

_BACKGROUND_ROWS = 64  # training subsample stored for sampling-based explanations


def clean_dataset(d: Dataset, iqr_k: float = 1.5) -> tuple[Dataset, list[str]]:
    """Impute missing cells, then drop Tukey-fence outliers."""
    return remove_outliers_iqr(impute_missing(d), k=iqr_k)


def feature_ranges(train: Dataset) -> dict:
    return {
        name: [float(train.X[:, j].min()), float(train.X[:, j].max())]
        for j, name in enumerate(train.schema.names)
    }


def train_bundle(d: Dataset, family: str, grid: dict | None = None, seed: int = 0,
                 test_fraction: float = 0.2, cv_k: int = 5, iqr_k: float = 1.5):
    """Full training run: clean, split, grid-search, refit, evaluate, bundle.

    Returns (bundle, details) where details carries the grid-search table,
    split sizes and removed outlier ids for reporting.
    """
    get_family(family)
    if grid is None:
        grid = default_grids()[family]
    cleaned, removed = clean_dataset(d, iqr_k=iqr_k)
    train, test = train_test_split(cleaned, test_fraction=test_fraction, seed=seed)
    folds = kfold_indices(train.n, k=cv_k, seed=seed)
    gs = grid_search(family, grid, train, folds, seed=seed)
    pipe = fit_pipeline(family, gs.best_config, train.X, train.y, seed=seed,
                        feature_names=list(train.schema.names))
    _, train_metrics = actual_vs_predicted(pipe, train)
    _, test_metrics = actual_vs_predicted(pipe, test)

    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xBA0]))
    bg_idx = np.sort(rng.choice(train.n, size=min(_BACKGROUND_ROWS, train.n), replace=False))
    metadata = {
        "created_at": now_iso(),
        "seed": int(seed),
        "training_rows": int(train.n),
        "test_rows": int(test.n),
        "removed_outliers": len(removed),
        "grid_config_digest": grid_digest(grid),
        "feature_ranges": feature_ranges(train),
        "background": [[float(v) for v in row] for row in train.X[bg_idx]],
    }
    bundle = ModelBundle(
        schema=d.schema, transform=pipe.transform, family=family,
        config=gs.best_config, model=pipe.model, metadata=metadata,
        metrics={"train": train_metrics.to_dict(), "test": test_metrics.to_dict()},
        format_version=FORMAT_VERSION,
    )
    details = {
        "grid_search": gs, "train": train, "test": test,
        "removed": removed, "folds": folds,
        "train_metrics": train_metrics, "test_metrics": test_metrics,
    }
    return bundle, details


def run_compare(d: Dataset, grids: dict | None = None, seed: int = 0,
                test_fraction: float = 0.2, cv_k: int = 5, iqr_k: float = 1.5):
    cleaned, _ = clean_dataset(d, iqr_k=iqr_k)
    train, test = train_test_split(cleaned, test_fraction=test_fraction, seed=seed)
    report = compare_models(train, test, grids or default_grids(), seed=seed, cv_k=cv_k)
    return report, train, test


def explain_instance(bundle: ModelBundle, x_raw, n_permutations: int = 500,
                     seed: int = 0) -> ShapExplanation:
    """SHAP attribution in kN for one raw-feature instance.

    Uses exact TreeSHAP for additive tree models, falling back to
    permutation sampling (against the stored training background) for
    everything else.
    """
    x_raw = np.asarray(x_raw, dtype=np.float64).ravel()
    z = apply_power_transform(bundle.transform, x_raw[None, :])[0]
    names = bundle.schema.names
    try:
        return tree_shap(bundle.model, z, feature_names=names)
    except UnsupportedModel:
        bg = np.asarray(bundle.metadata.get("background"), dtype=np.float64)
        if bg is None or bg.ndim != 2:
            raise
        z_bg = apply_power_transform(bundle.transform, bg)
        return sampling_shap(bundle.model, z, z_bg, n_permutations=n_permutations,
                             seed=seed, feature_names=names)
