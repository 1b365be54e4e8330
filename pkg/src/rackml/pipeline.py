"""Family registry and the transform + model pipeline.

A pipeline couples one fitted power transform (features only; the target
stays in kN) with one fitted model.  The registry maps the fourteen
supported family names to their fit functions, tunable hyperparameter
names, and the default search grids.

Default grid values are engineering choices; override them with a grid
file for serious searches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baselines import (
    fit_bayesian_ridge,
    fit_elastic_net,
    fit_knn,
    fit_lasso,
    fit_ols,
    fit_pls,
    fit_ridge,
)
from .boosting import fit_adaboost_r2, fit_gradient_boosting, fit_second_order_boosting
from .data import Dataset
from .ensembles import fit_bagging, fit_extra_trees, fit_random_forest
from .exceptions import InvalidHyperparameter, UnknownFamily
from .transform import PowerTransformParams, apply_power_transform, fit_power_transform
from .trees import fit_cart


@dataclass(frozen=True)
class FamilySpec:
    name: str
    fit: callable             # fit(X, y, seed, **config) -> model with .predict
    params: frozenset         # tunable hyperparameter names
    seeded: bool              # whether the fit consumes the seed
    default_grid: dict


def _seedless(fit_fn):
    def fit(X, y, seed, **cfg):
        return fit_fn(X, y, **cfg)
    return fit


def _seeded(fit_fn):
    def fit(X, y, seed, **cfg):
        return fit_fn(X, y, seed=seed, **cfg)
    return fit


FAMILIES: dict[str, FamilySpec] = {}


def _register(name, fit, params, seeded, default_grid):
    FAMILIES[name] = FamilySpec(name, fit, frozenset(params), seeded, default_grid)


_register("decision_tree", _seeded(fit_cart),
          ["max_depth", "min_samples_split", "min_samples_leaf", "max_features"],
          True, {"max_depth": [3, 5, 8], "min_samples_split": [2, 5]})
_register("random_forest", _seeded(fit_random_forest),
          ["n_estimators", "max_depth", "min_samples_split", "min_samples_leaf", "max_features"],
          True, {"n_estimators": [100], "max_depth": [8, None], "max_features": [0.6, 1.0]})
_register("extra_trees", _seeded(fit_extra_trees),
          ["n_estimators", "max_depth", "min_samples_split", "min_samples_leaf", "max_features"],
          True, {"n_estimators": [100], "max_depth": [8, None], "max_features": [0.6, 1.0]})
_register("bagging", _seeded(fit_bagging),
          ["n_estimators", "max_samples", "max_features", "bootstrap", "bootstrap_features"],
          True, {"n_estimators": [50], "max_samples": [0.8, 1.0], "max_features": [1.0]})
# search the three high-impact knobs; the remaining knobs stay pinned at
# their tuned optimum
_register("gradient_boosting", _seeded(fit_gradient_boosting),
          ["n_estimators", "learning_rate", "max_depth", "min_samples_split",
           "min_samples_leaf", "subsample"],
          True, {"n_estimators": [100, 200, 300], "learning_rate": [0.01, 0.1, 0.3],
                 "max_depth": [3, 5, 7], "min_samples_split": [2],
                 "min_samples_leaf": [1], "subsample": [1.0]})
_register("second_order_boosting", _seeded(fit_second_order_boosting),
          ["n_estimators", "learning_rate", "max_depth", "subsample",
           "colsample_bytree", "reg_alpha", "reg_lambda"],
          True, {"n_estimators": [200], "learning_rate": [0.1, 0.3],
                 "max_depth": [3, 5], "reg_lambda": [0.0, 1.0]})
_register("adaboost_r2", _seeded(fit_adaboost_r2),
          ["n_estimators", "learning_rate", "loss", "base_tree_params"],
          True, {"n_estimators": [50], "learning_rate": [0.5, 1.0],
                 "loss": ["linear", "square"]})
_register("linear", _seedless(fit_ols), [], False, {})
_register("ridge", _seedless(fit_ridge), ["alpha"],
          False, {"alpha": [0.01, 0.1, 1.0, 10.0]})
_register("lasso", _seeded(fit_lasso), ["alpha", "max_iter", "tol", "selection"],
          True, {"alpha": [0.01, 0.1, 1.0, 10.0]})
_register("elastic_net", _seeded(fit_elastic_net), ["alpha", "l1_ratio", "max_iter", "tol"],
          True, {"alpha": [0.01, 0.1, 1.0], "l1_ratio": [0.2, 0.5, 0.8]})
_register("bayesian_ridge", _seedless(fit_bayesian_ridge),
          ["alpha_1", "alpha_2", "lambda_1", "lambda_2", "max_iter", "tol"],
          False, {"alpha_1": [1e-6, 1e-4], "lambda_1": [1e-6, 1e-4]})
_register("pls", _seedless(fit_pls), ["n_components"],
          False, {"n_components": [2, 4, 6, 8]})
_register("knn", _seedless(fit_knn), ["n_neighbors", "weights", "algorithm"],
          False, {"n_neighbors": [3, 5, 9], "weights": ["uniform", "distance"]})

FAMILY_ORDER = tuple(FAMILIES)  # 14 families, registration order


def get_family(name: str) -> FamilySpec:
    try:
        return FAMILIES[name]
    except KeyError:
        raise UnknownFamily(name, FAMILIES)


def validate_config(family: str, config: dict) -> None:
    spec = get_family(family)
    for key in config:
        if key not in spec.params:
            raise InvalidHyperparameter(key, family)


def default_grids() -> dict[str, dict]:
    return {name: dict(spec.default_grid) for name, spec in FAMILIES.items()}


@dataclass(eq=False)
class FittedPipeline:
    family: str
    config: dict
    transform: PowerTransformParams
    model: object

    def predict(self, X) -> np.ndarray:
        return self.model.predict(apply_power_transform(self.transform, np.asarray(X, dtype=np.float64)))


def fit_pipeline(family, config: dict, X, y, seed: int = 0,
                 feature_names=None) -> FittedPipeline:
    """Fit the power transform on X, then the family's model on the transformed data."""
    if isinstance(family, str):
        validate_config(family, config)
        spec = get_family(family)
    else:
        spec = family
    params = fit_power_transform(np.asarray(X, dtype=np.float64), names=feature_names)
    Z = apply_power_transform(params, X)
    model = spec.fit(Z, np.asarray(y, dtype=np.float64), seed, **config)
    return FittedPipeline(family=spec.name, config=dict(config), transform=params, model=model)


def fit_pipeline_dataset(family, config: dict, d: Dataset, seed: int = 0) -> FittedPipeline:
    return fit_pipeline(family, config, d.X, d.y, seed=seed, feature_names=list(d.schema.names))
