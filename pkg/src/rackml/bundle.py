"""Versioned JSON persistence of the fitted pipeline.

A bundle carries everything needed to reproduce predictions: schema, fitted
transform, model payload, metadata, and stored metrics.  Serialization is
canonical (sorted keys, no insignificant whitespace, shortest round-trip
float text), so saving the same bundle twice yields byte-identical files
and loading reproduces bit-exact predictions.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .baselines import BayesianLinearModel, KNNModel, LinearModel, PLSModel
from .ensembles import ALL_KINDS, EnsembleModel
from .exceptions import CorruptPayload, SchemaViolation, UnknownFormatVersion
from .schema import FeatureSchema
from .shapley import ImportanceRanking
from .transform import PowerTransformParams, apply_power_transform
from .trees import RegressionTree
from .util import canonical_json

FORMAT_VERSION = 1
BUNDLE_EXTENSION = ".rackmodel.json"

_REQUIRED_KEYS = {"format_version", "schema", "transform", "model", "metadata", "metrics"}
_OPTIONAL_KEYS = {"importance"}


@dataclass(eq=False)
class ModelBundle:
    schema: FeatureSchema
    transform: PowerTransformParams
    family: str
    config: dict
    model: object
    metadata: dict
    metrics: dict
    importance: dict | None = None
    format_version: int = FORMAT_VERSION

    def predict(self, X) -> np.ndarray:
        return self.model.predict(apply_power_transform(self.transform, np.asarray(X, dtype=np.float64)))

    @property
    def feature_ranges(self) -> dict:
        return self.metadata.get("feature_ranges", {})


# --- model payload encoding ---

def _tree_payload(tree: RegressionTree) -> dict:
    nodes = []
    for i in range(tree.n_nodes):
        nodes.append({
            "feature_index": int(tree.feature[i]),
            "threshold": float(tree.threshold[i]),
            "left": int(tree.left[i]),
            "right": int(tree.right[i]),
            "value": float(tree.value[i]),
            "n_samples": int(tree.n_samples[i]),
        })
    return {"nodes": nodes, "n_features": tree.n_features}


def _tree_from_payload(payload: dict) -> RegressionTree:
    nodes = payload["nodes"]
    if not nodes:
        raise CorruptPayload("tree has no nodes")
    count = len(nodes)
    f = np.empty(count, dtype=np.int32)
    t = np.empty(count, dtype=np.float64)
    l = np.empty(count, dtype=np.int32)
    r = np.empty(count, dtype=np.int32)
    v = np.empty(count, dtype=np.float64)
    n = np.empty(count, dtype=np.int64)
    for i, node in enumerate(nodes):
        f[i], t[i] = node["feature_index"], node["threshold"]
        l[i], r[i] = node["left"], node["right"]
        v[i], n[i] = node["value"], node["n_samples"]
        if f[i] >= 0:
            for child in (l[i], r[i]):
                if not 0 <= child < count or child == i:
                    raise CorruptPayload(f"node {i}: child index {child} out of range")
        elif l[i] != -1 or r[i] != -1:
            raise CorruptPayload(f"leaf node {i} has children")
    return RegressionTree(feature=f, threshold=t, left=l, right=r, value=v,
                          n_samples=n, n_features=int(payload["n_features"]))


def _encode_model(family: str, model) -> dict:
    if isinstance(model, RegressionTree):
        return {"type": "tree", "tree": _tree_payload(model)}
    if isinstance(model, EnsembleModel):
        return {
            "type": "ensemble",
            "kind": model.kind,
            "trees": [_tree_payload(t) for t in model.trees],
            "learning_rate": float(model.learning_rate),
            "init_value": float(model.init_value),
            "tree_weights": list(map(float, model.tree_weights)) if model.tree_weights else None,
            "seed": int(model.seed),
            "hyperparameters": model.params,
        }
    if isinstance(model, BayesianLinearModel):
        return {
            "type": "bayesian_linear",
            "coefficients": model.coefficients.tolist(),
            "intercept": float(model.intercept),
            "alpha": model.alpha_,
            "lambda": model.lambda_,
            "posterior_covariance": model.posterior_covariance.tolist(),
            "hyperpriors": model.hyperpriors,
        }
    if isinstance(model, LinearModel):
        return {
            "type": "linear",
            "family": model.family,
            "coefficients": model.coefficients.tolist(),
            "intercept": float(model.intercept),
            "diagnostics": model.diagnostics,
        }
    if isinstance(model, PLSModel):
        return {
            "type": "pls",
            "n_components": int(model.n_components),
            "x_weights": model.x_weights.tolist(),
            "x_loadings": model.x_loadings.tolist(),
            "y_loadings": model.y_loadings.tolist(),
            "x_mean": model.x_mean.tolist(),
            "x_std": model.x_std.tolist(),
            "y_mean": float(model.y_mean),
            "coefficients": model.coefficients.tolist(),
            "intercept": float(model.intercept),
            "degenerate": bool(model.degenerate),
        }
    if isinstance(model, KNNModel):
        return {
            "type": "knn",
            "X": model.X.tolist(),
            "y": model.y.tolist(),
            "n_neighbors": int(model.n_neighbors),
            "weighting": model.weighting,
        }
    raise SchemaViolation(f"no payload schema for model type {type(model).__name__}")


def _decode_model(payload: dict):
    kind = payload.get("type")
    if kind == "tree":
        return _tree_from_payload(payload["tree"])
    if kind == "ensemble":
        if payload["kind"] not in ALL_KINDS:
            raise CorruptPayload(f"unknown ensemble kind {payload['kind']!r}")
        weights = payload.get("tree_weights")
        return EnsembleModel(
            kind=payload["kind"],
            trees=tuple(_tree_from_payload(t) for t in payload["trees"]),
            learning_rate=float(payload["learning_rate"]),
            init_value=float(payload["init_value"]),
            tree_weights=tuple(weights) if weights is not None else None,
            seed=int(payload.get("seed", 0)),
            params=dict(payload.get("hyperparameters", {})),
        )
    if kind == "linear":
        return LinearModel(
            family=payload["family"],
            coefficients=np.asarray(payload["coefficients"], dtype=np.float64),
            intercept=float(payload["intercept"]),
            diagnostics=dict(payload.get("diagnostics", {})),
        )
    if kind == "bayesian_linear":
        return BayesianLinearModel(
            coefficients=np.asarray(payload["coefficients"], dtype=np.float64),
            intercept=float(payload["intercept"]),
            alpha_=float(payload["alpha"]),
            lambda_=float(payload["lambda"]),
            posterior_covariance=np.asarray(payload["posterior_covariance"], dtype=np.float64),
            hyperpriors=dict(payload.get("hyperpriors", {})),
        )
    if kind == "pls":
        return PLSModel(
            n_components=int(payload["n_components"]),
            x_weights=np.asarray(payload["x_weights"], dtype=np.float64),
            x_loadings=np.asarray(payload["x_loadings"], dtype=np.float64),
            y_loadings=np.asarray(payload["y_loadings"], dtype=np.float64),
            x_mean=np.asarray(payload["x_mean"], dtype=np.float64),
            x_std=np.asarray(payload["x_std"], dtype=np.float64),
            y_mean=float(payload["y_mean"]),
            coefficients=np.asarray(payload["coefficients"], dtype=np.float64),
            intercept=float(payload["intercept"]),
            degenerate=bool(payload["degenerate"]),
        )
    if kind == "knn":
        return KNNModel(
            X=np.asarray(payload["X"], dtype=np.float64),
            y=np.asarray(payload["y"], dtype=np.float64),
            n_neighbors=int(payload["n_neighbors"]),
            weighting=payload["weighting"],
        )
    raise CorruptPayload(f"unknown model payload type {kind!r}")


# --- save / load ---

def bundle_to_dict(b: ModelBundle) -> dict:
    doc = {
        "format_version": b.format_version,
        "schema": b.schema.to_dict(),
        "transform": b.transform.to_list(),
        "model": {"family": b.family, "config": b.config,
                  "payload": _encode_model(b.family, b.model)},
        "metadata": b.metadata,
        "metrics": b.metrics,
    }
    if b.importance is not None:
        doc["importance"] = b.importance
    return doc


def save_bundle(b: ModelBundle, sink) -> int:
    """Write canonical JSON; returns bytes written."""
    data = canonical_json(bundle_to_dict(b)).encode("utf-8")
    if hasattr(sink, "write"):
        sink.write(data)
    else:
        with open(sink, "wb") as f:
            f.write(data)
    return len(data)


def load_bundle(source) -> ModelBundle:
    if hasattr(source, "read"):
        raw = source.read()
    else:
        with open(source, "rb") as f:
            raw = f.read()
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    doc = json.loads(raw)
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise SchemaViolation("missing format_version")
    if doc["format_version"] != FORMAT_VERSION:
        raise UnknownFormatVersion(f"format_version {doc['format_version']!r} not supported")
    missing = _REQUIRED_KEYS - doc.keys()
    if missing:
        raise SchemaViolation(f"missing required fields: {sorted(missing)}")
    extra = doc.keys() - _REQUIRED_KEYS - _OPTIONAL_KEYS
    if extra:
        raise SchemaViolation(f"unexpected fields: {sorted(extra)}")
    model_doc = doc["model"]
    for key in ("family", "config", "payload"):
        if key not in model_doc:
            raise SchemaViolation(f"model section missing {key!r}")
    return ModelBundle(
        schema=FeatureSchema.from_dict(doc["schema"]),
        transform=PowerTransformParams.from_list(doc["transform"]),
        family=model_doc["family"],
        config=dict(model_doc["config"]),
        model=_decode_model(model_doc["payload"]),
        metadata=dict(doc["metadata"]),
        metrics=dict(doc["metrics"]),
        importance=doc.get("importance"),
    )


def grid_digest(grid: dict) -> str:
    return hashlib.sha256(canonical_json(grid).encode("utf-8")).hexdigest()


def bundle_info(b: ModelBundle) -> str:
    """Human-readable summary; pure, no mutation."""
    lines = [
        f"family: {b.family}",
        f"format_version: {b.format_version}",
        f"created_at: {b.metadata.get('created_at', '?')}",
        f"seed: {b.metadata.get('seed', '?')}",
        f"training_rows: {b.metadata.get('training_rows', '?')}",
    ]
    if b.config:
        lines.append("hyperparameters:")
        for k in sorted(b.config):
            lines.append(f"  {k}: {b.config[k]}")
    lines.append("features:")
    for spec in b.schema.features:
        rng = b.feature_ranges.get(spec.name)
        span = f"  [{rng[0]:g}, {rng[1]:g}]" if rng else ""
        lines.append(f"  {spec.name} ({spec.unit}): {spec.description}{span}")
    for split in ("train", "test"):
        m = b.metrics.get(split)
        if m:
            r2 = "n/a" if m.get("r2") is None else f"{m['r2']:.4f}"
            lines.append(f"{split} metrics: r2={r2} rmse={m['rmse']:.4f} mae={m['mae']:.4f} (n={m['n']})")
    if b.importance is not None:
        lines.append("importance (mean |SHAP|, kN):")
        for row in b.importance.get("features", []):
            lines.append(f"  #{row['rank']} {row['name']}: {row['mean_abs_shap']:.4f}")
    return "\n".join(lines)
