"""HTTP prediction service around a loaded model bundle.

Stateless request handling over an immutable bundle; all numeric output
comes from the same library code paths as the CLI, so service, CLI and
library predictions are bit-identical.  Out-of-range inputs are served with
per-feature extrapolation flags rather than rejected.
"""

from __future__ import annotations

import csv
import io
import math

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse, Response

import numpy as np

from .bundle import ModelBundle, load_bundle
from .workflows import explain_instance

DEFAULT_BATCH_LIMIT = 10000


def two_decimals(value: float) -> str:
    """Exact two-decimal rendering, half-to-even on the true binary64 value."""
    return f"{value:.2f}"


def _error(status: int, payload: dict) -> JSONResponse:
    return JSONResponse(status_code=status, content=payload)


def create_app(bundle: ModelBundle | None = None, bundle_path: str | None = None,
               batch_limit: int = DEFAULT_BATCH_LIMIT, cors: bool = False,
               static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="rackml prediction service", version="1")
    if bundle is None and bundle_path is not None:
        bundle = load_bundle(bundle_path)
    app.state.bundle = bundle
    app.state.batch_limit = batch_limit

    if cors:
        from fastapi.middleware.cors import CORSMiddleware
        app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                           allow_headers=["*"])

    def current() -> ModelBundle | None:
        return app.state.bundle

    @app.get("/api/v1/schema")
    def get_schema():
        b = current()
        if b is None:
            return _error(503, {"error": "NoModelLoaded"})
        return b.schema.to_dict()

    @app.get("/api/v1/model")
    def get_model():
        b = current()
        if b is None:
            return _error(503, {"error": "NoModelLoaded"})
        return {
            "family": b.family,
            "hyperparameters": b.config,
            "metrics": b.metrics,
            "feature_ranges": b.feature_ranges,
            "created_at": b.metadata.get("created_at"),
            "seed": b.metadata.get("seed"),
            "training_rows": b.metadata.get("training_rows"),
            "format_version": b.format_version,
        }

    @app.post("/api/v1/predict")
    async def predict(request: Request):
        b = current()
        if b is None:
            return _error(503, {"error": "NoModelLoaded"})
        try:
            body = await request.json()
        except Exception:
            return _error(400, {"error": "InvalidJSON"})
        features = body.get("features") if isinstance(body, dict) else None
        if not isinstance(features, dict):
            return _error(400, {"error": "MissingFeature", "feature": "features"})
        values = []
        for spec in b.schema.features:
            if spec.name not in features:
                return _error(400, {"error": "MissingFeature", "feature": spec.name})
            v = features[spec.name]
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                return _error(400, {"error": "NonFiniteValue", "feature": spec.name})
            values.append(float(v))
        x = np.asarray(values)
        p_kn = float(b.predict(x[None, :])[0])
        flags = {}
        for j, spec in enumerate(b.schema.features):
            lo, hi = b.feature_ranges.get(spec.name, (-math.inf, math.inf))
            flags[spec.name] = bool(x[j] < lo or x[j] > hi)
        response = {
            "p_kn": p_kn,
            "p_kn_display": two_decimals(p_kn),
            "extrapolation_flags": flags,
            "shap": None,
        }
        if body.get("explain"):
            response["shap"] = explain_instance(b, x).to_dict()
        return response

    @app.post("/api/v1/predict/batch")
    async def predict_batch(request: Request):
        b = current()
        if b is None:
            return _error(503, {"error": "NoModelLoaded"})
        raw = (await request.body()).decode("utf-8")
        reader = csv.reader(io.StringIO(raw))
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            return _error(400, {"error": "EmptyDataset"})
        col_of = {}
        for spec in b.schema.features:
            if spec.name not in header:
                return _error(400, {"error": "MissingColumn", "column": spec.name})
            col_of[spec.name] = header.index(spec.name)
        raw_rows, matrix = [], []
        for r, row in enumerate(reader):
            if not row or all(c.strip() == "" for c in row):
                continue
            vals = []
            for spec in b.schema.features:
                j = col_of[spec.name]
                cell = row[j].strip() if j < len(row) else ""
                if cell == "":
                    return _error(400, {"error": "MissingValue", "row": r, "column": spec.name})
                try:
                    vals.append(float(cell))
                except ValueError:
                    return _error(400, {"error": "ParseError", "row": r, "column": spec.name})
            raw_rows.append(row)
            matrix.append(vals)
        if not matrix:
            return _error(400, {"error": "EmptyDataset"})
        if len(matrix) > app.state.batch_limit:
            return _error(413, {"error": "TooManyRows", "limit": app.state.batch_limit})
        preds = b.predict(np.asarray(matrix))
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(header + ["P_pred", "P_pred_display"])
        for row, p in zip(raw_rows, preds):
            writer.writerow(row + [repr(float(p)), two_decimals(float(p))])
        return PlainTextResponse(out.getvalue(), media_type="text/csv")

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
