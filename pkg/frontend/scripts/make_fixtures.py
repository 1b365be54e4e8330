"""Record real service responses as test fixtures for the UI suite.

Trains a small deterministic bundle, drives the HTTP service in-process,
and captures: the schema and model documents, 20 scripted single
predictions (with SHAP), and one batch request with its verbatim CSV
response.  Rerun after backend changes:

    python3 scripts/make_fixtures.py
"""

import json
import os
import pathlib
import sys

os.environ.setdefault("SOURCE_DATE_EPOCH", "1700000000")

import numpy as np
from fastapi.testclient import TestClient

from rackml.data import generate_synthetic
from rackml.rng import stream
from rackml.server import create_app
from rackml.workflows import train_bundle

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "fixtures.json"


def main():
    data = generate_synthetic(90, seed=17)
    bundle, _ = train_bundle(
        data, "gradient_boosting",
        grid={"n_estimators": [25], "learning_rate": [0.1], "max_depth": [3]},
        seed=17, cv_k=3)
    client = TestClient(create_app(bundle=bundle, batch_limit=1000))

    schema = client.get("/api/v1/schema").json()
    model = client.get("/api/v1/model").json()
    names = [f["name"] for f in schema["features"]]

    rng = stream(99)
    ranges = model["feature_ranges"]
    singles = []
    for i in range(20):
        # mid-range values plus jitter; a few pushed outside the range
        feats = {}
        for name in names:
            lo, hi = ranges[name]
            mid = (lo + hi) / 2
            span = (hi - lo) / 2
            scale = 1.4 if i % 7 == 0 else 0.9
            feats[name] = float(mid + scale * span * float(rng.uniform(-1, 1)))
        request = {"features": feats, "explain": True}
        response = client.post("/api/v1/predict", json=request)
        assert response.status_code == 200, response.text
        singles.append({"request": request, "response": response.json()})

    batch_rows = data.X[:12]
    batch_request = ",".join(names) + "\n" + "\n".join(
        ",".join(repr(float(v)) for v in row) for row in batch_rows) + "\n"
    batch_response = client.post("/api/v1/predict/batch", content=batch_request)
    assert batch_response.status_code == 200, batch_response.text

    bad = client.post("/api/v1/predict", json={"features": {n: 1.0 for n in names if n != "fy"}})
    assert bad.status_code == 400

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps({
        "schema": schema,
        "model": model,
        "singles": singles,
        "batch": {"request": batch_request, "response": batch_response.text},
        "missing_feature_error": {"status": 400, "body": bad.json()},
    }, indent=1, sort_keys=True))
    print(f"wrote {OUT} ({OUT.stat().st_size} bytes, {len(singles)} singles)")


if __name__ == "__main__":
    sys.exit(main())
