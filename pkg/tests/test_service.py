import io

import numpy as np
import pytest
from fastapi.testclient import TestClient

from rackml.data import write_csv
from rackml.server import create_app, two_decimals
from rackml.workflows import train_bundle


@pytest.fixture(scope="module")
def bundle(synth80):
    b, _ = train_bundle(synth80, "gradient_boosting",
                        grid={"n_estimators": [20], "learning_rate": [0.1],
                              "max_depth": [3]},
                        seed=3, cv_k=3)
    return b


@pytest.fixture(scope="module")
def client(bundle):
    return TestClient(create_app(bundle=bundle, batch_limit=100))


def features_of(bundle, row):
    return {name: float(v) for name, v in zip(bundle.schema.names, row)}


class TestDisplayRounding:
    def test_spec_case(self):
        assert two_decimals(112.345) == "112.34"

    def test_half_to_even_on_exact_ties(self):
        assert two_decimals(0.125) == "0.12"
        assert two_decimals(0.375) == "0.38"

    def test_two_decimals_always(self):
        assert two_decimals(5.0) == "5.00"
        assert two_decimals(-3.14159) == "-3.14"


class TestPredict:
    def test_matches_library_exactly(self, client, bundle, synth80):
        x = synth80.X[0]
        r = client.post("/api/v1/predict", json={"features": features_of(bundle, x)})
        assert r.status_code == 200
        body = r.json()
        lib = float(bundle.predict(x[None, :])[0])
        assert body["p_kn"] == lib
        assert body["p_kn_display"] == two_decimals(lib)
        assert body["shap"] is None

    def test_missing_feature(self, client, bundle, synth80):
        feats = features_of(bundle, synth80.X[0])
        del feats["fy"]
        r = client.post("/api/v1/predict", json={"features": feats})
        assert r.status_code == 400
        assert r.json() == {"error": "MissingFeature", "feature": "fy"}

    def test_non_finite_value(self, client, bundle, synth80):
        # raw body: python's json parser accepts the NaN literal
        feats = features_of(bundle, synth80.X[0])
        feats["t"] = "NaN"
        body = "{\"features\": {" + ",".join(
            f'"{k}": {v}' for k, v in feats.items()) + "}}"
        r = client.post("/api/v1/predict", content=body,
                        headers={"content-type": "application/json"})
        assert r.status_code == 400
        assert r.json()["error"] == "NonFiniteValue" and r.json()["feature"] == "t"

    def test_extrapolation_flags(self, client, bundle):
        # mid-range values never extrapolate; then push only L outside
        feats = {name: (lo + hi) / 2 for name, (lo, hi) in bundle.feature_ranges.items()}
        r = client.post("/api/v1/predict", json={"features": feats})
        assert r.status_code == 200
        assert sum(r.json()["extrapolation_flags"].values()) == 0
        feats["L"] = bundle.feature_ranges["L"][1] * 10
        flags = client.post("/api/v1/predict", json={"features": feats}).json()["extrapolation_flags"]
        assert flags["L"] is True
        assert sum(flags.values()) == 1

    def test_explain_local_accuracy(self, client, bundle, synth80):
        feats = features_of(bundle, synth80.X[1])
        r = client.post("/api/v1/predict", json={"features": feats, "explain": True})
        body = r.json()
        sh = body["shap"]
        assert sh is not None and len(sh["phi"]) == 10
        assert abs(sh["base_value"] + sum(sh["phi"]) - body["p_kn"]) < 1e-9
        assert sh["features"] == list(bundle.schema.names)

    def test_no_model_503(self):
        c = TestClient(create_app(bundle=None))
        assert c.post("/api/v1/predict", json={"features": {}}).status_code == 503
        assert c.get("/api/v1/model").status_code == 503
        assert c.get("/api/v1/schema").status_code == 503


class TestBatch:
    def batch_csv(self, bundle, rows, header_extra=()):
        header = list(bundle.schema.names) + list(header_extra)
        lines = [",".join(header)]
        for row in rows:
            cells = [repr(float(v)) for v in row[:10]] + [str(v) for v in row[10:]]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def test_batch_equals_singles(self, client, bundle, synth80):
        rows = synth80.X[:7]
        r = client.post("/api/v1/predict/batch", content=self.batch_csv(bundle, rows))
        assert r.status_code == 200
        lines = r.text.strip().split("\n")
        assert lines[0].endswith("P_pred,P_pred_display")
        assert len(lines) == 8
        for i, line in enumerate(lines[1:]):
            cells = line.split(",")
            single = client.post("/api/v1/predict",
                                 json={"features": features_of(bundle, rows[i])}).json()
            assert float(cells[-2]) == single["p_kn"]
            assert cells[-1] == single["p_kn_display"]

    def test_row_order_preserved(self, client, bundle, synth80):
        rows = synth80.X[:5]
        text = self.batch_csv(bundle, rows)
        r = client.post("/api/v1/predict/batch", content=text)
        expected = bundle.predict(rows)
        got = [float(line.split(",")[-2]) for line in r.text.strip().split("\n")[1:]]
        assert got == [float(v) for v in expected]

    def test_target_column_ignored(self, client, bundle, synth80):
        rows = [list(synth80.X[i]) + [synth80.y[i]] for i in range(3)]
        r = client.post("/api/v1/predict/batch",
                        content=self.batch_csv(bundle, rows, header_extra=("P",)))
        assert r.status_code == 200
        assert r.text.strip().split("\n")[0].split(",")[:11] == list(bundle.schema.names) + ["P"]

    def test_empty_dataset(self, client, bundle):
        r = client.post("/api/v1/predict/batch",
                        content=",".join(bundle.schema.names) + "\n")
        assert r.status_code == 400 and r.json()["error"] == "EmptyDataset"

    def test_parse_error_diagnostics(self, client, bundle, synth80):
        rows = [list(synth80.X[0]), list(synth80.X[1])]
        text = self.batch_csv(bundle, rows)
        text = text.replace(repr(float(synth80.X[1][4])), "oops", 1)
        r = client.post("/api/v1/predict/batch", content=text)
        assert r.status_code == 400
        body = r.json()
        assert body["error"] == "ParseError" and body["row"] == 1 and body["column"] == "t"

    def test_batch_limit_413(self, bundle, synth80):
        c = TestClient(create_app(bundle=bundle, batch_limit=3))
        r = c.post("/api/v1/predict/batch", content=self.batch_csv(bundle, synth80.X[:5]))
        assert r.status_code == 413

    def test_missing_column(self, client, bundle, synth80):
        header = ",".join(n for n in bundle.schema.names if n != "Ix")
        r = client.post("/api/v1/predict/batch", content=header + "\n1,2,3,4,5,6,7,8,9\n")
        assert r.status_code == 400 and r.json()["column"] == "Ix"


class TestMetadataEndpoints:
    def test_schema_order_and_units(self, client):
        doc = client.get("/api/v1/schema").json()
        names = [f["name"] for f in doc["features"]]
        assert names == ["w", "h", "b", "d", "t", "L", "A", "Ix", "Iy", "fy"]
        assert doc["features"][9]["unit"] == "MPa"
        assert doc["target"]["name"] == "P"

    def test_model_endpoint(self, client, bundle):
        doc = client.get("/api/v1/model").json()
        assert doc["family"] == "gradient_boosting"
        assert len(doc["feature_ranges"]) == 10
        assert doc["metrics"]["test"]["rmse"] > 0

    def test_stable_across_calls(self, client):
        assert client.get("/api/v1/schema").json() == client.get("/api/v1/schema").json()
        assert client.get("/api/v1/model").json() == client.get("/api/v1/model").json()

    def test_concurrent_identical_requests(self, client, bundle, synth80):
        feats = features_of(bundle, synth80.X[2])
        responses = [client.post("/api/v1/predict", json={"features": feats}).json()
                     for _ in range(5)]
        assert all(r == responses[0] for r in responses)
