import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

import madpath as mp
from madpath.harness import HEART_ACCESSIBLE, fit_espa_pipeline, map_batch
from madpath.service import ServiceConfig, create_app

pytestmark = pytest.mark.skipif(
    not __import__("pathlib").Path("data/heart.csv").exists(),
    reason="bundled data not present")


@pytest.fixture(scope="module")
def heart_service(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("svc")
    schema = mp.heart_schema()
    data = mp.load_csv("data/heart.csv", schema)
    parts = mp.split(data.n_rows, seed=0)
    grid = mp.HyperGrid(n_cells=(16,), entropy_reg=(6e-3,), class_reg=(1e-4,))
    model, standardizer, _ = fit_espa_pipeline(
        data, parts, grid=grid, seed=0, select_restarts=1, final_restarts=2,
        transform="rank")
    model_path = tmp / "heart-model.json"
    mp.save_model(model, model_path)
    config = ServiceConfig(
        model_path=str(model_path), data_path="data/heart.csv", schema=schema,
        allowed_accessible=tuple(HEART_ACCESSIBLE), default_delta=0.5,
        split_seed=0)
    app = create_app(config)
    client = TestClient(app)
    std_features = standardizer.transform(data.features)
    bounds = (std_features.min(axis=0), std_features.max(axis=0))
    return {"client": client, "model": model, "data": data, "parts": parts,
            "standardizer": standardizer, "config": config, "bounds": bounds}


class TestMeta:
    def test_feature_listing(self, heart_service):
        body = heart_service["client"].get("/meta").json()
        assert body["model_kind"] == "espa"
        assert len(body["features"]) == 11
        assert len(body["allowed_accessible"]) == 6
        assert body["default_delta"] == 0.5

    def test_stable_across_calls(self, heart_service):
        c = heart_service["client"]
        assert c.get("/meta").json() == c.get("/meta").json()


class TestRecords:
    def test_test_split_size(self, heart_service):
        body = heart_service["client"].get("/records", params={"split": "test"}).json()
        n = heart_service["data"].n_rows
        assert abs(len(body["records"]) - round(0.25 * n)) <= 1

    def test_unknown_split(self, heart_service):
        resp = heart_service["client"].get("/records", params={"split": "foo"})
        assert resp.status_code == 400
        assert resp.json()["code"] == "unknown_split"

    def test_features_in_original_units(self, heart_service):
        body = heart_service["client"].get("/records", params={"split": "test"}).json()
        rec = body["records"][0]
        raw = heart_service["data"].features[rec["id"]]
        names = heart_service["data"].column_names
        for name, value in rec["features"].items():
            assert value == pytest.approx(raw[names.index(name)], abs=1e-9)

    def test_predictions_match_library_bitwise(self, heart_service):
        body = heart_service["client"].get("/records", params={"split": "test"}).json()
        model = heart_service["model"]
        std = heart_service["standardizer"]
        X = std.transform(heart_service["data"].features)
        from madpath.mapsolve import espa_predict_fn
        predict = espa_predict_fn(model, 1)
        for rec in body["records"][:20]:
            assert rec["risk"] == float(predict(X[rec["id"]][None, :])[0])


class TestMap:
    def test_equivalence_with_batch_pipeline(self, heart_service):
        c = heart_service["client"]
        test_ids = heart_service["parts"].test_idx[:8].tolist()
        model = heart_service["model"]
        std = heart_service["standardizer"]
        data = heart_service["data"]
        std_data = mp.Dataset(features=std.transform(data.features),
                              labels=data.labels, column_names=data.column_names,
                              column_kinds=data.column_kinds,
                              n_classes=data.n_classes)
        queries = [{"record_id": i, "delta": 0.5,
                    "accessible": "|".join(HEART_ACCESSIBLE), "label": 1}
                   for i in test_ids]
        # the service clamps endpoints to the data box; hand the batch
        # pipeline the same box so the comparison is exact
        offline = map_batch(model, std_data, queries, standardizer=std,
                            bounds=heart_service["bounds"])
        for i, row in zip(test_ids, offline):
            resp = c.post("/map", json={"record_id": i, "delta": 0.5,
                                        "accessible": list(HEART_ACCESSIBLE)})
            assert resp.status_code == 200
            body = resp.json()
            assert body["status"] == row["status"]
            if body["status"] == "found":
                assert body["mad"] == pytest.approx(row["mad"], abs=0)
                deltas = {p["name"]: p["delta"] for p in body["per_feature"]}
                for name in HEART_ACCESSIBLE:
                    assert deltas[name] == pytest.approx(row[f"delta_{name}"], abs=0)

    def test_delta_zero_rejected(self, heart_service):
        resp = heart_service["client"].post(
            "/map", json={"record_id": 0, "delta": 0.0,
                          "accessible": list(HEART_ACCESSIBLE)})
        assert resp.status_code == 400
        assert resp.json()["code"] == "bad_delta"

    def test_forbidden_feature(self, heart_service):
        resp = heart_service["client"].post(
            "/map", json={"record_id": 0, "delta": 0.5, "accessible": ["age"]})
        assert resp.status_code == 403
        assert "age" in resp.json()["message"]

    def test_unknown_record(self, heart_service):
        resp = heart_service["client"].post(
            "/map", json={"record_id": 10_000, "delta": 0.5,
                          "accessible": list(HEART_ACCESSIBLE)})
        assert resp.status_code == 404

    def test_infeasible_is_http_200(self, heart_service):
        c = heart_service["client"]
        test_ids = heart_service["parts"].test_idx.tolist()
        saw_infeasible = False
        for i in test_ids:
            body = c.post("/map", json={"record_id": i, "delta": 0.99,
                                        "accessible": list(HEART_ACCESSIBLE)}).json()
            if body["status"] == "infeasible":
                saw_infeasible = True
                assert body["per_cell"]  # diagnostics present
                break
        assert saw_infeasible

    def test_read_only_order_independent(self, heart_service):
        c = heart_service["client"]
        i = int(heart_service["parts"].test_idx[0])
        req = {"record_id": i, "delta": 0.4,
               "accessible": list(HEART_ACCESSIBLE)}
        first = c.post("/map", json=req).json()
        c.get("/records", params={"split": "train"})
        c.get("/meta")
        second = c.post("/map", json=req).json()
        assert first == second


class TestBoxedEndpoints:
    def test_found_endpoints_stay_in_data_box(self, heart_service):
        c = heart_service["client"]
        lo, hi = heart_service["bounds"]
        names = heart_service["data"].column_names
        found = 0
        for i in heart_service["parts"].test_idx.tolist():
            body = c.post("/map", json={"record_id": i, "delta": 0.2,
                                        "accessible": list(HEART_ACCESSIBLE)}).json()
            if body.get("status") != "found":
                continue
            found += 1
            for p in body["per_feature"]:
                j = names.index(p["name"])
                assert lo[j] - 1e-9 <= p["after_std"] <= hi[j] + 1e-9
            if found >= 5:
                break
        assert found > 0
