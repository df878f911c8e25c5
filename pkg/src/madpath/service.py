"""Read-only HTTP facade over one trained model and its dataset.

Three endpoints: model/feature metadata, record listings per split, and
the intervention solver. Infeasibility is a domain outcome (HTTP 200
with status "infeasible"), not a transport error. All server state is
immutable after startup, so concurrent requests need no locks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .data import DatasetSchema, load_csv, split
from .errors import SchemaError
from .espa import EspaModel
from .glm import GlmModel
from .harness import round_binary_deltas
from .mapsolve import MapQuery, espa_predict_fn, glm_predict_fn, map_espa, map_glm
from .modelio import load_model


@dataclass(frozen=True)
class ServiceConfig:
    model_path: str
    data_path: str
    schema: DatasetSchema
    allowed_accessible: tuple[str, ...]
    default_delta: float = 0.5
    eta: float = 1e-6
    positive_label: int = 1
    split_seed: int | None = None
    ratios: tuple[float, float, float] = (0.5, 0.25, 0.25)
    unit_box: bool = True  # clamp espa endpoints to the transformed data box

    def __post_init__(self):
        if not self.allowed_accessible:
            raise SchemaError("allowed accessible set must be non-empty")


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"code": code, "message": message})


class MapRequest(BaseModel):
    record_id: int
    accessible: list[str]
    delta: float


def create_app(config: ServiceConfig) -> FastAPI:
    model = load_model(config.model_path)
    if model.standardizer is None or model.column_names is None:
        raise SchemaError("service needs a model with standardizer and columns")
    data = load_csv(config.data_path, config.schema)
    if data.column_names != model.column_names:
        raise SchemaError("dataset columns do not match the model's")
    for name in config.allowed_accessible:
        data.column_index(name)  # must exist

    std = model.standardizer
    std_features = std.transform(data.features)
    seed = config.split_seed
    if seed is None:
        seed = model.hyper.seed if isinstance(model, EspaModel) else 0
    parts = split(data.n_rows, ratios=config.ratios, seed=seed)
    split_idx = {"train": parts.train_idx, "valid": parts.valid_idx,
                 "test": parts.test_idx}
    label = config.positive_label
    if isinstance(model, GlmModel):
        predict = glm_predict_fn(model, label)
        kind = "glm"
    else:
        predict = espa_predict_fn(model, label)
        kind = "espa"
    risks = np.asarray(predict(std_features), dtype=float)

    app = FastAPI(title="madpath intervention service")
    # the explorer UI is served as static files from anywhere; the API is
    # read-only, so permissive CORS is safe
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["GET", "POST"], allow_headers=["*"])

    @app.get("/meta")
    def meta():
        body = {
            "model_kind": kind,
            "features": [{"name": n, "kind": k}
                         for n, k in zip(data.column_names, data.column_kinds)],
            "allowed_accessible": list(config.allowed_accessible),
            "default_delta": config.default_delta,
            "positive_label": label,
            "n_records": data.n_rows,
            "splits": sorted(split_idx),
        }
        if isinstance(model, EspaModel):
            body["n_cells"] = model.n_cells
        return body

    @app.get("/records")
    def records(split: str = "test"):
        if split not in split_idx:
            return _error(400, "unknown_split",
                          f"split must be one of {sorted(split_idx)}")
        rows = []
        for i in split_idx[split].tolist():
            rows.append({
                "id": int(i),
                "features": {n: float(v) for n, v in
                             zip(data.column_names, data.features[i])},
                "label": int(data.labels[i]),
                "risk": float(risks[i]),
            })
        return {"split": split, "records": rows}

    @app.post("/map")
    def map_endpoint(req: MapRequest):
        if not 0 <= req.record_id < data.n_rows:
            return _error(404, "unknown_record",
                          f"no record {req.record_id}")
        if not req.accessible:
            return _error(400, "empty_accessible",
                          "accessible set must be non-empty")
        bad = [n for n in req.accessible if n not in config.allowed_accessible]
        if bad:
            return _error(403, "forbidden_feature",
                          f"not in the allowed accessible set: {bad}")
        if not 0.0 < req.delta <= 1.0:
            return _error(400, "bad_delta", "delta must satisfy 0 < delta <= 1")
        acc_idx = tuple(data.column_index(n) for n in req.accessible)
        x = std_features[req.record_id]
        bounds = None
        if config.unit_box and not isinstance(model, GlmModel):
            lo = np.minimum(std_features.min(axis=0), x)
            hi = np.maximum(std_features.max(axis=0), x)
            bounds = (lo, hi)
        q = MapQuery(x=x, label=label, delta=req.delta, accessible=acc_idx,
                     bounds=bounds)
        if isinstance(model, GlmModel):
            try:
                result = map_glm(model, q)
            except Exception as exc:
                return _error(422, "solver_domain", str(exc))
        else:
            result = map_espa(model, q, eta=config.eta)

        body = {
            "record_id": req.record_id,
            "status": result.status,
            "delta": req.delta,
            "accessible": list(req.accessible),
            "risk_before": float(risks[req.record_id]),
            "per_cell": [{"cell": o.cell, "reason": o.reason,
                          "drop": o.drop} for o in result.per_cell],
        }
        if result.found:
            x_orig = std.inverse_transform(x)
            x_star_orig = std.inverse_transform(result.x_star)
            body.update({
                "mad": result.mad,
                "mad_boundary": result.mad_boundary,
                "achieved_drop": result.achieved_drop,
                "risk_after": float(risks[req.record_id]) - result.achieved_drop,
                "winner_cells": list(result.winner_cells),
                "eta": result.nudge,
                "per_feature": [
                    {"name": data.column_names[j],
                     "before": float(x_orig[j]),
                     "after": float(x_star_orig[j]),
                     "delta": float(x_star_orig[j] - x_orig[j]),
                     "before_std": float(x[j]),
                     "after_std": float(result.x_star[j])}
                    for j in acc_idx],
            })
            rounding = round_binary_deltas(model, q, result, data.column_kinds,
                                           transform=std)
            if rounding:
                body["binary_rounding"] = rounding
        return body

    return app
