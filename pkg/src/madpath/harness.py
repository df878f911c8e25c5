"""Experiment pipelines: benchmark sweeps, figure data, biomedical runs.

Everything here is deterministic in the seeds it is handed, records one
row per work unit (no silent drops; failures are captured per row), and
re-verifies every MAP record through the owning model's own prediction
before it lands in a report.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import espa as espa_mod
from .data import Dataset, SplitSpec, Standardizer, rank_smooth, split, standardize
from .errors import SchemaError, UnsupportedError
from .glm import GlmModel, fit_logistic, glm_predict_proba
from .mapsolve import (
    FOUND,
    MapQuery,
    MapResult,
    espa_predict_fn,
    glm_predict_fn,
    map_espa,
    map_glm,
)
from .metrics import accuracy, auc
from .modelio import with_standardizer
from .swissroll import SwissRollSpec, gen_swiss_roll

INSURANCE_DELTA = 0.9
INSURANCE_ACCESSIBLE = ("smoker", "bmi", "steps")
HEART_DELTA = 0.5
HEART_ACCESSIBLE = ("serum_creatinine", "platelets", "ejection_fraction",
                    "creatinine_phosphokinase", "serum_sodium", "smoking")


@dataclass
class ExperimentReport:
    kind: str
    rows: list[dict] = field(default_factory=list)
    map_records: list[dict] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def aggregates(self) -> list[dict]:
        """Mean and stddev of the metric columns per (value, method)."""
        groups: dict[tuple, list[dict]] = {}
        for row in self.rows:
            if row.get("error"):
                continue
            groups.setdefault((row["value"], row["method"]), []).append(row)
        out = []
        for (value, method), rows in sorted(groups.items()):
            entry = {"value": value, "method": method, "n_seeds": len(rows)}
            for metric in ("test_accuracy", "test_auc"):
                vals = np.array([r[metric] for r in rows])
                entry[f"{metric}_mean"] = float(vals.mean())
                entry[f"{metric}_std"] = float(vals.std())
            out.append(entry)
        return out

    def to_json(self, path) -> None:
        doc = {"kind": self.kind, "meta": self.meta, "rows": self.rows,
               "aggregates": self.aggregates(), "map_records": self.map_records}
        Path(path).write_text(json.dumps(doc, indent=1, default=_jsonable) + "\n")

    def rows_to_csv(self, path) -> None:
        if not self.rows:
            Path(path).write_text("")
            return
        cols = sorted({k for r in self.rows for k in r})
        lines = [",".join(cols)]
        for r in self.rows:
            lines.append(",".join(_csv_field(r.get(c, "")) for c in cols))
        Path(path).write_text("\n".join(lines) + "\n")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def _csv_field(v) -> str:
    s = f"{v}"
    if "," in s or '"' in s or "\n" in s:
        s = '"' + s.replace('"', '""') + '"'
    return s


def fit_espa_pipeline(data: Dataset, parts: SplitSpec, *, grid=None, seed=0,
                      select_restarts=2, final_restarts=10, label=1,
                      annealed=True, transform="affine", one_se_rule=False):
    """Standardize (affine or smoothed-rank), select hyperparameters on
    validation, refit on train."""
    if transform == "rank":
        std_data, standardizer = rank_smooth(data, parts.train_idx)
    else:
        std_data, standardizer = standardize(data, parts.train_idx)
    grid = grid or espa_mod.HyperGrid()
    hyper, table = espa_mod.select_hyperparams(
        std_data, parts, grid, label=label, seed=seed,
        n_restarts=select_restarts, annealed=annealed, one_se_rule=one_se_rule)
    hyper = dataclasses.replace(hyper, n_restarts=final_restarts)
    if annealed:
        model, state = espa_mod.train_annealed(
            std_data.subset(parts.train_idx), hyper,
            valid_data=std_data.subset(parts.valid_idx), label=label)
    else:
        model, state = espa_mod.train(std_data.subset(parts.train_idx), hyper)
    model = with_standardizer(model, standardizer)
    info = {"hyper": dataclasses.asdict(hyper), "selection_table": table,
            "loss_history": state.loss_history}
    return model, standardizer, info


def _evaluate(model, std_data: Dataset, idx, label: int) -> dict:
    sub = std_data.subset(idx)
    if isinstance(model, GlmModel):
        scores = np.atleast_1d(glm_predict_proba(model, sub.features))
        pred = (scores >= 0.5).astype(int)
    else:
        proba = espa_mod.predict_proba(model, sub.features)
        scores = proba[:, label]
        pred = np.argmax(proba, axis=1)
    return {"test_accuracy": accuracy(pred, sub.labels),
            "test_auc": auc(scores, sub.labels)}


def run_sweep(kind: str, values, methods=("espa", "glm"), seeds=(0,), *,
              n_points: int = 1024, turns: int = 2, noise: float = 0.0,
              grid=None) -> ExperimentReport:
    """Benchmark sweep over spiral turns or nuisance dimensions.

    One row per (value, method, seed); training failures are recorded in
    the row and the sweep continues.
    """
    if kind not in ("turns", "extra_dims"):
        raise SchemaError("sweep kind must be 'turns' or 'extra_dims'")
    report = ExperimentReport(kind=kind, meta={
        "values": list(values), "methods": list(methods),
        "seeds": list(seeds), "n_points": n_points})
    for value in values:
        for seed in seeds:
            spec = SwissRollSpec(
                n_points=n_points,
                turns=value if kind == "turns" else turns,
                extra_dims=value if kind == "extra_dims" else 0,
                noise_sigma=noise, seed=seed)
            data = gen_swiss_roll(spec)
            parts = split(data.n_rows, seed=seed)
            for method in methods:
                row = {"kind": kind, "value": value, "method": method,
                       "seed": seed, "error": ""}
                t0 = time.perf_counter()
                try:
                    if method == "espa":
                        model, _, info = fit_espa_pipeline(
                            data, parts, grid=grid, seed=seed)
                        std_data = Dataset(
                            features=model.standardizer.transform(data.features),
                            labels=data.labels, column_names=data.column_names,
                            column_kinds=data.column_kinds,
                            n_classes=data.n_classes)
                        row.update(_evaluate(model, std_data, parts.test_idx, 1))
                        row["n_cells"] = info["hyper"]["n_cells"]
                    elif method == "glm":
                        std_data, standardizer = standardize(data, parts.train_idx)
                        model = fit_logistic(std_data.subset(parts.train_idx))
                        row.update(_evaluate(model, std_data, parts.test_idx, 1))
                    else:
                        raise SchemaError(f"unknown method {method!r}")
                except Exception as exc:  # recorded, sweep continues
                    row["error"] = f"{type(exc).__name__}: {exc}"
                row["runtime_s"] = time.perf_counter() - t0
                report.rows.append(row)
    return report


def emit_figure_data(model, *, grid_n: int = 128, box=None, label: int = 0,
                     data: Dataset | None = None,
                     map_results: list[tuple[MapQuery, MapResult]] | None = None) -> dict:
    """Contour grid + scatter + MAP segments as one plot-data document.

    No rendering: the output is a JSON-ready dict any plotting tool can
    consume. The model must act on a 2-D informative space.
    """
    n_features = model.n_features
    if n_features != 2:
        raise UnsupportedError("figure data needs a 2-D model (no projection)")
    if box is None:
        if data is not None:
            lo = data.features.min(axis=0) - 0.5
            hi = data.features.max(axis=0) + 0.5
            box = (lo[0], hi[0], lo[1], hi[1])
        else:
            box = (-2.5, 2.5, -2.5, 2.5)
    gx = np.linspace(box[0], box[1], grid_n)
    gy = np.linspace(box[2], box[3], grid_n)
    XX, YY = np.meshgrid(gx, gy)
    pts = np.column_stack([XX.ravel(), YY.ravel()])
    if isinstance(model, GlmModel):
        predict = glm_predict_fn(model, label)
    else:
        predict = espa_predict_fn(model, label)
    prob = np.asarray(predict(pts), dtype=float).reshape(grid_n, grid_n)
    doc = {"grid_x": gx.tolist(), "grid_y": gy.tolist(),
           "prob": prob.tolist(), "label": label,
           "scatter": None, "segments": []}
    if data is not None:
        doc["scatter"] = {"x": data.features[:, 0].tolist(),
                          "y": data.features[:, 1].tolist(),
                          "label": data.labels.tolist()}
    for q, r in (map_results or []):
        seg = {"from": q.x.tolist(), "delta": q.delta, "status": r.status}
        if r.found:
            p0 = float(np.atleast_1d(predict(q.x[None, :]))[0])
            p1 = float(np.atleast_1d(predict(r.x_star[None, :]))[0])
            seg.update({"to": r.x_star.tolist(), "mad": r.mad,
                        "verified_drop": p0 - p1})
        doc["segments"].append(seg)
    return doc


def round_binary_deltas(model, q: MapQuery, result: MapResult, column_kinds,
                        transform=None) -> dict | None:
    """Nearest-feasible rounding for binary accessible features.

    The solver treats binary coordinates continuously; this reports the
    endpoint with those coordinates snapped to {0,1} in original units
    and re-verifies the achieved drop through the model. ``transform``
    is the fitted feature transform when the model space is not the
    original one.
    """
    if not result.found:
        return None
    binary_acc = [i for i in q.accessible if column_kinds[i] == "binary"]
    if not binary_acc:
        return None
    if transform is not None:
        orig = np.atleast_2d(transform.inverse_transform(result.x_star))[0]
        # snap only coordinates that actually sit between the two levels;
        # ones already at a level keep the endpoint value bit-for-bit
        moved = [i for i in binary_acc
                 if min(abs(orig[i]), abs(orig[i] - 1.0)) > 1e-6]
        if not moved:
            rounded = result.x_star.copy()
        else:
            orig[moved] = np.clip(np.round(orig[moved]), 0.0, 1.0)
            retrans = np.atleast_2d(transform.transform(orig))[0]
            rounded = result.x_star.copy()
            rounded[moved] = retrans[moved]
    else:
        rounded = result.x_star.copy()
        rounded[binary_acc] = np.clip(np.round(rounded[binary_acc]), 0.0, 1.0)
    predict = espa_predict_fn(model, q.label) if not isinstance(model, GlmModel) \
        else glm_predict_fn(model, q.label)
    p0 = float(np.atleast_1d(predict(q.x[None, :]))[0])
    p1 = float(np.atleast_1d(predict(rounded[None, :]))[0])
    drop = p0 - p1
    return {"x_star_rounded": rounded.tolist(),
            "mad_rounded": float(np.linalg.norm(rounded[list(q.accessible)] -
                                                q.x[list(q.accessible)])),
            "achieved_drop_rounded": drop,
            "meets_delta": bool(drop >= q.delta - 1e-9)}


@dataclass
class BiomedReport:
    dataset: str
    seed: int
    test_auc: float
    n_positive_test: int
    n_found: int
    fraction_found: float
    hyper: dict
    delta: float
    accessible: tuple[str, ...]
    records: list[dict] = field(default_factory=list)
    age_summary: list[dict] = field(default_factory=list)

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(dataclasses.asdict(self), indent=1,
                                         default=_jsonable) + "\n")

    def age_summary_csv(self, path) -> None:
        lines = ["age_bin,n,n_found,fraction_found,mean_mad_found"]
        for row in self.age_summary:
            lines.append(f"{row['age_bin']},{row['n']},{row['n_found']},"
                         f"{row['fraction_found']:.4f},{row['mean_mad_found']:.6g}")
        Path(path).write_text("\n".join(lines) + "\n")


BIOMED_GRID = espa_mod.HyperGrid(
    n_cells=(8, 16, 30, 60),
    entropy_reg=(1e-3, 3e-3, 6e-3, 1e-2, 3e-2),
    class_reg=(1e-4, 1e-2, 1e-1))


def run_biomedical(data: Dataset, dataset_name: str, *, delta: float,
                   accessible_names, seed: int = 0, grid=None,
                   positive_label: int = 1, eta: float = 1e-6,
                   select_restarts: int = 2, final_restarts: int = 10,
                   transform: str = "rank", one_se_rule: bool = False) -> BiomedReport:
    """Full pipeline: grid-selected model, test AUC, one MAP per
    positive-class test record, fraction with a feasible intervention.

    Features go through the smoothed-rank transform by default: it puts
    binary and heavy-tailed columns on one scale, which the cell
    classifier needs to place its feature weights on the informative
    coordinates (pass ``transform="affine"`` for plain z-scores).
    """
    if grid is None:
        grid = BIOMED_GRID if transform == "rank" else None
    parts = split(data.n_rows, seed=seed)
    model, standardizer, info = fit_espa_pipeline(
        data, parts, grid=grid, seed=seed, label=positive_label,
        select_restarts=select_restarts, final_restarts=final_restarts,
        transform=transform, one_se_rule=one_se_rule)
    std_features = standardizer.transform(data.features)
    std_data = Dataset(features=std_features, labels=data.labels,
                       column_names=data.column_names,
                       column_kinds=data.column_kinds, n_classes=data.n_classes)
    metrics = _evaluate(model, std_data, parts.test_idx, positive_label)

    acc_idx = tuple(data.column_index(n) for n in accessible_names)
    predict = espa_predict_fn(model, positive_label)
    records = []
    n_found = 0
    positives = [int(i) for i in parts.test_idx
                 if data.labels[i] == positive_label]
    age_col = data.column_index("age") if "age" in data.column_names else None
    D = data.n_features
    bounds = (np.zeros(D), np.ones(D)) if transform == "rank" else None
    for i in positives:
        x = std_features[i]
        q = MapQuery(x=x, label=positive_label, delta=delta,
                     accessible=acc_idx, bounds=bounds)
        r = map_espa(model, q, eta=eta)
        rec = {"record_id": i, "status": r.status,
               "risk_before": float(np.atleast_1d(predict(x[None, :]))[0])}
        if r.found:
            n_found += 1
            verified = rec["risk_before"] - float(
                np.atleast_1d(predict(r.x_star[None, :]))[0])
            deltas_std = r.x_star - x
            deltas_orig = (standardizer.inverse_transform(r.x_star)
                           - standardizer.inverse_transform(x))
            rec.update({
                "mad": r.mad, "achieved_drop": verified,
                "deltas_original_units": {
                    data.column_names[j]: float(deltas_orig[j]) for j in acc_idx},
                "deltas_standardized": {
                    data.column_names[j]: float(deltas_std[j]) for j in acc_idx},
            })
            rounding = round_binary_deltas(model, q, r, data.column_kinds,
                                           transform=standardizer)
            if rounding:
                rec["binary_rounding"] = rounding
        if age_col is not None:
            rec["age"] = float(data.features[i, age_col])
        records.append(rec)

    age_summary = []
    if age_col is not None and records:
        ages = np.array([r["age"] for r in records])
        bins = (ages // 10 * 10).astype(int)
        for b in sorted(set(bins.tolist())):
            mask = bins == b
            found_mask = np.array([r["status"] == FOUND for r in records]) & mask
            mads = [r["mad"] for r, f in zip(records, found_mask) if f]
            age_summary.append({
                "age_bin": f"{b}-{b + 9}",
                "n": int(mask.sum()),
                "n_found": int(found_mask.sum()),
                "fraction_found": float(found_mask.sum() / mask.sum()),
                "mean_mad_found": float(np.mean(mads)) if mads else float("nan"),
            })

    return BiomedReport(
        dataset=dataset_name, seed=seed, test_auc=metrics["test_auc"],
        n_positive_test=len(positives), n_found=n_found,
        fraction_found=n_found / len(positives) if positives else float("nan"),
        hyper=info["hyper"], delta=delta,
        accessible=tuple(accessible_names), records=records,
        age_summary=age_summary)


def map_batch(model, std_data: Dataset, queries: list[dict], *,
              standardizer: Standardizer | None = None, eta: float = 1e-6,
              bounds=None) -> list[dict]:
    """One result row per query row (CSV-friendly flat dicts).

    Query dicts carry record_id, delta, accessible (column names), and
    optionally mode and label. Results report status, mad and the
    per-feature deltas in original units next to the standardized ones.
    """
    rows = []
    for spec in queries:
        i = int(spec["record_id"])
        names = spec["accessible"]
        if isinstance(names, str):
            names = [n for n in names.split("|") if n]
        acc_idx = tuple(std_data.column_index(n) for n in names)
        label = int(spec.get("label", 1))
        q = MapQuery(x=std_data.features[i], label=label,
                     delta=float(spec["delta"]), accessible=acc_idx,
                     mode=spec.get("mode", "inequality"),
                     bounds=bounds if not isinstance(model, GlmModel) else None)
        if isinstance(model, GlmModel):
            r = map_glm(model, q)
        else:
            r = map_espa(model, q, eta=eta)
        row = {"record_id": i, "status": r.status,
               "mad": r.mad if r.found else "",
               "achieved_drop": r.achieved_drop if r.found else ""}
        if r.found and standardizer is not None:
            d_orig = (np.atleast_2d(standardizer.inverse_transform(r.x_star))[0]
                      - np.atleast_2d(standardizer.inverse_transform(q.x))[0])
        elif r.found:
            d_orig = r.x_star - q.x
        for j, name in zip(acc_idx, names):
            row[f"delta_{name}"] = float(d_orig[j]) if r.found else ""
        rows.append(row)
    return rows
