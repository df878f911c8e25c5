"""Command-line entry points: gen, train, map, sweep, figdata, biomed, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import espa as espa_mod
from .data import Dataset, DatasetSchema, heart_schema, insurance_schema, load_csv, split, standardize
from .errors import MadpathError, SchemaError
from .glm import fit_logistic, glm_predict_proba
from .harness import (
    HEART_ACCESSIBLE,
    HEART_DELTA,
    INSURANCE_ACCESSIBLE,
    INSURANCE_DELTA,
    emit_figure_data,
    fit_espa_pipeline,
    map_batch,
    run_biomedical,
    run_sweep,
)
from .mapsolve import MapQuery, map_espa, map_glm
from .metrics import accuracy, auc
from .modelio import load_model, save_model, with_standardizer
from .swissroll import SwissRollSpec, gen_swiss_roll


def _load_schema(args) -> DatasetSchema:
    if args.schema == "insurance":
        return insurance_schema()
    if args.schema == "heart":
        return heart_schema()
    return DatasetSchema.from_json(args.schema)


def _write_dataset_csv(data: Dataset, path: str) -> None:
    header = ",".join([*data.column_names, data.label_name])
    lines = [header]
    for row, y in zip(data.features, data.labels):
        lines.append(",".join(repr(float(v)) for v in row) + f",{int(y)}")
    Path(path).write_text("\n".join(lines) + "\n")


def cmd_gen(args) -> int:
    spec = SwissRollSpec(n_points=args.n, turns=args.turns,
                         noise_sigma=args.noise, extra_dims=args.extra_dims,
                         seed=args.seed)
    data = gen_swiss_roll(spec)
    _write_dataset_csv(data, args.out)
    print(json.dumps({"written": args.out, "rows": data.n_rows,
                      "columns": data.n_features}))
    return 0


def cmd_train(args) -> int:
    schema = _load_schema(args)
    data = load_csv(args.data, schema)
    parts = split(data.n_rows, seed=args.seed)
    if args.kind == "espa":
        grid = espa_mod.HyperGrid(
            n_cells=tuple(args.grid_cells),
            entropy_reg=tuple(args.grid_entropy),
            class_reg=tuple(args.grid_class))
        model, standardizer, info = fit_espa_pipeline(
            data, parts, grid=grid, seed=args.seed,
            final_restarts=args.restarts)
        std_data = Dataset(features=standardizer.transform(data.features),
                           labels=data.labels, column_names=data.column_names,
                           column_kinds=data.column_kinds,
                           n_classes=data.n_classes)
        proba = espa_mod.predict_proba(model, std_data.features[parts.test_idx])
        scores, pred = proba[:, 1], np.argmax(proba, axis=1)
        extra = {"hyper": info["hyper"]}
    elif args.kind == "glm":
        std_data, standardizer = standardize(data, parts.train_idx)
        model = fit_logistic(std_data.subset(parts.train_idx), l2=args.l2)
        model = with_standardizer(model, standardizer)
        scores = np.atleast_1d(
            glm_predict_proba(model, std_data.features[parts.test_idx]))
        pred = (scores >= 0.5).astype(int)
        extra = {"l2": args.l2}
    else:
        raise SchemaError(f"unknown model kind {args.kind!r}")
    save_model(model, args.out)
    labels = data.labels[parts.test_idx]
    print(json.dumps({"model": args.out, "kind": args.kind,
                      "test_auc": auc(scores, labels),
                      "test_accuracy": accuracy(pred, labels), **extra}))
    return 0


def _read_query_csv(path: str) -> list[dict]:
    import csv
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def cmd_map(args) -> int:
    model = load_model(args.model)
    schema = _load_schema(args)
    data = load_csv(args.data, schema)
    if model.column_names and data.column_names != model.column_names:
        raise SchemaError("dataset columns do not match the model's")
    std = model.standardizer
    std_data = Dataset(features=std.transform(data.features) if std else data.features,
                       labels=data.labels, column_names=data.column_names,
                       column_kinds=data.column_kinds, n_classes=data.n_classes)
    if args.queries:
        queries = _read_query_csv(args.queries)
    else:
        if args.record is None or args.delta is None or not args.accessible:
            raise SchemaError("need --queries or (--record, --delta, --accessible)")
        queries = [{"record_id": args.record, "delta": args.delta,
                    "accessible": args.accessible, "mode": args.mode,
                    "label": args.label}]
    rows = map_batch(model, std_data, queries, standardizer=std, eta=args.eta)
    cols = list(rows[0].keys())
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(str(r.get(c, "")) for c in cols))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(json.dumps({"written": args.out, "n_queries": len(rows)}))
    else:
        sys.stdout.write(text)
    return 0


def cmd_sweep(args) -> int:
    grid = espa_mod.HyperGrid(n_cells=tuple(args.grid_cells),
                              entropy_reg=tuple(args.grid_entropy),
                              class_reg=tuple(args.grid_class))
    report = run_sweep(args.kind, args.values, methods=args.methods,
                       seeds=args.seeds, n_points=args.n, grid=grid)
    report.to_json(args.out)
    if args.csv:
        report.rows_to_csv(args.csv)
    print(json.dumps({"written": args.out,
                      "aggregates": report.aggregates()}))
    return 0


def cmd_figdata(args) -> int:
    model = load_model(args.model)
    data = None
    if args.data:
        schema = _load_schema(args)
        raw = load_csv(args.data, schema)
        std = model.standardizer
        data = Dataset(features=std.transform(raw.features) if std else raw.features,
                       labels=raw.labels, column_names=raw.column_names,
                       column_kinds=raw.column_kinds, n_classes=raw.n_classes)
    map_results = []
    if args.queries and data is not None:
        for spec in _read_query_csv(args.queries):
            i = int(spec["record_id"])
            names = [n for n in spec["accessible"].split("|") if n]
            q = MapQuery(x=data.features[i], label=int(spec.get("label", 0)),
                         delta=float(spec["delta"]),
                         accessible=tuple(data.column_index(n) for n in names))
            r = map_glm(model, q) if hasattr(model, "coef") else map_espa(model, q)
            map_results.append((q, r))
    doc = emit_figure_data(model, grid_n=args.grid_n, label=args.label,
                           data=data, map_results=map_results)
    Path(args.out).write_text(json.dumps(doc) + "\n")
    print(json.dumps({"written": args.out, "grid_n": args.grid_n,
                      "segments": len(doc["segments"])}))
    return 0


def cmd_biomed(args) -> int:
    if args.dataset == "insurance":
        schema = insurance_schema()
        delta = args.delta if args.delta is not None else INSURANCE_DELTA
        accessible = args.accessible or list(INSURANCE_ACCESSIBLE)
        default_path = "data/insurance.csv"
    elif args.dataset == "heart":
        schema = heart_schema()
        delta = args.delta if args.delta is not None else HEART_DELTA
        accessible = args.accessible or list(HEART_ACCESSIBLE)
        default_path = "data/heart.csv"
    else:
        raise SchemaError("dataset must be 'insurance' or 'heart'")
    data = load_csv(args.data or default_path, schema)
    report = run_biomedical(data, args.dataset, delta=delta,
                            accessible_names=accessible, seed=args.seed)
    report.to_json(args.out)
    if args.age_csv:
        report.age_summary_csv(args.age_csv)
    print(json.dumps({"written": args.out, "test_auc": report.test_auc,
                      "fraction_found": report.fraction_found,
                      "n_positive_test": report.n_positive_test}))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app
    schema = _load_schema(args)
    config = ServiceConfig(model_path=args.model, data_path=args.data,
                           schema=schema,
                           allowed_accessible=tuple(args.allowed),
                           default_delta=args.delta_default, eta=args.eta,
                           split_seed=args.seed)
    app = create_app(config)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _floats(text):
    return [float(v) for v in text.split(",") if v]


def _ints(text):
    return [int(v) for v in text.split(",") if v]


def build_parser(config_defaults: dict | None = None) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="madpath",
        description="minimal adversarial paths for entropic classifiers and GLMs")
    parser.add_argument("--config", default=None,
                        help="JSON file with default values for any flag")
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers: list[argparse.ArgumentParser] = []

    def add_parser(name, **kw):
        p = sub.add_parser(name, **kw)
        subparsers.append(p)
        return p

    p = add_parser("gen", help="generate a two-spiral benchmark CSV")
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--turns", type=int, default=2)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--extra-dims", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = add_parser("train", help="train a model from a CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True,
                   help="'insurance', 'heart', or a schema JSON path")
    p.add_argument("--kind", choices=("espa", "glm"), default="espa")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--grid-cells", type=_ints, default=[4, 8, 16, 32, 64])
    p.add_argument("--grid-entropy", type=_floats, default=[1e-3, 1e-2, 1e-1, 1.0])
    p.add_argument("--grid-class", type=_floats, default=[1e-2, 1e-1, 1.0, 10.0])
    p.add_argument("--out", required=True, help="model JSON path")
    p.set_defaults(func=cmd_train)

    p = add_parser("map", help="solve MAP queries against a model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--queries", help="CSV with record_id,delta,accessible[,mode,label]")
    p.add_argument("--record", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--accessible", nargs="*", default=[])
    p.add_argument("--mode", choices=("inequality", "equality"),
                   default="inequality")
    p.add_argument("--label", type=int, default=1)
    p.add_argument("--eta", type=float, default=1e-6)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_map)

    p = add_parser("sweep", help="benchmark sweep over turns/dimensions")
    p.add_argument("--kind", choices=("turns", "extra_dims"), required=True)
    p.add_argument("--values", type=_ints, required=True)
    p.add_argument("--methods", type=lambda s: s.split(","),
                   default=["espa", "glm"])
    p.add_argument("--seeds", type=_ints, default=[0])
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--grid-cells", type=_ints, default=[16, 32, 64])
    p.add_argument("--grid-entropy", type=_floats, default=[1e-3, 1e-2, 1e-1])
    p.add_argument("--grid-class", type=_floats, default=[0.1, 1.0, 10.0])
    p.add_argument("--out", required=True)
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_sweep)

    p = add_parser("figdata", help="emit contour/scatter/segment plot data")
    p.add_argument("--model", required=True)
    p.add_argument("--data", default=None)
    p.add_argument("--schema", default=None)
    p.add_argument("--queries", default=None)
    p.add_argument("--grid-n", type=int, default=128)
    p.add_argument("--label", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_figdata)

    p = add_parser("biomed", help="run a biomedical pipeline end to end")
    p.add_argument("--dataset", choices=("insurance", "heart"), required=True)
    p.add_argument("--data", default=None, help="CSV path (defaults to data/)")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--accessible", nargs="*", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--age-csv", default=None)
    p.set_defaults(func=cmd_biomed)

    p = add_parser("serve", help="serve a model over HTTP")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--allowed", nargs="+", required=True)
    p.add_argument("--delta-default", type=float, default=0.5)
    p.add_argument("--eta", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    if config_defaults:
        parser.set_defaults(**config_defaults)
        for sp in subparsers:
            sp.set_defaults(**config_defaults)
    return parser


def main(argv=None) -> int:
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config", default=None)
    pre, _ = probe.parse_known_args(argv)
    defaults = None
    if pre.config:
        defaults = json.loads(Path(pre.config).read_text())
    parser = build_parser(defaults)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MadpathError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
