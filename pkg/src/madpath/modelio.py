"""Model files: one self-describing JSON document per trained model.

The document carries the model family, every parameter array (matrices
column-major), the hyperparameters, the fitted standardizer, column
names, and the training seed. Floats use Python's shortest-roundtrip
decimal form, so save -> load reproduces every array bit-exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .data import Standardizer, load_transform
from .errors import SchemaError
from .espa import EspaHyperparams, EspaModel
from .glm import GlmModel

FORMAT = "madpath-model"
VERSION = 1


def _standardizer_doc(model) -> dict | None:
    std = model.standardizer
    return std.to_doc() if std is not None else None


def model_to_doc(model) -> dict:
    if isinstance(model, EspaModel):
        h = model.hyper
        return {
            "format": FORMAT,
            "version": VERSION,
            "kind": "espa",
            "n_features": model.n_features,
            "n_cells": model.n_cells,
            "n_classes": model.n_classes,
            "feature_weights": model.feature_weights.tolist(),
            "centers_colmajor": model.centers.T.tolist(),
            "cell_class_probs_colmajor": model.cell_class_probs.T.tolist(),
            "hyper": {
                "n_cells": h.n_cells,
                "entropy_reg": h.entropy_reg,
                "class_reg": h.class_reg,
                "max_iters": h.max_iters,
                "tol": h.tol,
                "n_restarts": h.n_restarts,
                "seed": h.seed,
            },
            "standardizer": _standardizer_doc(model),
            "column_names": list(model.column_names) if model.column_names else None,
            "seed": h.seed,
        }
    if isinstance(model, GlmModel):
        return {
            "format": FORMAT,
            "version": VERSION,
            "kind": "glm",
            "n_features": model.n_features,
            "coef": model.coef.tolist(),
            "intercept": model.intercept,
            "link": model.link,
            "standardizer": _standardizer_doc(model),
            "column_names": list(model.column_names) if model.column_names else None,
        }
    raise SchemaError(f"cannot serialize {type(model).__name__}")


def model_from_doc(doc: dict):
    if doc.get("format") != FORMAT:
        raise SchemaError("not a model document")
    std = doc.get("standardizer")
    std = load_transform(std) if std is not None else None
    names = doc.get("column_names")
    names = tuple(names) if names else None
    kind = doc.get("kind")
    if kind == "espa":
        h = doc["hyper"]
        hyper = EspaHyperparams(
            n_cells=h["n_cells"], entropy_reg=h["entropy_reg"],
            class_reg=h["class_reg"], max_iters=h["max_iters"],
            tol=h["tol"], n_restarts=h["n_restarts"], seed=h["seed"])
        return EspaModel(
            feature_weights=np.asarray(doc["feature_weights"], dtype=float),
            centers=np.asarray(doc["centers_colmajor"], dtype=float).T,
            cell_class_probs=np.asarray(doc["cell_class_probs_colmajor"], dtype=float).T,
            hyper=hyper, standardizer=std, column_names=names)
    if kind == "glm":
        return GlmModel(coef=np.asarray(doc["coef"], dtype=float),
                        intercept=float(doc["intercept"]), link=doc["link"],
                        standardizer=std, column_names=names)
    raise SchemaError(f"unknown model kind {kind!r}")


def save_model(model, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_doc(model), indent=1) + "\n")


def load_model(path: str | Path):
    return model_from_doc(json.loads(Path(path).read_text()))


def with_standardizer(model, std: Standardizer):
    """Return a copy of the model that carries the fitted standardizer."""
    import dataclasses
    return dataclasses.replace(model, standardizer=std)
