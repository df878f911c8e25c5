import json

import numpy as np
import pytest

import madpath as mp
from madpath.errors import SchemaError
from conftest import random_espa_model


def test_espa_roundtrip_bit_exact(tmp_path, rng):
    model = random_espa_model(rng, n_features=3, n_cells=4)
    std = mp.Standardizer(means=rng.normal(size=3),
                          stds=np.abs(rng.normal(size=3)) + 0.5,
                          transformed=np.array([True, True, False]))
    model = mp.with_standardizer(model, std)
    p = tmp_path / "m.json"
    mp.save_model(model, p)
    back = mp.load_model(p)
    assert np.array_equal(back.feature_weights, model.feature_weights)
    assert np.array_equal(back.centers, model.centers)
    assert np.array_equal(back.cell_class_probs, model.cell_class_probs)
    assert back.hyper == model.hyper
    assert np.array_equal(back.standardizer.means, std.means)
    assert np.array_equal(back.standardizer.stds, std.stds)


def test_glm_roundtrip_bit_exact(tmp_path, rng):
    model = mp.GlmModel(coef=rng.normal(size=5), intercept=float(rng.normal()),
                        column_names=tuple("abcde"))
    p = tmp_path / "g.json"
    mp.save_model(model, p)
    back = mp.load_model(p)
    assert np.array_equal(back.coef, model.coef)
    assert back.intercept == model.intercept
    assert back.column_names == model.column_names


def test_document_is_self_describing(tmp_path, rng):
    model = random_espa_model(rng)
    mp.save_model(model, tmp_path / "m.json")
    doc = json.loads((tmp_path / "m.json").read_text())
    assert doc["format"] == "madpath-model"
    assert doc["kind"] == "espa"
    assert doc["n_cells"] == model.n_cells
    assert "seed" in doc


def test_rejects_foreign_document(tmp_path):
    p = tmp_path / "x.json"
    p.write_text(json.dumps({"format": "something-else"}))
    with pytest.raises(SchemaError):
        mp.load_model(p)


def test_rejects_unknown_kind(tmp_path):
    p = tmp_path / "x.json"
    p.write_text(json.dumps({"format": "madpath-model", "kind": "mystery"}))
    with pytest.raises(SchemaError):
        mp.load_model(p)
