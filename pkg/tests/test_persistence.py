import json

import numpy as np
import pytest

from vaxlens import encoding
from vaxlens.dataset import Dataset
from vaxlens.errors import ConfigError
from vaxlens.learning import (
    ForestParams,
    KnnParams,
    TreeParams,
    fit,
    load_model,
    load_model_document,
    save_model,
)

from conftest import make_rows


@pytest.mark.parametrize(
    "kind,params",
    [
        ("tree", TreeParams(max_depth=6, min_leaf=2)),
        ("forest", ForestParams(n_trees=8, max_depth=6)),
        ("knn", KnnParams(k=3)),
    ],
)
def test_round_trip_bit_identical_predictions(tmp_path, small_schema, kind, params):
    d = Dataset.from_records(small_schema, make_rows(60, seed=13))
    enc = encoding.fit(small_schema, "hybrid")
    M = enc.transform(d)
    model = fit(kind, params, M, d.target, seed=21)
    q = enc.transform(Dataset.from_records(small_schema, make_rows(25, seed=14)))
    before = model.predict_proba(q)

    path = tmp_path / "model.json"
    save_model(model, path, meta={"encoding": "hybrid"})
    loaded, doc = load_model_document(path)
    assert doc["format"] == "vaxlens-model"
    assert doc["version"] == 1
    assert doc["kind"] == ("forest" if kind == "forest" else kind)
    assert doc["class_order"] == ["negative", "positive"]
    assert doc["meta"]["encoding"] == "hybrid"
    after = loaded.predict_proba(q)
    assert np.array_equal(before, after)


def test_save_is_deterministic(tmp_path, small_schema):
    d = Dataset.from_records(small_schema, make_rows(40, seed=15))
    enc = encoding.fit(small_schema, "hybrid")
    model = fit("forest", ForestParams(n_trees=5), enc.transform(d), d.target, seed=3)
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_model(model, p1)
    save_model(model, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_rejects_foreign_documents(tmp_path):
    p = tmp_path / "junk.json"
    p.write_text(json.dumps({"format": "something-else"}))
    with pytest.raises(ConfigError):
        load_model(p)
    p.write_text("not json at all")
    with pytest.raises(ConfigError):
        load_model(p)


def test_rejects_future_version(tmp_path, small_schema):
    d = Dataset.from_records(small_schema, make_rows(30, seed=16))
    enc = encoding.fit(small_schema, "hybrid")
    model = fit("tree", TreeParams(), enc.transform(d), d.target, seed=0)
    p = tmp_path / "m.json"
    save_model(model, p)
    doc = json.loads(p.read_text())
    doc["version"] = 99
    p.write_text(json.dumps(doc))
    with pytest.raises(ConfigError, match="version"):
        load_model(p)
