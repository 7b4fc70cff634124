"""Model persistence: versioned, self-describing JSON documents.

Floats serialize via Python's shortest round-trip repr, so save -> load ->
predict is bit-identical to the pre-save model within a format version.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from .models import CLASS_ORDER, DecisionTreeModel, KnnModel, RandomForestModel, _TreeArrays
from .params import ForestParams, KnnParams, ModelKind, TreeParams, params_to_dict

FORMAT = "vaxlens-model"
VERSION = 1


def _tree_payload(t: _TreeArrays) -> dict:
    return {
        "feature": t.feature.tolist(),
        "threshold": t.threshold.tolist(),
        "left": t.left.tolist(),
        "right": t.right.tolist(),
        "n0": t.n0.tolist(),
        "n1": t.n1.tolist(),
    }


def _tree_from_payload(p: dict) -> _TreeArrays:
    return _TreeArrays(
        feature=np.asarray(p["feature"], dtype=np.int32),
        threshold=np.asarray(p["threshold"], dtype=np.float64),
        left=np.asarray(p["left"], dtype=np.int32),
        right=np.asarray(p["right"], dtype=np.int32),
        n0=np.asarray(p["n0"], dtype=np.float64),
        n1=np.asarray(p["n1"], dtype=np.float64),
    )


def model_to_dict(model, meta: dict | None = None) -> dict:
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "kind": model.kind.value,
        "class_order": list(CLASS_ORDER),
        "n_features": model.n_features,
        "params": params_to_dict(model.params),
    }
    if meta:
        doc["meta"] = meta
    if isinstance(model, DecisionTreeModel):
        doc["tree"] = _tree_payload(model.tree)
    elif isinstance(model, RandomForestModel):
        doc["seed"] = model.seed
        doc["trees"] = [_tree_payload(t) for t in model.trees]
    elif isinstance(model, KnnModel):
        doc["payload"] = {
            "X_train": model.X_train.tolist(),
            "y_train": model.y_train.tolist(),
            "mu": model.mu.tolist(),
            "sigma": model.sigma.tolist(),
            "numeric_cols": model.numeric_cols.tolist(),
        }
    else:
        raise ConfigError(f"cannot serialize {type(model).__name__}")
    return doc


def model_from_dict(doc: dict):
    if doc.get("format") != FORMAT:
        raise ConfigError(f"not a {FORMAT} document")
    if doc.get("version") != VERSION:
        raise ConfigError(f"unsupported model format version {doc.get('version')!r}")
    kind = ModelKind(doc["kind"])
    n_features = int(doc["n_features"])
    if kind is ModelKind.TREE:
        return DecisionTreeModel(TreeParams(**doc["params"]), _tree_from_payload(doc["tree"]), n_features)
    if kind is ModelKind.FOREST:
        p = dict(doc["params"])
        if isinstance(p.get("max_features"), list):  # JSON round-trip of tuples
            p["max_features"] = tuple(p["max_features"])
        return RandomForestModel(ForestParams(**p), [_tree_from_payload(t) for t in doc["trees"]],
                                 n_features, int(doc.get("seed", 0)))
    payload = doc["payload"]
    return KnnModel(
        KnnParams(**doc["params"]),
        np.asarray(payload["X_train"], dtype=np.float64).reshape(-1, n_features),
        np.asarray(payload["y_train"], dtype=np.float64),
        np.asarray(payload["mu"], dtype=np.float64),
        np.asarray(payload["sigma"], dtype=np.float64),
        np.asarray(payload["numeric_cols"], dtype=np.intp),
    )


def save_model(model, path: str | Path, meta: dict | None = None) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model, meta)) + "\n", encoding="utf-8")


def load_model_document(path: str | Path):
    """Returns (model, full document) so callers can read metadata."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from None
    return model_from_dict(doc), doc


def load_model(path: str | Path):
    return load_model_document(path)[0]
