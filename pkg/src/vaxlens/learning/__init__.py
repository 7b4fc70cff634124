"""Classifiers, metrics, cross-validation and the randomized-search tuner."""

from .metrics import Metrics, evaluate
from .models import (
    CLASS_ORDER,
    DecisionTreeModel,
    FittedModel,
    KnnModel,
    RandomForestModel,
    fit,
    predict_labels,
)
from .params import (
    DEFAULT_SEARCH_SPACE,
    ForestParams,
    KnnParams,
    ModelKind,
    TreeParams,
    params_from_dict,
    params_to_dict,
)
from .persist import load_model, load_model_document, model_from_dict, model_to_dict, save_model
from .tuner import TuneResult, TunerConfig, Trial, cross_validate, kfold_indices, random_search

__all__ = [
    "CLASS_ORDER",
    "DEFAULT_SEARCH_SPACE",
    "DecisionTreeModel",
    "FittedModel",
    "ForestParams",
    "KnnModel",
    "KnnParams",
    "Metrics",
    "ModelKind",
    "RandomForestModel",
    "TreeParams",
    "Trial",
    "TuneResult",
    "TunerConfig",
    "cross_validate",
    "evaluate",
    "fit",
    "kfold_indices",
    "load_model",
    "load_model_document",
    "model_from_dict",
    "model_to_dict",
    "params_from_dict",
    "params_to_dict",
    "predict_labels",
    "random_search",
    "save_model",
]
