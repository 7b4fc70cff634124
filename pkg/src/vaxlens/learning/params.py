"""Hyperparameter containers and search-space defaults."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

from ..errors import ConfigError


class ModelKind(enum.Enum):
    TREE = "tree"
    FOREST = "forest"
    KNN = "knn"

    @classmethod
    def parse(cls, s: "ModelKind | str") -> "ModelKind":
        if isinstance(s, cls):
            return s
        aliases = {"rf": "forest", "random_forest": "forest"}
        try:
            return cls(aliases.get(s.lower(), s.lower()))
        except ValueError:
            raise ConfigError(f"unknown model kind {s!r}") from None


@dataclass(frozen=True)
class TreeParams:
    max_depth: int = 16
    min_leaf: int = 1

    def __post_init__(self):
        if self.max_depth < 0:
            raise ConfigError(f"max_depth must be >= 0, got {self.max_depth}")
        if self.min_leaf < 1:
            raise ConfigError(f"min_leaf must be >= 1, got {self.min_leaf}")


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int = 16
    min_leaf: int = 1
    bootstrap: bool = True
    # None means every feature is a split candidate; "sqrt" means ceil(sqrt(m)).
    max_features: str | int | None = "sqrt"

    def __post_init__(self):
        if self.n_trees < 1:
            raise ConfigError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.max_depth < 0:
            raise ConfigError(f"max_depth must be >= 0, got {self.max_depth}")
        if self.min_leaf < 1:
            raise ConfigError(f"min_leaf must be >= 1, got {self.min_leaf}")
        if isinstance(self.max_features, str) and self.max_features != "sqrt":
            raise ConfigError(f"max_features must be 'sqrt', an int or None, got {self.max_features!r}")
        if isinstance(self.max_features, int) and self.max_features < 1:
            raise ConfigError(f"max_features must be >= 1, got {self.max_features}")

    def k_features(self, m: int) -> int:
        if self.max_features is None:
            return m
        if self.max_features == "sqrt":
            return min(m, math.ceil(math.sqrt(m)))
        return min(m, self.max_features)


@dataclass(frozen=True)
class KnnParams:
    k: int = 5

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")


PARAM_TYPES = {ModelKind.TREE: TreeParams, ModelKind.FOREST: ForestParams, ModelKind.KNN: KnnParams}

#: integer search ranges (inclusive) sampled uniformly by the tuner
DEFAULT_SEARCH_SPACE: dict[ModelKind, dict[str, tuple[int, int]]] = {
    ModelKind.FOREST: {"n_trees": (50, 500), "max_depth": (2, 32), "min_leaf": (1, 20)},
    ModelKind.TREE: {"max_depth": (2, 32), "min_leaf": (1, 20)},
    ModelKind.KNN: {"k": (1, 50)},
}


def params_from_dict(kind: ModelKind, d: dict):
    try:
        return PARAM_TYPES[kind](**d)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {kind.value}: {exc}") from None


def params_to_dict(params) -> dict:
    return asdict(params)
