"""Native classifiers: decision tree, random forest, k-nearest neighbours.

All three expose ``predict_proba(X) -> (n, 2)`` with columns ordered
(negative, positive); everything downstream treats a fitted model as that
black box. Tree growing and leaf routing run on the selected kernel backend;
fitting is deterministic per seed, with per-tree randomness derived from
(seed, tree index) so the result does not depend on scheduling.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .. import _kernels
from .._rng import STREAM_TREE, derive_seed, generator
from ..encoding import EncodedMatrix
from ..errors import ConfigError, FitError, ShapeError
from .params import ForestParams, KnnParams, ModelKind, TreeParams

CLASS_ORDER = ("negative", "positive")


def _as_matrix(X) -> np.ndarray:
    if isinstance(X, EncodedMatrix):
        return X.values
    return np.ascontiguousarray(X, dtype=np.float64)


def _check_training(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    if X.ndim != 2 or X.shape[0] != len(y):
        raise ShapeError(f"X is {X.shape}, y has length {len(y)}")
    if len(y) < 2:
        raise FitError(f"need at least 2 training rows, got {len(y)}")
    y = np.ascontiguousarray(y, dtype=np.int8)
    classes = np.unique(y)
    if not np.array_equal(classes, [0, 1]):
        raise FitError(f"training labels must contain both classes, got {classes.tolist()}")
    return y


@dataclass(frozen=True)
class _TreeArrays:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    n0: np.ndarray
    n1: np.ndarray

    def leaf_proba(self, X: np.ndarray) -> np.ndarray:
        leaves = _kernels.tree_apply(self.feature, self.threshold, self.left, self.right, X)
        tot = self.n0[leaves] + self.n1[leaves]
        return np.column_stack((self.n0[leaves] / tot, self.n1[leaves] / tot))


def _grow(X, y, sample_idx, max_depth, min_leaf, k_features, rng_seed) -> _TreeArrays:
    return _TreeArrays(*_kernels.grow_tree(X, y, sample_idx, max_depth, min_leaf, k_features, rng_seed))


class DecisionTreeModel:
    """CART-style binary classifier (Gini impurity, midpoint thresholds)."""

    kind = ModelKind.TREE

    def __init__(self, params: TreeParams, tree: _TreeArrays, n_features: int):
        self.params = params
        self.tree = tree
        self.n_features = n_features

    @classmethod
    def train(cls, X, y, params: TreeParams, seed: int = 0) -> "DecisionTreeModel":
        Xm = _as_matrix(X)
        y = _check_training(Xm, y)
        n, m = Xm.shape
        # all features are candidates and no bootstrap: the seed is never consumed
        tree = _grow(Xm, y, np.arange(n, dtype=np.int64), params.max_depth, params.min_leaf, m, 0)
        return cls(params, tree, m)

    def predict_proba(self, X) -> np.ndarray:
        Xm = _as_matrix(X)
        if Xm.shape[1] != self.n_features:
            raise ShapeError(f"expected {self.n_features} columns, got {Xm.shape[1]}")
        return self.tree.leaf_proba(Xm)


class RandomForestModel:
    """Bagged ensemble of kernel trees; prediction is the mean of member
    tree probabilities."""

    kind = ModelKind.FOREST

    def __init__(self, params: ForestParams, trees: list[_TreeArrays], n_features: int, seed: int):
        self.params = params
        self.trees = trees
        self.n_features = n_features
        self.seed = seed

    @classmethod
    def train(cls, X, y, params: ForestParams, seed: int = 0, threads: int = 1) -> "RandomForestModel":
        Xm = _as_matrix(X)
        y = _check_training(Xm, y)
        n, m = Xm.shape
        k = params.k_features(m)

        def build(t: int) -> _TreeArrays:
            if params.bootstrap:
                idx = generator(seed, STREAM_TREE, t, 0).integers(0, n, n)
            else:
                idx = np.arange(n, dtype=np.int64)
            return _grow(Xm, y, idx, params.max_depth, params.min_leaf, k,
                         derive_seed(seed, STREAM_TREE, t, 1))

        if threads > 1 and params.n_trees > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                trees = list(pool.map(build, range(params.n_trees)))
        else:
            trees = [build(t) for t in range(params.n_trees)]
        return cls(params, trees, m, seed)

    def predict_proba(self, X) -> np.ndarray:
        Xm = _as_matrix(X)
        if Xm.shape[1] != self.n_features:
            raise ShapeError(f"expected {self.n_features} columns, got {Xm.shape[1]}")
        acc = np.zeros((Xm.shape[0], 2), dtype=np.float64)
        for tree in self.trees:  # fixed order keeps the sum deterministic
            acc += tree.leaf_proba(Xm)
        return acc / len(self.trees)


class KnnModel:
    """k-nearest neighbours with Euclidean distance on the encoded matrix.

    Numeric passthrough columns are z-scored with training moments; encoded
    categorical columns are used as-is. Distance ties break by training row
    index, so predictions are deterministic.
    """

    kind = ModelKind.KNN

    def __init__(self, params: KnnParams, X_scaled: np.ndarray, y: np.ndarray,
                 mu: np.ndarray, sigma: np.ndarray, numeric_cols: np.ndarray):
        self.params = params
        self.X_train = X_scaled
        self.y_train = y
        self.mu = mu
        self.sigma = sigma
        self.numeric_cols = numeric_cols
        self.n_features = X_scaled.shape[1]

    @classmethod
    def train(cls, X, y, params: KnnParams, seed: int = 0) -> "KnnModel":
        Xm = _as_matrix(X)
        y = _check_training(Xm, y)
        if params.k > len(y):
            raise FitError(f"k={params.k} exceeds the {len(y)} training rows")
        numeric_cols = X.numeric_columns() if isinstance(X, EncodedMatrix) else np.empty(0, dtype=np.intp)
        mu = np.zeros(len(numeric_cols))
        sigma = np.ones(len(numeric_cols))
        if len(numeric_cols):
            sub = Xm[:, numeric_cols]
            mu = sub.mean(axis=0)
            sd = sub.std(axis=0)
            sigma = np.where(sd > 0, sd, 1.0)
        return cls(params, cls._scale(Xm, numeric_cols, mu, sigma), y.astype(np.float64),
                   mu, sigma, numeric_cols)

    @staticmethod
    def _scale(Xm: np.ndarray, numeric_cols, mu, sigma) -> np.ndarray:
        out = Xm.copy()
        if len(numeric_cols):
            out[:, numeric_cols] = (out[:, numeric_cols] - mu) / sigma
        return out

    def predict_proba(self, X) -> np.ndarray:
        Xm = _as_matrix(X)
        if Xm.shape[1] != self.n_features:
            raise ShapeError(f"expected {self.n_features} columns, got {Xm.shape[1]}")
        Q = self._scale(Xm, self.numeric_cols, self.mu, self.sigma)
        k = self.params.k
        order_tiebreak = np.arange(len(self.y_train))
        out = np.empty((Q.shape[0], 2), dtype=np.float64)
        for i in range(Q.shape[0]):
            # direct squared distances: exact ties stay exact, unlike the
            # dot-product expansion, so index tie-breaking is reproducible
            d2 = ((self.X_train - Q[i]) ** 2).sum(axis=1)
            nb = np.lexsort((order_tiebreak, d2))[:k]
            p1 = float(self.y_train[nb].sum()) / k
            out[i, 0] = 1.0 - p1
            out[i, 1] = p1
        return out


FittedModel = DecisionTreeModel | RandomForestModel | KnnModel


def fit(kind: ModelKind | str, params, X, y, seed: int = 0, threads: int = 1) -> FittedModel:
    """Train a classifier. ``X`` is an :class:`EncodedMatrix` (kNN needs its
    provenance for numeric scaling) or a plain float matrix."""
    kind = ModelKind.parse(kind)
    if kind is ModelKind.TREE:
        if not isinstance(params, TreeParams):
            raise ConfigError(f"tree expects TreeParams, got {type(params).__name__}")
        return DecisionTreeModel.train(X, y, params, seed)
    if kind is ModelKind.FOREST:
        if not isinstance(params, ForestParams):
            raise ConfigError(f"forest expects ForestParams, got {type(params).__name__}")
        return RandomForestModel.train(X, y, params, seed, threads=threads)
    if not isinstance(params, KnnParams):
        raise ConfigError(f"knn expects KnnParams, got {type(params).__name__}")
    return KnnModel.train(X, y, params, seed)


def predict_labels(model, X, threshold: float = 0.5) -> np.ndarray:
    """Hard labels: positive iff P(positive) strictly exceeds the threshold."""
    return (model.predict_proba(X)[:, 1] > threshold).astype(np.uint8)
