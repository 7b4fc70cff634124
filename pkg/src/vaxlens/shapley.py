"""Game-theoretic per-feature attribution for any fitted classifier.

The value of a feature subset S is the interventional expectation: background
rows provide the values of features outside S, the explained instance
provides the values inside S, and v(S) is the mean positive-class score over
the background. Masking always operates on whole original features (a one-hot
block moves together), so attributions land on survey questions, not matrix
columns.

Exact attribution enumerates all 2^d subsets with the classic combinatorial
weights; the sampled estimator averages marginal contributions over random
permutations evaluated forward and reversed (antithetic pairs) and reports a
per-feature standard error from the pair means.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from ._rng import STREAM_BACKGROUND, STREAM_SHAP, generator
from .dataset import Dataset
from .encoding import FittedEncoder
from .errors import ConfigError, ShapeError

PredictFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class AttributionVector:
    """Signed per-feature contributions for one instance.

    ``base_value + sum(phi)`` reconstructs the model output on the instance
    (exactly in exact mode); positive values push toward the positive class.
    """

    feature_names: tuple[str, ...]
    phi: np.ndarray
    base_value: float
    full_value: float
    instance_id: int | str = 0
    stderr: np.ndarray | None = None

    @property
    def efficiency_gap(self) -> float:
        return abs(self.base_value + float(np.sum(self.phi)) - self.full_value)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.feature_names, map(float, self.phi)))


@dataclass(frozen=True)
class GlobalRanking:
    """Features ordered by mean |phi| over instances (ties by name)."""

    entries: tuple[tuple[str, float], ...]

    def top(self, k: int) -> tuple[tuple[str, float], ...]:
        return self.entries[:k]

    @classmethod
    def from_attributions(cls, names: Sequence[str], phi_matrix: np.ndarray) -> "GlobalRanking":
        imp = np.abs(phi_matrix).mean(axis=0)
        order = sorted(range(len(names)), key=lambda i: (-imp[i], names[i]))
        return cls(tuple((names[i], float(imp[i])) for i in order))


class ShapleyExplainer:
    """Attribution engine bound to a score function, feature blocks, and a
    background sample.

    Args:
        predict_fn: maps an (n, m) encoded matrix to n scalar scores.
        feature_names: original feature names, one per block.
        blocks: per-feature column indices into the encoded matrix.
        background: (nb, m) encoded background rows (values outside the
            coalition are taken from here).
        max_width: largest d accepted by exact enumeration.
    """

    def __init__(self, predict_fn: PredictFn, feature_names: Sequence[str],
                 blocks: Sequence[np.ndarray], background: np.ndarray,
                 max_width: int = 15, chunk_rows: int = 131072):
        if len(feature_names) != len(blocks):
            raise ConfigError(f"{len(feature_names)} names but {len(blocks)} blocks")
        bg = np.ascontiguousarray(background, dtype=np.float64)
        if bg.ndim != 2 or bg.shape[0] == 0:
            raise ConfigError("background must be a nonempty 2-D matrix")
        self.predict_fn = predict_fn
        self.feature_names = tuple(feature_names)
        self.blocks = [np.asarray(b, dtype=np.intp) for b in blocks]
        self.background = bg
        self.max_width = max_width
        self.chunk_rows = chunk_rows
        self._name_to_index = {n: i for i, n in enumerate(self.feature_names)}

    @classmethod
    def for_model(cls, model, encoder: FittedEncoder, background: Dataset | np.ndarray,
                  max_width: int = 15) -> "ShapleyExplainer":
        """Bind to a fitted classifier's positive-class probability."""
        blocks_map = encoder.feature_blocks()
        names = [s.name for s in encoder.schema.predictors]
        if isinstance(background, Dataset):
            background = encoder.transform(background).values
        return cls(lambda X: model.predict_proba(X)[:, 1], names,
                   [blocks_map[n] for n in names], background, max_width=max_width)

    @property
    def d(self) -> int:
        return len(self.feature_names)

    # -- value function ------------------------------------------------------

    def _check_instance(self, instance) -> np.ndarray:
        x = np.ascontiguousarray(instance, dtype=np.float64).ravel()
        if x.shape[0] != self.background.shape[1]:
            raise ShapeError(f"instance has {x.shape[0]} columns, expected {self.background.shape[1]}")
        return x

    def _subset_values(self, instance: np.ndarray, masks: np.ndarray) -> np.ndarray:
        """v(S) for each boolean row of ``masks``, batched over model calls."""
        nb, m = self.background.shape
        n_masks = masks.shape[0]
        out = np.empty(n_masks, dtype=np.float64)
        chunk = max(1, self.chunk_rows // nb)
        cols_cache = self.blocks
        for lo in range(0, n_masks, chunk):
            mk = masks[lo : lo + chunk]
            big = np.broadcast_to(self.background, (mk.shape[0], nb, m)).copy()
            for f in range(self.d):
                rows = np.flatnonzero(mk[:, f])
                if rows.size:
                    big[np.ix_(rows, np.arange(nb), cols_cache[f])] = instance[cols_cache[f]]
            scores = np.asarray(self.predict_fn(big.reshape(-1, m)), dtype=np.float64)
            out[lo : lo + chunk] = scores.reshape(mk.shape[0], nb).mean(axis=1)
        return out

    def value_function(self, instance, subset: Iterable[str]) -> float:
        """Expected score with ``subset`` features pinned to the instance."""
        x = self._check_instance(instance)
        mask = np.zeros((1, self.d), dtype=bool)
        for name in subset:
            if name not in self._name_to_index:
                raise ConfigError(f"unknown feature {name!r} in subset")
            mask[0, self._name_to_index[name]] = True
        return float(self._subset_values(x, mask)[0])

    # -- exact enumeration -----------------------------------------------------

    def exact(self, instance, instance_id: int | str = 0) -> AttributionVector:
        """Exact Shapley values by subset enumeration (d <= max_width)."""
        x = self._check_instance(instance)
        d = self.d
        if d > self.max_width:
            raise ConfigError(
                f"{d} features exceeds exact enumeration width {self.max_width}; use sampled()"
            )
        n_subsets = 1 << d
        bits = (np.arange(n_subsets, dtype=np.int64)[:, None] >> np.arange(d)) & 1
        masks = bits.astype(bool)
        v = self._subset_values(x, masks)
        sizes = bits.sum(axis=1)
        fact = [math.factorial(i) for i in range(d + 1)]
        w = np.array([fact[s] * fact[d - 1 - s] / fact[d] for s in range(d)])
        phi = np.empty(d, dtype=np.float64)
        for i in range(d):
            without = np.flatnonzero(~masks[:, i])
            with_i = without + (1 << i)
            phi[i] = float(np.sum(w[sizes[without]] * (v[with_i] - v[without])))
        return AttributionVector(self.feature_names, phi, float(v[0]), float(v[-1]), instance_id)

    # -- permutation sampling ----------------------------------------------------

    def _marginals_for_perms(self, x: np.ndarray, perms: np.ndarray) -> tuple[np.ndarray, float, float]:
        """Per-permutation marginal contribution matrix (n_perms, d)."""
        n_perms, d = perms.shape
        # deduplicate prefix subsets: with small d or shared prefixes this
        # collapses the model-call count dramatically
        mask_index: dict[bytes, int] = {}
        masks: list[np.ndarray] = []

        def key_of(mask: np.ndarray) -> int:
            kb = mask.tobytes()
            idx = mask_index.get(kb)
            if idx is None:
                idx = len(masks)
                mask_index[kb] = idx
                masks.append(mask.copy())
            return idx

        empty = np.zeros(d, dtype=bool)
        i_empty = key_of(empty)
        prefix_idx = np.empty((n_perms, d + 1), dtype=np.int64)
        for p in range(n_perms):
            running = empty.copy()
            prefix_idx[p, 0] = i_empty
            for j in range(d):
                running[perms[p, j]] = True
                prefix_idx[p, j + 1] = key_of(running)
        v = self._subset_values(x, np.asarray(masks))
        marg = np.empty((n_perms, d), dtype=np.float64)
        for p in range(n_perms):
            deltas = v[prefix_idx[p, 1:]] - v[prefix_idx[p, :-1]]
            marg[p, perms[p]] = deltas
        return marg, float(v[i_empty]), float(v[mask_index[np.ones(d, dtype=bool).tobytes()]])

    def from_permutations(self, instance, perms: Iterable[Sequence[int]],
                          instance_id: int | str = 0) -> AttributionVector:
        """Average marginal contributions over an explicit permutation list.

        Feeding every permutation of range(d) exactly once reproduces the
        exact values; this is the deterministic building block under
        :meth:`sampled`.
        """
        x = self._check_instance(instance)
        parr = np.asarray(list(perms), dtype=np.int64)
        if parr.ndim != 2 or parr.shape[1] != self.d:
            raise ConfigError(f"permutations must be sequences of length {self.d}")
        marg, v0, vfull = self._marginals_for_perms(x, parr)
        phi = marg.mean(axis=0)
        return AttributionVector(self.feature_names, phi, v0, vfull, instance_id)

    def sampled(self, instance, permutations: int, seed: int,
                instance_id: int | str = 0) -> AttributionVector:
        """Permutation-sampling estimate with antithetic pairs.

        ``permutations`` counts evaluated orderings; an odd request is
        rounded up so every sampled ordering is paired with its reverse.
        The reported stderr treats each (forward, reverse) pair mean as one
        independent sample.
        """
        if permutations < 2:
            raise ConfigError(f"need at least 2 permutations, got {permutations}")
        x = self._check_instance(instance)
        half = (permutations + 1) // 2
        rng = generator(seed, STREAM_SHAP)
        fwd = np.stack([rng.permutation(self.d) for _ in range(half)])
        parr = np.concatenate([fwd, fwd[:, ::-1]])
        marg, v0, vfull = self._marginals_for_perms(x, parr)
        pair_means = 0.5 * (marg[:half] + marg[half:])
        phi = pair_means.mean(axis=0)
        if half >= 2:
            stderr = pair_means.std(axis=0, ddof=1) / math.sqrt(half)
        else:
            stderr = np.full(self.d, np.inf)
        return AttributionVector(self.feature_names, phi, v0, vfull, instance_id, stderr=stderr)


@dataclass(frozen=True)
class GlobalSummary:
    """Per-instance attributions plus the aggregated ranking."""

    ranking: GlobalRanking
    attributions: tuple[AttributionVector, ...]
    mode: str
    top_k: int

    def top_entries(self) -> tuple[tuple[str, float], ...]:
        return self.ranking.top(self.top_k)


def sample_background(d: Dataset, size: int = 32, seed: int = 0) -> Dataset:
    """Background rows drawn without replacement from a dataset, seed-fixed."""
    if d.n_rows == 0:
        raise ConfigError("cannot sample a background from an empty dataset")
    take = min(size, d.n_rows)
    rng = generator(seed, STREAM_BACKGROUND)
    return d.take(np.sort(rng.choice(d.n_rows, size=take, replace=False)))


def global_summary(model, encoder: FittedEncoder, d: Dataset, background: Dataset | np.ndarray,
                   mode: str = "auto", top_k: int = 20, seed: int = 0,
                   permutations: int = 200, max_instances: int | None = None,
                   max_width: int = 15) -> GlobalSummary:
    """Attribute every instance (optionally capped) and rank features by
    mean absolute attribution."""
    if d.n_rows == 0:
        raise ConfigError("cannot summarize an empty dataset")
    if mode not in ("auto", "exact", "sampled"):
        raise ConfigError(f"unknown attribution mode {mode!r}")
    explainer = ShapleyExplainer.for_model(model, encoder, background, max_width=max_width)
    resolved = mode
    if mode == "auto":
        resolved = "exact" if explainer.d <= max_width else "sampled"
    n = d.n_rows if max_instances is None else min(max_instances, d.n_rows)
    X = encoder.transform(d).values
    attributions = []
    for i in range(n):
        if resolved == "exact":
            attributions.append(explainer.exact(X[i], instance_id=i))
        else:
            attributions.append(explainer.sampled(X[i], permutations, seed=seed + i, instance_id=i))
    phi_matrix = np.stack([a.phi for a in attributions])
    ranking = GlobalRanking.from_attributions(explainer.feature_names, phi_matrix)
    return GlobalSummary(ranking=ranking, attributions=tuple(attributions),
                         mode=resolved, top_k=top_k)
