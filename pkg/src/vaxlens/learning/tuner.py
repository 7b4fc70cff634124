"""Randomized hyperparameter search over stratified k-fold cross-validation.

Each round samples one parameter vector uniformly from the integer search
space and scores it by mean fold accuracy; the best round wins (first wins
ties). The optional rescreen re-runs the winner at 10 and 15 folds and
reports the average over the three fold settings.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .._rng import STREAM_FOLDS, STREAM_TUNER, derive_seed, generator
from ..dataset import Dataset
from ..encoding import EncodedMatrix, EncoderMode, fit as fit_encoder
from ..errors import ConfigError, FoldError, VaxlensError
from .metrics import Metrics
from .models import fit, predict_labels
from .params import DEFAULT_SEARCH_SPACE, ModelKind, params_from_dict

RESCREEN_FOLDS = (10, 15)


def kfold_indices(n: int, k: int, y, seed: int) -> list[np.ndarray]:
    """Stratified folds: a partition of 0..n with per-fold class counts
    within one sample of the global ratio. Deterministic per seed."""
    y = np.asarray(y)
    if len(y) != n:
        raise FoldError(f"y has length {len(y)}, expected {n}")
    if k < 2:
        raise FoldError(f"need k >= 2 folds, got {k}")
    counts = np.bincount(y.astype(np.int64), minlength=2)
    if counts.min() < k:
        raise FoldError(f"every class needs >= {k} rows, got counts {counts.tolist()}")
    rng = generator(seed, STREAM_FOLDS)
    folds: list[list[int]] = [[] for _ in range(k)]
    for cls in (0, 1):
        idx = rng.permutation(np.flatnonzero(y == cls))
        for j, row in enumerate(idx):
            folds[j % k].append(int(row))
    return [np.asarray(sorted(f), dtype=np.intp) for f in folds]


@dataclass(frozen=True)
class TunerConfig:
    rounds: int = 30
    folds: int = 5
    seed: int = 0
    search_space: dict[str, tuple[int, int]] | None = None  # None: per-kind default
    rescreen: bool = False  # also score the winner at 10- and 15-fold CV

    def __post_init__(self):
        if self.rounds < 1:
            raise ConfigError(f"rounds must be >= 1, got {self.rounds}")
        if self.folds < 2:
            raise ConfigError(f"folds must be >= 2, got {self.folds}")


@dataclass(frozen=True)
class Trial:
    index: int
    params: dict
    fold_accuracies: tuple[float, ...]
    mean_accuracy: float | None  # None when the trial failed
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "params": self.params,
            "fold_accuracies": list(self.fold_accuracies),
            "mean_accuracy": self.mean_accuracy,
            "error": self.error,
        }


@dataclass(frozen=True)
class TuneResult:
    kind: str
    encoding: str
    config: dict
    trials: tuple[Trial, ...]
    best_index: int
    best_params: dict
    best_score: float
    fold_setting_scores: dict = field(default_factory=dict)  # folds -> mean acc (rescreen)
    rescreen_mean: float | None = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "encoding": self.encoding,
            "config": self.config,
            "best_index": self.best_index,
            "best_params": self.best_params,
            "best_score": self.best_score,
            "fold_setting_scores": {str(k): v for k, v in self.fold_setting_scores.items()},
            "rescreen_mean": self.rescreen_mean,
            "trials": [t.to_dict() for t in self.trials],
        }


def cross_validate(kind, params, d: Dataset, encoder_mode, folds: int, seed: int,
                   threads: int = 1) -> tuple[float, list[float]]:
    """Mean held-out accuracy over stratified folds for one parameter vector."""
    kind = ModelKind.parse(kind)
    enc = fit_encoder(d.schema, encoder_mode)
    M = enc.transform(d)
    fold_idx = kfold_indices(d.n_rows, folds, d.target, derive_seed(seed, STREAM_FOLDS, folds))
    accs = []
    all_rows = np.arange(d.n_rows)
    for j, test_rows in enumerate(fold_idx):
        mask = np.zeros(d.n_rows, dtype=bool)
        mask[test_rows] = True
        train_rows = all_rows[~mask]
        Xtr = EncodedMatrix(M.values[train_rows], enc.provenance)
        Xte = EncodedMatrix(M.values[test_rows], enc.provenance)
        model = fit(kind, params, Xtr, d.target[train_rows],
                    seed=derive_seed(seed, STREAM_TUNER, folds, j), threads=threads)
        m = Metrics.from_predictions(d.target[test_rows], predict_labels(model, Xte))
        accs.append(m.accuracy)
    return float(np.mean(accs)), accs


def random_search(kind, d: Dataset, encoder_mode: EncoderMode | str, cfg: TunerConfig,
                  threads: int = 1) -> TuneResult:
    """Run ``cfg.rounds`` uniform draws from the search space and return the
    best parameter vector with a full trial report. Failed trials are
    recorded and skipped, not fatal."""
    kind = ModelKind.parse(kind)
    if isinstance(encoder_mode, str):
        encoder_mode = EncoderMode(encoder_mode)
    space = cfg.search_space if cfg.search_space is not None else DEFAULT_SEARCH_SPACE[kind]
    for name, (lo, hi) in space.items():
        if lo > hi:
            raise ConfigError(f"empty range for {name}: ({lo}, {hi})")
    sampler = generator(cfg.seed, STREAM_TUNER)

    trials: list[Trial] = []
    for i in range(cfg.rounds):
        drawn = {name: int(sampler.integers(lo, hi + 1)) for name, (lo, hi) in sorted(space.items())}
        try:
            params = params_from_dict(kind, drawn)
            mean_acc, accs = cross_validate(kind, params, d, encoder_mode, cfg.folds,
                                            derive_seed(cfg.seed, STREAM_TUNER, i), threads=threads)
            trials.append(Trial(i, drawn, tuple(accs), mean_acc))
        except VaxlensError as exc:
            trials.append(Trial(i, drawn, (), None, error=str(exc)))

    scored = [t for t in trials if t.mean_accuracy is not None]
    if not scored:
        raise ConfigError("every tuning trial failed; check the search space")
    best = max(scored, key=lambda t: (t.mean_accuracy, -t.index))
    fold_scores = {cfg.folds: best.mean_accuracy}
    rescreen_mean = None
    if cfg.rescreen:
        params = params_from_dict(kind, best.params)
        for k in RESCREEN_FOLDS:
            acc, _ = cross_validate(kind, params, d, encoder_mode, k,
                                    derive_seed(cfg.seed, STREAM_TUNER, 1000 + k), threads=threads)
            fold_scores[k] = acc
        rescreen_mean = float(np.mean([fold_scores[cfg.folds], *(fold_scores[k] for k in RESCREEN_FOLDS)]))

    return TuneResult(
        kind=kind.value,
        encoding=encoder_mode.value,
        config={"rounds": cfg.rounds, "folds": cfg.folds, "seed": cfg.seed,
                "search_space": {k: list(v) for k, v in sorted(space.items())},
                "rescreen": cfg.rescreen},
        trials=tuple(trials),
        best_index=best.index,
        best_params=best.params,
        best_score=best.mean_accuracy,
        fold_setting_scores=fold_scores,
        rescreen_mean=rescreen_mean,
    )
