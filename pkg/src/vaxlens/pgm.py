"""Perturbation-dependency explainer for tabular classifiers.

Records are sampled from the dataset; each explanation node (a feature, or a
tagged group of features perturbed jointly) is independently perturbed with
probability v by redrawing its features from their empirical marginals. A
2x2 chi-square independence test between the perturbation indicator R and
the prediction-change indicator I yields a p-value and a phi coefficient per
node; several independent rounds are averaged into a star-shaped dependency
graph around the target.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ._rng import STREAM_PGM, generator
from .dataset import Dataset, filter_cohort
from .encoding import FittedEncoder
from .errors import CohortError, ConfigError, DataError
from .learning.models import predict_labels
from .schema import FeatureSchema


@dataclass(frozen=True)
class PgmConfig:
    perturb_prob: float = 0.3
    samples: int = 2000
    runs: int = 5
    alpha: float = 0.05
    mode: str = "features"  # "features" | "groups"
    seed: int = 0
    # "label": I fires on a hard label flip; "probability": on |dP| > tau
    change_metric: str = "label"
    tau: float = 0.1
    min_cohort_rows: int = 50

    def __post_init__(self):
        if not 0.0 < self.perturb_prob < 1.0:
            raise ConfigError(f"perturb_prob must be in (0, 1), got {self.perturb_prob}")
        if self.samples < 100:
            raise ConfigError(f"samples must be >= 100, got {self.samples}")
        if self.runs < 1:
            raise ConfigError(f"runs must be >= 1, got {self.runs}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.mode not in ("features", "groups"):
            raise ConfigError(f"mode must be 'features' or 'groups', got {self.mode!r}")
        if self.change_metric not in ("label", "probability"):
            raise ConfigError(f"change_metric must be 'label' or 'probability', got {self.change_metric!r}")
        if self.min_cohort_rows < 1:
            raise ConfigError(f"min_cohort_rows must be >= 1, got {self.min_cohort_rows}")

    def to_dict(self) -> dict:
        return {
            "perturb_prob": self.perturb_prob, "samples": self.samples, "runs": self.runs,
            "alpha": self.alpha, "mode": self.mode, "seed": self.seed,
            "change_metric": self.change_metric, "tau": self.tau,
            "min_cohort_rows": self.min_cohort_rows,
        }


@dataclass(frozen=True)
class PgmNode:
    name: str
    kind: str  # "feature" | "group"
    features: tuple[str, ...]

    def stream_key(self) -> int:
        """Stable 64-bit RNG stream label derived from the member feature
        set alone, so renaming or reordering nodes permutes an explanation
        exactly instead of redrawing it."""
        digest = hashlib.blake2b(
            "\x1f".join(sorted(self.features)).encode("utf-8"), digest_size=8
        ).digest()
        return int.from_bytes(digest, "big")


def nodes_for(schema: FeatureSchema, mode: str,
              groups: Mapping[str, Sequence[str]] | None = None) -> list[PgmNode]:
    """Explanation nodes in canonical order (schema order, or A..D)."""
    if mode == "features":
        return [PgmNode(s.name, "feature", (s.name,)) for s in schema.predictors]
    if groups is not None:
        seen: dict[str, str] = {}
        out = []
        for gname in sorted(groups):
            members = tuple(groups[gname])
            if not members:
                raise ConfigError(f"group {gname!r} owns no features")
            for f in members:
                if f not in schema or f == schema.target_name:
                    raise ConfigError(f"group {gname!r} references unknown feature {f!r}")
                if f in seen:
                    raise ConfigError(f"feature {f!r} appears in groups {seen[f]!r} and {gname!r}")
                seen[f] = gname
            out.append(PgmNode(gname, "group", members))
        return out
    tagged = schema.groups()
    if not tagged:
        raise ConfigError("groups mode needs group tags in the schema (or an explicit mapping)")
    return [PgmNode(g.value, "group", members) for g, members in tagged.items()]


class Marginals:
    """Empirical per-feature distributions: draws return observed values."""

    def __init__(self, d: Dataset):
        if d.n_rows == 0:
            raise DataError("cannot fit marginals on an empty dataset")
        self.dataset = d
        self.constant_features = tuple(
            s.name for s in d.schema.predictors if len(np.unique(d.codes(s.name))) == 1
        )

    def draw(self, feature: str, size: int, rng: np.random.Generator) -> np.ndarray:
        col = self.dataset.codes(feature)
        return col[rng.integers(0, len(col), size)]

    def draw_value(self, feature: str, rng: np.random.Generator):
        spec = self.dataset.schema[feature]
        raw = self.draw(feature, 1, rng)[0]
        return spec.levels[raw] if spec.is_categorical else float(raw)


def perturb_record(record: Mapping[str, object], mask: Sequence[str], marginals: Marginals,
                   rng: np.random.Generator) -> dict[str, object]:
    """Replace the masked features of one decoded record by independent
    draws from their empirical marginals (schema order; group nodes pass
    all member features)."""
    schema = marginals.dataset.schema
    masked = set(mask)
    unknown = masked - {s.name for s in schema.predictors}
    if unknown:
        raise ConfigError(f"mask references unknown features {sorted(unknown)}")
    out = dict(record)
    for spec in schema.predictors:
        if spec.name in masked:
            out[spec.name] = marginals.draw_value(spec.name, rng)
    return out


@dataclass(frozen=True)
class RealizationTable:
    """S perturbation rounds: which nodes were hit (R) and whether the
    prediction changed (I)."""

    node_names: tuple[str, ...]
    R: np.ndarray  # (S, n_nodes) uint8
    I: np.ndarray  # (S,) uint8
    record_indices: np.ndarray
    run_index: int

    @property
    def n_samples(self) -> int:
        return self.R.shape[0]


@dataclass(frozen=True)
class DependencyStats:
    node_names: tuple[str, ...]
    chi2: np.ndarray
    p_value: np.ndarray
    phi: np.ndarray


def chi2_sf_1dof(x: float) -> float:
    """Survival function of chi-square with one degree of freedom."""
    return math.erfc(math.sqrt(x / 2.0))


def dependency_stats(table: RealizationTable) -> DependencyStats:
    """Per-node 2x2 independence test of R against I.

    chi2 = N (ad - bc)^2 / ((a+b)(c+d)(a+c)(b+d)) computed in exact integer
    arithmetic before the final division; a degenerate table (any zero
    marginal) is defined as chi2 = 0, p = 1, phi = 0.
    """
    R = table.R.astype(bool)
    I = table.I.astype(bool)
    N = int(R.shape[0])
    if N == 0:
        raise DataError("realization table is empty")
    k = R.shape[1]
    chi2 = np.zeros(k)
    p = np.ones(k)
    phi = np.zeros(k)
    n_i1 = int(I.sum())
    for j in range(k):
        a = int(np.sum(R[:, j] & I))
        b = int(np.sum(R[:, j]) - a)
        c = n_i1 - a
        d = N - a - b - c
        denom = (a + b) * (c + d) * (a + c) * (b + d)
        if denom == 0:
            continue
        det = a * d - b * c
        x = N * det * det / denom
        chi2[j] = x
        phi[j] = math.sqrt(x / N)
        p[j] = chi2_sf_1dof(x)
    return DependencyStats(table.node_names, chi2, p, phi)


def generate_realizations(model, encoder: FittedEncoder, d: Dataset, nodes: Sequence[PgmNode],
                          cfg: PgmConfig, run_index: int) -> RealizationTable:
    """One perturbation round: S records sampled with replacement, per-node
    Bernoulli(v) masks, fresh marginal draws for masked features, and the
    prediction-change indicator. Deterministic per (cfg.seed, run_index)."""
    if d.n_rows == 0:
        raise DataError("cannot generate realizations from an empty dataset")
    if not nodes:
        raise ConfigError("need at least one explanation node")
    S = cfg.samples
    rec = generator(cfg.seed, STREAM_PGM, run_index, 0).integers(0, d.n_rows, S)

    # one stream per node, labelled by its feature set: node order and node
    # names cannot change what any individual node draws
    R = np.empty((S, len(nodes)), dtype=bool)
    cols = {s.name: d.codes(s.name)[rec].copy() for s in d.schema.predictors}
    for j, node in enumerate(nodes):
        rng = generator(cfg.seed, STREAM_PGM, run_index, 1, node.stream_key())
        R[:, j] = rng.random(S) < cfg.perturb_prob
        rows = np.flatnonzero(R[:, j])
        if not rows.size:
            continue
        for fname in node.features:
            src = d.codes(fname)
            cols[fname][rows] = src[rng.integers(0, len(src), rows.size)]

    X_orig = encoder.transform(d)
    X_pert = encoder.transform_columns(cols, S)
    if cfg.change_metric == "label":
        orig = predict_labels(model, X_orig)[rec]
        pert = predict_labels(model, X_pert)
        I = (orig != pert).astype(np.uint8)
    else:
        p_orig = model.predict_proba(X_orig)[:, 1][rec]
        p_pert = model.predict_proba(X_pert)[:, 1]
        I = (np.abs(p_pert - p_orig) > cfg.tau).astype(np.uint8)
    return RealizationTable(
        node_names=tuple(n.name for n in nodes),
        R=R.astype(np.uint8),
        I=I,
        record_indices=rec,
        run_index=run_index,
    )


@dataclass(frozen=True)
class GraphNode:
    name: str
    kind: str
    weight: float
    p_value: float
    selected: bool
    per_run_weights: tuple[float, ...]
    per_run_p: tuple[float, ...]


@dataclass(frozen=True)
class ExplanationGraph:
    """Star-shaped dependency graph: explanation nodes pointing at the target."""

    target: str
    nodes: tuple[GraphNode, ...]
    mode: str
    runs: int
    config: dict = field(default_factory=dict)
    warnings: tuple[str, ...] = ()

    def node(self, name: str) -> GraphNode:
        for n in self.nodes:
            if n.name == name:
                return n
        raise KeyError(name)

    def ranked(self) -> tuple[GraphNode, ...]:
        return tuple(sorted(self.nodes, key=lambda n: (-n.weight, n.name)))

    def selected_names(self) -> tuple[str, ...]:
        return tuple(n.name for n in self.nodes if n.selected)

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "mode": self.mode,
            "runs": self.runs,
            "config": self.config,
            "warnings": list(self.warnings),
            "nodes": [
                {
                    "name": n.name, "kind": n.kind, "weight": n.weight,
                    "p_value": n.p_value, "selected": n.selected,
                    "per_run_weights": list(n.per_run_weights),
                    "per_run_p": list(n.per_run_p),
                }
                for n in self.nodes
            ],
        }


def explain(model, encoder: FittedEncoder, d: Dataset, cfg: PgmConfig,
            groups: Mapping[str, Sequence[str]] | None = None,
            threads: int = 1) -> ExplanationGraph:
    """Run ``cfg.runs`` independent realization rounds and average the
    per-node weights and p-values. Selection: averaged p < alpha."""
    nodes = nodes_for(d.schema, cfg.mode, groups if cfg.mode == "groups" else None)
    marginals = Marginals(d)

    def one_run(r: int) -> DependencyStats:
        return dependency_stats(generate_realizations(model, encoder, d, nodes, cfg, r))

    if threads > 1 and cfg.runs > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            stats = list(pool.map(one_run, range(cfg.runs)))
    else:
        stats = [one_run(r) for r in range(cfg.runs)]

    phi_runs = np.stack([s.phi for s in stats])  # (runs, nodes)
    p_runs = np.stack([s.p_value for s in stats])
    weights = phi_runs.mean(axis=0)
    p_avg = p_runs.mean(axis=0)
    graph_nodes = tuple(
        GraphNode(
            name=node.name,
            kind=node.kind,
            weight=float(weights[j]),
            p_value=float(p_avg[j]),
            selected=bool(p_avg[j] < cfg.alpha),
            per_run_weights=tuple(float(x) for x in phi_runs[:, j]),
            per_run_p=tuple(float(x) for x in p_runs[:, j]),
        )
        for j, node in enumerate(nodes)
    )
    warns = tuple(
        f"feature {name!r} is constant in the data; its perturbation is an identity"
        for name in marginals.constant_features
    )
    return ExplanationGraph(
        target=d.schema.target_name, nodes=graph_nodes, mode=cfg.mode,
        runs=cfg.runs, config=cfg.to_dict(), warnings=warns,
    )


def cohort_explain(model, encoder: FittedEncoder, d: Dataset, cohort: tuple[str, str],
                   cfg: PgmConfig, groups: Mapping[str, Sequence[str]] | None = None,
                   threads: int = 1) -> ExplanationGraph:
    """Explain the model on the subset matching ``cohort = (feature, level)``;
    marginals are refit on the cohort."""
    feature, level = cohort
    sub = filter_cohort(d, feature, level)
    if sub.n_rows < cfg.min_cohort_rows:
        raise CohortError(
            f"cohort {feature}={level} has {sub.n_rows} rows; need >= {cfg.min_cohort_rows}"
        )
    return explain(model, encoder, sub, cfg, groups=groups, threads=threads)
