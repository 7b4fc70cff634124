import numpy as np
import pytest

from vaxlens import encoding
from vaxlens.dataset import Dataset
from vaxlens.errors import CohortError, ConfigError
from vaxlens.learning import ForestParams, fit
from vaxlens.pgm import (
    Marginals,
    PgmConfig,
    cohort_explain,
    dependency_stats,
    explain,
    generate_realizations,
    nodes_for,
    perturb_record,
)
from vaxlens.schema import parse_schema

from conftest import SMALL_SCHEMA_TEXT, make_rows

_SCHEMA = parse_schema(SMALL_SCHEMA_TEXT)


class ConstantModel:
    """Black box that never changes its mind."""

    def predict_proba(self, X):
        n = (X.values if hasattr(X, "values") else X).shape[0]
        return np.column_stack((np.full(n, 0.8), np.full(n, 0.2)))


def _planted_dataset(n=400, seed=0):
    """decision follows satisfaction; everything else is noise."""
    rng = np.random.default_rng(seed)
    rows = make_rows(n, seed=seed)
    for r in rows:
        level = int(r["satisfaction"])
        p = 0.08 + 0.84 * (level - 1) / 4.0
        r["decision"] = "accept" if rng.random() < p else "refuse"
    return Dataset.from_records(_SCHEMA, rows)


@pytest.fixture(scope="module")
def planted():
    d = _planted_dataset()
    enc = encoding.fit(_SCHEMA, "hybrid")
    model = fit("forest", ForestParams(n_trees=20, max_depth=6), enc.transform(d), d.target, seed=3)
    return d, enc, model


# -- perturb_record --------------------------------------------------------------


def test_perturb_empty_mask_is_identity(planted):
    d, _, _ = planted
    marg = Marginals(d)
    rec = d.record(0)
    out = perturb_record(rec, [], marg, np.random.default_rng(0))
    assert out == rec


def test_perturb_draws_are_observed_values(planted):
    d, _, _ = planted
    marg = Marginals(d)
    rng = np.random.default_rng(1)
    all_features = [s.name for s in d.schema.predictors]
    observed = {name: set(np.asarray(d.codes(name)).tolist()) for name in all_features}
    for i in range(10):
        out = perturb_record(d.record(i), all_features, marg, rng)
        for spec in d.schema.predictors:
            v = out[spec.name]
            if spec.is_categorical:
                assert spec.level_index(v) in observed[spec.name]
            else:
                assert v in observed[spec.name]


def test_group_singleton_equals_feature_mask(planted):
    d, _, _ = planted
    marg = Marginals(d)
    node = nodes_for(d.schema, "groups")[2]  # group C owns only satisfaction
    assert node.features == ("satisfaction",)
    a = perturb_record(d.record(0), node.features, marg, np.random.default_rng(7))
    b = perturb_record(d.record(0), ["satisfaction"], marg, np.random.default_rng(7))
    assert a == b


def test_perturb_unknown_feature_rejected(planted):
    d, _, _ = planted
    with pytest.raises(ConfigError):
        perturb_record(d.record(0), ["nope"], Marginals(d), np.random.default_rng(0))


# -- generate_realizations ---------------------------------------------------------


def test_vanishing_v_freezes_everything(planted):
    d, enc, model = planted
    cfg = PgmConfig(perturb_prob=1e-9, samples=1000, runs=1, seed=5)
    t = generate_realizations(model, enc, d, nodes_for(d.schema, "features"), cfg, 0)
    assert t.R.sum() == 0
    assert t.I.sum() == 0


def test_constant_model_never_flips(planted):
    d, enc, _ = planted
    cfg = PgmConfig(samples=500, runs=1, seed=6)
    t = generate_realizations(ConstantModel(), enc, d, nodes_for(d.schema, "features"), cfg, 0)
    assert t.I.sum() == 0
    stats = dependency_stats(t)
    assert np.all(stats.p_value == 1.0)


def test_bernoulli_rate_concentrates(planted):
    d, enc, model = planted
    v, S = 0.3, 2000
    cfg = PgmConfig(perturb_prob=v, samples=S, runs=1, seed=7)
    t = generate_realizations(model, enc, d, nodes_for(d.schema, "features"), cfg, 0)
    tol = 3.0 * np.sqrt(v * (1 - v) / S)
    assert np.all(np.abs(t.R.mean(axis=0) - v) <= tol)


def test_realizations_deterministic(planted):
    d, enc, model = planted
    cfg = PgmConfig(samples=300, runs=1, seed=8)
    nodes = nodes_for(d.schema, "features")
    t1 = generate_realizations(model, enc, d, nodes, cfg, 0)
    t2 = generate_realizations(model, enc, d, nodes, cfg, 0)
    t3 = generate_realizations(model, enc, d, nodes, cfg, 1)
    assert np.array_equal(t1.R, t2.R) and np.array_equal(t1.I, t2.I)
    assert not np.array_equal(t1.R, t3.R)


# -- explain ---------------------------------------------------------------------


def test_weights_average_over_runs(planted):
    d, enc, model = planted
    cfg = PgmConfig(samples=300, runs=5, seed=9)
    graph = explain(model, enc, d, cfg)
    nodes = nodes_for(d.schema, cfg.mode)
    per_run = np.stack(
        [dependency_stats(generate_realizations(model, enc, d, nodes, cfg, r)).phi for r in range(5)]
    )
    expect = per_run.mean(axis=0)
    got = np.array([n.weight for n in graph.nodes])
    assert np.max(np.abs(got - expect)) < 1e-12
    for j, n in enumerate(graph.nodes):
        assert n.per_run_weights == tuple(float(x) for x in per_run[:, j])


def test_groups_mode_nodes(planted):
    d, enc, model = planted
    graph = explain(model, enc, d, PgmConfig(samples=200, runs=1, seed=10, mode="groups"))
    assert [n.name for n in graph.nodes] == ["A", "B", "C"]
    assert all(n.kind == "group" for n in graph.nodes)
    assert graph.target == "decision"


def test_groups_mode_requires_tags():
    doc = (
        "a\tordinal\t-\t1|2|3\n"
        "t\tnominal\t-\tno|yes\n"
        "!target\tt\tyes\n"
    )
    schema = parse_schema(doc)
    with pytest.raises(ConfigError):
        nodes_for(schema, "groups")


def test_explicit_groups_validated(planted):
    d, _, _ = planted
    with pytest.raises(ConfigError, match="appears in groups"):
        nodes_for(d.schema, "groups", {"g1": ["age"], "g2": ["age"]})
    with pytest.raises(ConfigError, match="unknown feature"):
        nodes_for(d.schema, "groups", {"g1": ["nope"]})
    nodes = nodes_for(d.schema, "groups", {"demo": ["age", "gender"], "mood": ["satisfaction"]})
    assert [n.name for n in nodes] == ["demo", "mood"]


def test_constant_model_selects_nothing(planted):
    d, enc, _ = planted
    for seed in range(3):
        graph = explain(ConstantModel(), enc, d, PgmConfig(samples=200, runs=2, seed=seed))
        assert graph.selected_names() == ()
        assert all(n.p_value == 1.0 for n in graph.nodes)
        assert all(n.weight == 0.0 for n in graph.nodes)


def test_planted_feature_tops_ranking(planted):
    d, enc, model = planted
    graph = explain(model, enc, d, PgmConfig(samples=1000, runs=3, seed=11))
    ranked = graph.ranked()
    assert ranked[0].name == "satisfaction"
    assert ranked[0].selected


def test_explain_thread_invariance(planted):
    d, enc, model = planted
    cfg = PgmConfig(samples=300, runs=4, seed=12)
    a = explain(model, enc, d, cfg, threads=1)
    b = explain(model, enc, d, cfg, threads=4)
    assert a.to_dict() == b.to_dict()


def test_node_permutation_invariance(planted):
    """Renaming/reordering node definitions permutes the output exactly:
    each node's draws are keyed by its feature set, not its position."""
    d, enc, model = planted
    cfg = PgmConfig(samples=400, runs=2, seed=13, mode="groups")
    base = explain(model, enc, d, cfg,
                   groups={"demo": ["age", "gender"], "mood": ["satisfaction"], "place": ["region"]})
    renamed = explain(model, enc, d, cfg,
                      groups={"zz_people": ["age", "gender"], "aa_mood": ["satisfaction"], "mm": ["region"]})
    mapping = {"demo": "zz_people", "mood": "aa_mood", "place": "mm"}
    by_name = {n.name: n for n in renamed.nodes}
    for node in base.nodes:
        twin = by_name[mapping[node.name]]
        assert twin.weight == node.weight
        assert twin.p_value == node.p_value
        assert twin.per_run_weights == node.per_run_weights


def test_monotone_signal_strength():
    """Doubling a planted coefficient does not decrease the feature's mean
    explanation weight across seeds (statistical invariant)."""
    from vaxlens.schema import FeatureSchema, FeatureSpec, Group, Kind
    from vaxlens.synth import GeneratorSpec, generate

    feats = [FeatureSpec("ethnicity", Kind.NOMINAL,
                         ("Hispanic", "African American", "Asian", "Other"), Group.B)]
    feats += [FeatureSpec(f"q{i}", Kind.ORDINAL, ("1", "2", "3", "4", "5"), Group.C) for i in range(7)]
    feats.append(FeatureSpec("t", Kind.NOMINAL, ("refuse", "accept"), Group.NONE))
    schema = FeatureSchema(tuple(feats), "t", "accept")

    def mean_weight(w: float) -> float:
        weights = []
        for seed in range(10):
            spec = GeneratorSpec(schema=schema, coefficients={"q0": w, "q1": 1.0}, seed=seed)
            d, _ = generate(spec, 1500, bayes_mc=1000)
            enc = encoding.fit(schema, "hybrid")
            model = fit("forest", ForestParams(n_trees=40, max_depth=10, min_leaf=3),
                        enc.transform(d), d.target, seed=seed)
            g = explain(model, enc, d, PgmConfig(samples=1000, runs=2, seed=seed * 5))
            weights.append(g.node("q0").weight)
        return float(np.mean(weights))

    assert mean_weight(2.0) >= mean_weight(1.0)


# -- cohorts ----------------------------------------------------------------------


def test_cohort_covering_everything_matches_explain(planted):
    d, enc, model = planted
    rows = make_rows(80, seed=21)
    for r in rows:
        r["gender"] = "male"
    d_all = Dataset.from_records(_SCHEMA, rows)
    cfg = PgmConfig(samples=200, runs=2, seed=14)
    direct = explain(model, enc, d_all, cfg)
    via_cohort = cohort_explain(model, enc, d_all, ("gender", "male"), cfg)
    assert direct.to_dict() == via_cohort.to_dict()


def test_tiny_cohort_rejected(planted):
    d, enc, model = planted
    rows = make_rows(60, seed=22)
    for r in rows[3:]:
        r["gender"] = "male"
    for r in rows[:3]:
        r["gender"] = "female"
    small = Dataset.from_records(_SCHEMA, rows)
    with pytest.raises(CohortError, match="3 rows"):
        cohort_explain(model, enc, small, ("gender", "female"), PgmConfig(samples=200, runs=1, seed=0))


def test_constant_feature_flagged():
    rows = make_rows(120, seed=23)
    for r in rows:
        r["region"] = "north"
    d = Dataset.from_records(_SCHEMA, rows)
    enc = encoding.fit(_SCHEMA, "hybrid")
    model = fit("forest", ForestParams(n_trees=5, max_depth=3), enc.transform(d), d.target, seed=2)
    graph = explain(model, enc, d, PgmConfig(samples=150, runs=1, seed=3))
    assert any("region" in w for w in graph.warnings)
