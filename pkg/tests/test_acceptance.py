"""Acceptance suite: one test per criterion, tolerances pinned inline.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS line per
criterion. The statistical criteria run on synthetic populations with
planted ground truth; the full suite is CPU-bound for a few minutes.
"""

import itertools
import math
import time

import numpy as np
import pytest
import scipy.stats

from vaxlens import encoding
from vaxlens.cli import dispatch
from vaxlens.learning import ForestParams, TreeParams, TunerConfig, evaluate, fit, random_search
from vaxlens.pgm import PgmConfig, RealizationTable, chi2_sf_1dof, cohort_explain, dependency_stats, explain
from vaxlens.shapley import ShapleyExplainer
from vaxlens.synth import GeneratorSpec, cohort_spec, default_spec, generate, nominal_spec

RECOVERY_FOREST = ForestParams(n_trees=150, max_depth=18, min_leaf=3, max_features=24)
RECOVERY_PGM = PgmConfig(perturb_prob=0.2, samples=2000, runs=5, alpha=0.1)
RECOVERY_SEEDS = range(1, 11)


def _report(name: str, ok: bool, detail: str):
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


# -- criterion 1: Shapley axioms -------------------------------------------------


def _forest_on_matrix(n, d, seed, dummy_cols=(), n_trees=20, depth=8):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    for c in dummy_cols:
        X[:, c] = 0.0
    w = rng.normal(size=d)
    for c in dummy_cols:
        w[c] = 0.0
    y = ((X @ w + rng.normal(0, 0.5, n)) > 0).astype(int)
    model = fit("forest", ForestParams(n_trees=n_trees, max_depth=depth), X, y, seed=seed)
    return X, model


def test_criterion_1_shapley_axioms():
    started = time.monotonic()
    d = 12
    dummies = (5, 11)
    X, model = _forest_on_matrix(2000, d, seed=101, dummy_cols=dummies)
    names = [f"x{i}" for i in range(d)]
    blocks = [np.array([i]) for i in range(d)]
    background = X[:32]
    ex = ShapleyExplainer(lambda M: model.predict_proba(M)[:, 1], names, blocks, background)

    rng = np.random.default_rng(7)
    instances = rng.choice(len(X), size=200, replace=False)
    worst_gap = 0.0
    dummy_violation = 0.0
    for i in instances:
        att = ex.exact(X[i])
        worst_gap = max(worst_gap, att.efficiency_gap)
        for c in dummies:
            dummy_violation = max(dummy_violation, abs(float(att.phi[c])))

    # exhaustive permutation oracle at d = 6
    X6, model6 = _forest_on_matrix(500, 6, seed=102)
    ex6 = ShapleyExplainer(lambda M: model6.predict_proba(M)[:, 1],
                           [f"x{i}" for i in range(6)],
                           [np.array([i]) for i in range(6)], X6[:32])
    perms = list(itertools.permutations(range(6)))
    worst_perm_gap = 0.0
    for i in range(5):
        exact = ex6.exact(X6[i])
        oracle = ex6.from_permutations(X6[i], perms)
        worst_perm_gap = max(worst_perm_gap, float(np.max(np.abs(exact.phi - oracle.phi))))

    elapsed = time.monotonic() - started
    ok = worst_gap <= 1e-9 and dummy_violation == 0.0 and worst_perm_gap <= 1e-12 and elapsed < 120
    _report(
        "1 (shapley axioms)", ok,
        f"efficiency gap {worst_gap:.2e} (<=1e-9), dummy |phi| {dummy_violation} (==0), "
        f"exhaustive-perm gap {worst_perm_gap:.2e} (<=1e-12), runtime {elapsed:.1f}s (<120s)",
    )


# -- criterion 2: chi-square / phi oracle ------------------------------------------


def test_criterion_2_chi_square_oracle():
    rng = np.random.default_rng(11)
    worst = 0.0
    checked = 0
    while checked < 1000:
        a, b, c, dd = (int(x) for x in rng.integers(0, 300, 4))
        if min(a + b, c + dd, a + c, b + dd) == 0:
            continue
        R = np.array([1] * (a + b) + [0] * (c + dd), dtype=np.uint8)[:, None]
        I = np.array([1] * a + [0] * b + [1] * c + [0] * dd, dtype=np.uint8)
        stats = dependency_stats(RealizationTable(("n",), R, I, np.zeros(len(I), int), 0))
        chi2_ref, p_ref, _, _ = scipy.stats.chi2_contingency([[a, b], [c, dd]], correction=False)
        n = a + b + c + dd
        worst = max(
            worst,
            abs(stats.chi2[0] - chi2_ref),
            abs(stats.p_value[0] - p_ref),
            abs(stats.phi[0] - math.sqrt(chi2_ref / n)),
        )
        checked += 1
    p_at_crit = chi2_sf_1dof(3.841)
    ok = worst <= 1e-10 and abs(p_at_crit - 0.05) <= 1e-3
    _report(
        "2 (chi-square oracle)", ok,
        f"max |delta| vs scipy over 1000 tables {worst:.2e} (<=1e-10), "
        f"p(3.841) = {p_at_crit:.6f} (0.05 +- 1e-3)",
    )


# -- criterion 3: null and identity ------------------------------------------------


class _ConstantModel:
    def predict_proba(self, X):
        n = (X.values if hasattr(X, "values") else X).shape[0]
        return np.column_stack((np.full(n, 0.6), np.full(n, 0.4)))


def test_criterion_3_null_and_identity():
    d, _ = generate(default_spec(seed=42), 800, bayes_mc=1000)
    enc = encoding.fit(d.schema, "hybrid")
    model = fit("forest", ForestParams(n_trees=30, max_depth=10), enc.transform(d), d.target, seed=1)

    cfg = PgmConfig(perturb_prob=1e-9, samples=1000, runs=1, seed=3)
    graph = explain(model, enc, d, cfg)
    max_w = max(n.weight for n in graph.nodes)

    selected_counts = []
    for seed in range(20):
        g = explain(_ConstantModel(), enc, d,
                    PgmConfig(samples=500, runs=2, alpha=0.05, seed=seed))
        selected_counts.append(len(g.selected_names()))
    ok = max_w == 0.0 and all(c == 0 for c in selected_counts)
    _report(
        "3 (pgm null/identity)", ok,
        f"max weight at v=1e-9: {max_w} (==0); constant model selections over 20 seeds: "
        f"{sum(selected_counts)} (==0)",
    )


# -- criteria 4 and 9 share one planted sweep ---------------------------------------


@pytest.fixture(scope="module")
def planted_sweep():
    rows = []
    started = time.monotonic()
    for seed in RECOVERY_SEEDS:
        spec = default_spec(seed=seed)
        d, truth = generate(spec, 5000, bayes_mc=20_000)
        enc = encoding.fit(d.schema, "hybrid")
        model = fit("forest", RECOVERY_FOREST, enc.transform(d), d.target, seed=seed * 17)
        graph = explain(model, enc, d,
                        PgmConfig(perturb_prob=RECOVERY_PGM.perturb_prob,
                                  samples=RECOVERY_PGM.samples, runs=RECOVERY_PGM.runs,
                                  alpha=RECOVERY_PGM.alpha, seed=seed * 31))
        test_spec = GeneratorSpec(schema=spec.schema, coefficients=spec.coefficients,
                                  seed=seed + 5000)
        d_test, _ = generate(test_spec, 6000, bayes_mc=1000)
        acc = evaluate(model, enc.transform(d_test), d_test.target).accuracy
        rows.append({
            "selected": set(graph.selected_names()),
            "causal": set(truth.causal_features),
            "bayes": truth.bayes_rate,
            "test_accuracy": acc,
        })
    return rows, time.monotonic() - started


def test_criterion_4_planted_recovery(planted_sweep):
    rows, elapsed = planted_sweep
    precisions, recalls = [], []
    for r in rows:
        tp = len(r["selected"] & r["causal"])
        precisions.append(tp / len(r["selected"]) if r["selected"] else 0.0)
        recalls.append(tp / len(r["causal"]))
    mp, mr = float(np.mean(precisions)), float(np.mean(recalls))
    ok = mp >= 0.8 and mr >= 0.8 and elapsed < 300
    _report(
        "4 (planted recovery)", ok,
        f"precision {mp:.3f} (>=0.8), recall {mr:.3f} (>=0.8) over {len(rows)} seeds, "
        f"sweep runtime {elapsed:.0f}s (<300s incl. criterion-9 evaluation)",
    )


def test_criterion_9_learner_sanity(planted_sweep):
    rows, _ = planted_sweep
    gaps = [r["bayes"] - r["test_accuracy"] for r in rows]
    mean_gap = float(np.mean(gaps))

    rng = np.random.default_rng(5)
    X = rng.normal(size=(300, 8))
    y = (X[:, 0] - X[:, 3] > 0).astype(int)
    tree = fit("tree", TreeParams(max_depth=9, min_leaf=2), X, y, seed=0)
    forest = fit("forest", ForestParams(n_trees=1, max_depth=9, min_leaf=2,
                                        bootstrap=False, max_features=None), X, y, seed=99)
    Q = rng.normal(size=(400, 8))
    identical = np.array_equal(tree.predict_proba(Q), forest.predict_proba(Q))

    ok = mean_gap <= 0.05 and identical
    _report(
        "9 (learner sanity)", ok,
        f"mean Bayes gap {mean_gap:.4f} (<=0.05); degenerate forest == tree: {identical}",
    )


# -- criterion 5: cohort analog -----------------------------------------------------


def test_criterion_5_cohort_recovery():
    planted = {"Asian": "C", "African American": "A", "Hispanic": "D"}
    hits = {k: 0 for k in planted}
    n_seeds = 10
    for seed in range(1, n_seeds + 1):
        spec = cohort_spec(seed=seed)
        d, _ = generate(spec, 6000, bayes_mc=2000)
        enc = encoding.fit(d.schema, "hybrid")
        model = fit("forest", RECOVERY_FOREST, enc.transform(d), d.target, seed=seed * 17)
        for eth, want in planted.items():
            g = cohort_explain(model, enc, d, ("ethnicity", eth),
                               PgmConfig(mode="groups", seed=seed * 31))
            if g.ranked()[0].name == want:
                hits[eth] += 1
    ok = all(h >= 0.9 * n_seeds for h in hits.values())
    _report(
        "5 (cohort recovery)", ok,
        f"planted group ranked first: {hits} out of {n_seeds} seeds each (need >=9)",
    )


# -- criterion 6: encoding directional analog ----------------------------------------


def test_criterion_6_encoding_and_tuner():
    from vaxlens.dataset import split_stratified

    diffs, edges = [], []
    for seed in range(1, 6):
        spec = nominal_spec(seed=seed)
        d, _ = generate(spec, 1500, bayes_mc=1000)
        train, test = split_stratified(d, 0.3, seed=seed)
        accs = {}
        for mode in ("hybrid", "label"):
            enc = encoding.fit(d.schema, mode)
            model = fit("forest", ForestParams(n_trees=120, max_depth=16, min_leaf=2),
                        enc.transform(train), train.target, seed=seed * 13)
            accs[mode] = evaluate(model, enc.transform(test), test.target).accuracy
        diffs.append(accs["hybrid"] - accs["label"])

        majority = max(d.target.mean(), 1 - d.target.mean())
        cfg = TunerConfig(rounds=8, folds=5, seed=seed,
                          search_space={"n_trees": (30, 80), "max_depth": (4, 20), "min_leaf": (1, 10)})
        result = random_search("forest", d, "hybrid", cfg)
        edges.append(result.best_score - majority)
    mean_diff = float(np.mean(diffs))
    min_edge = float(min(edges))
    ok = mean_diff >= -0.005 and min_edge >= 0.10
    _report(
        "6 (encoding analog)", ok,
        f"hybrid - label accuracy {mean_diff:+.4f} (>=-0.005 over 5 seeds), "
        f"min tuner edge over majority {min_edge:+.3f} (>=+0.10)",
    )


# -- criterion 7: fold-setting stability ----------------------------------------------


def test_criterion_7_fold_stability():
    from vaxlens.learning import cross_validate

    worst = 0.0
    for seed in range(1, 6):
        d, _ = generate(default_spec(seed=seed), 5000, bayes_mc=1000)
        params = ForestParams(n_trees=30, max_depth=12, min_leaf=5)
        scores = {k: cross_validate("forest", params, d, "hybrid", k, seed=seed * 7)[0]
                  for k in (5, 10, 15)}
        for a, b in itertools.combinations(scores.values(), 2):
            worst = max(worst, abs(a - b))
    ok = worst <= 0.03
    _report(
        "7 (fold stability)", ok,
        f"max pairwise |CV accuracy difference| across k in (5,10,15): {worst:.4f} (<=0.03)",
    )


# -- criterion 8: CLI determinism -----------------------------------------------------


def _run_cli(*argv):
    assert dispatch([str(a) for a in argv]) == 0, f"command failed: {argv}"


def test_criterion_8_cli_determinism(tmp_path):
    def artifacts_for(tag: str, threads: int) -> dict[str, bytes]:
        root = tmp_path / tag
        root.mkdir()
        data, schema, model = root / "d.csv", root / "s.tsv", root / "m.json"
        truth = root / "gt.json"
        _run_cli("gen-data", "--n", 300, "--seed", 5, "--out", data,
                 "--schema-out", schema, "--truth-out", truth, "--threads", threads)
        _run_cli("train", "--data", data, "--schema", schema, "--model", "rf",
                 "--n-trees", 20, "--max-depth", 8, "--seed", 9, "--out", model,
                 "--threads", threads)
        _run_cli("tune", "--data", data, "--schema", schema, "--model", "tree",
                 "--rounds", 2, "--folds", 3, "--seed", 3, "--out", root / "tune.json",
                 "--space", '{"max_depth": [3, 8], "min_leaf": [1, 4]}', "--threads", threads)
        _run_cli("evaluate", "--data", data, "--schema", schema, "--model-file", model,
                 "--out", root / "metrics.json", "--threads", threads)
        _run_cli("explain", "shap", "--data", data, "--schema", schema, "--model-file", model,
                 "--mode", "sampled", "--permutations", 8, "--background", 8,
                 "--max-instances", 3, "--seed", 4, "--out-csv", root / "phi.csv",
                 "--out-json", root / "rank.json", "--threads", threads)
        _run_cli("explain", "pgm", "--data", data, "--schema", schema, "--model-file", model,
                 "--mode", "groups", "--runs", 2, "--samples", 300, "--seed", 7,
                 "--out-json", root / "g.json", "--out-dot", root / "g.dot",
                 "--threads", threads)
        return {p.name: p.read_bytes() for p in sorted(root.iterdir())}

    runs = {
        (threads, repeat): artifacts_for(f"t{threads}r{repeat}", threads)
        for threads in (1, 8)
        for repeat in (1, 2)
    }
    baseline = runs[(1, 1)]
    mismatched = [
        f"threads={t} repeat={r}: {name}"
        for (t, r), files in runs.items()
        for name in baseline
        if files.get(name) != baseline[name]
    ]
    ok = not mismatched
    _report(
        "8 (cli determinism)", ok,
        f"{len(baseline)} artifacts byte-identical across reruns at thread caps 1 and 8"
        + ("" if ok else f"; mismatches: {mismatched}"),
    )
