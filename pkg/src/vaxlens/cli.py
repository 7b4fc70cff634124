"""Command-line interface.

Subcommands: gen-data, train, tune, evaluate, explain shap, explain pgm.
All randomness flows from --seed; reruns with identical flags produce
byte-identical data artifacts (the optional --report file carries timing and
is the one exception). Exit codes: 0 ok, 2 usage, 3 data/schema/I-O error,
4 numeric/fit/config error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import encoding, pgm, synth
from .dataset import load_csv, split_stratified, write_csv
from .errors import (
    CohortError,
    ConfigError,
    DataError,
    EvalError,
    FitError,
    FoldError,
    QueryError,
    SchemaError,
    ShapeError,
    SplitError,
    VaxlensError,
)
from .learning import (
    ForestParams,
    KnnParams,
    ModelKind,
    TreeParams,
    TunerConfig,
    evaluate,
    fit,
    load_model_document,
    random_search,
    save_model,
)
from .reports import (
    RunReport,
    attributions_to_csv,
    ranking_to_json_obj,
    write_graph,
    write_json,
)
from .schema import parse_schema, serialize_schema
from .shapley import global_summary, sample_background

_DATA_ERRORS = (SchemaError, DataError, QueryError, SplitError, CohortError, OSError)
_NUMERIC_ERRORS = (ConfigError, FitError, ShapeError, FoldError, EvalError)

PRESETS = {
    "default": synth.default_spec,
    "cohort": synth.cohort_spec,
    "nominal": synth.nominal_spec,
}


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="vaxlens", description=__doc__,
                                  formatter_class=argparse.RawDescriptionHelpFormatter)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=1,
                        help="cap on internal parallelism (output is invariant to it)")
    common.add_argument("--report", type=Path, default=None, help="write a JSON run report here")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic survey dataset", parents=[common])
    p.add_argument("--preset", choices=sorted(PRESETS), default="default")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-scale", type=float, default=0.0)
    p.add_argument("--out", type=Path, required=True, help="CSV output path")
    p.add_argument("--schema-out", type=Path, required=True, help="schema document output path")
    p.add_argument("--truth-out", type=Path, default=None, help="ground-truth JSON output path")

    p = sub.add_parser("train", help="fit a classifier and save it", parents=[common])
    _data_args(p)
    p.add_argument("--model", default="rf", help="rf | tree | knn")
    p.add_argument("--encoding", choices=["hybrid", "onehot", "label"], default="hybrid")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True, help="model JSON output path")
    p.add_argument("--test-frac", type=float, default=None,
                   help="hold out this fraction before fitting and report test metrics")
    p.add_argument("--n-trees", type=int, default=100)
    p.add_argument("--max-depth", type=int, default=16)
    p.add_argument("--min-leaf", type=int, default=1)
    p.add_argument("--max-features", default="sqrt", help="'sqrt', 'all' or an integer")
    p.add_argument("--no-bootstrap", action="store_true")
    p.add_argument("--k", type=int, default=5, help="neighbours for knn")

    p = sub.add_parser("tune", help="randomized-search cross-validation", parents=[common])
    _data_args(p)
    p.add_argument("--model", default="rf")
    p.add_argument("--encoding", choices=["hybrid", "onehot", "label"], default="hybrid")
    p.add_argument("--rounds", type=int, default=30)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rescreen", action="store_true",
                   help="also score the winner at 10- and 15-fold CV and report the 3-way mean")
    p.add_argument("--space", type=str, default=None,
                   help='JSON search space, e.g. {"n_trees": [30, 80]}')
    p.add_argument("--out", type=Path, required=True, help="tuning report JSON output path")

    p = sub.add_parser("evaluate", help="evaluate a saved model on a dataset", parents=[common])
    _data_args(p)
    p.add_argument("--model-file", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="metrics JSON output path")

    px = sub.add_parser("explain", help="model explanation")
    xsub = px.add_subparsers(dest="explainer", required=True)

    p = xsub.add_parser("shap", help="Shapley attributions and global ranking", parents=[common])
    _data_args(p)
    p.add_argument("--model-file", type=Path, required=True)
    p.add_argument("--mode", choices=["auto", "exact", "sampled"], default="auto")
    p.add_argument("--background", type=int, default=32)
    p.add_argument("--permutations", type=int, default=200)
    p.add_argument("--top-k", type=int, default=20)
    p.add_argument("--max-instances", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-csv", type=Path, default=None)
    p.add_argument("--out-json", type=Path, default=None)

    p = xsub.add_parser("pgm", help="perturbation dependency graph", parents=[common])
    _data_args(p)
    p.add_argument("--model-file", type=Path, required=True)
    p.add_argument("--mode", choices=["features", "groups"], default="features")
    p.add_argument("--perturb-prob", type=float, default=0.3)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--change-metric", choices=["label", "probability"], default="label")
    p.add_argument("--tau", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cohort", type=str, default=None, help="feature=level cohort filter")
    p.add_argument("--out-json", type=Path, default=None)
    p.add_argument("--out-dot", type=Path, default=None)
    return top


def _data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", type=Path, required=True, help="CSV dataset path")
    p.add_argument("--schema", type=Path, required=True, help="schema document path")


def _load(args):
    schema = parse_schema(Path(args.schema).read_text(encoding="utf-8"))
    return schema, load_csv(args.data, schema)


def _train_params(args, kind: ModelKind):
    if kind is ModelKind.TREE:
        return TreeParams(max_depth=args.max_depth, min_leaf=args.min_leaf)
    if kind is ModelKind.FOREST:
        mf = args.max_features
        if mf == "all":
            mf = None
        elif mf != "sqrt":
            try:
                mf = int(mf)
            except ValueError:
                raise ConfigError(f"--max-features must be 'sqrt', 'all' or an int, got {mf!r}") from None
        return ForestParams(n_trees=args.n_trees, max_depth=args.max_depth,
                            min_leaf=args.min_leaf, bootstrap=not args.no_bootstrap,
                            max_features=mf)
    return KnnParams(k=args.k)


def _cmd_gen_data(args, report: RunReport) -> None:
    spec = PRESETS[args.preset](seed=args.seed)
    if args.noise_scale:
        if args.preset != "default":
            raise ConfigError("--noise-scale is only supported by the default preset")
        spec = PRESETS[args.preset](seed=args.seed, noise_scale=args.noise_scale)
    dataset, truth = synth.generate(spec, args.n)
    write_csv(dataset, args.out)
    Path(args.schema_out).write_text(serialize_schema(dataset.schema), encoding="utf-8")
    report.outputs += [str(args.out), str(args.schema_out)]
    if args.truth_out is not None:
        write_json(truth.to_dict(), args.truth_out)
        report.outputs.append(str(args.truth_out))
    print(f"wrote {dataset.n_rows} rows ({args.preset} preset, seed {args.seed})")


def _cmd_train(args, report: RunReport) -> None:
    schema, d = _load(args)
    kind = ModelKind.parse(args.model)
    train = d
    test = None
    if args.test_frac is not None:
        train, test = split_stratified(d, args.test_frac, args.seed)
    enc = encoding.fit(schema, args.encoding)
    model = fit(kind, _train_params(args, kind), enc.transform(train), train.target,
                seed=args.seed, threads=args.threads)
    save_model(model, args.out, meta={"encoding": args.encoding, "seed": args.seed})
    report.outputs.append(str(args.out))
    msg = f"trained {kind.value} on {train.n_rows} rows"
    if test is not None:
        m = evaluate(model, enc.transform(test), test.target)
        report.config["test_metrics"] = m.to_dict()
        msg += f"; held-out accuracy {m.accuracy:.4f} f1 {m.f1:.4f}"
    print(msg)


def _cmd_tune(args, report: RunReport) -> None:
    schema, d = _load(args)
    space = None
    if args.space:
        try:
            raw = json.loads(args.space)
            space = {k: (int(v[0]), int(v[1])) for k, v in raw.items()}
        except (json.JSONDecodeError, TypeError, ValueError, IndexError):
            raise ConfigError(f"--space must be JSON like {{\"n_trees\": [30, 80]}}") from None
    cfg = TunerConfig(rounds=args.rounds, folds=args.folds, seed=args.seed,
                      search_space=space, rescreen=args.rescreen)
    result = random_search(args.model, d, args.encoding, cfg, threads=args.threads)
    write_json(result.to_dict(), args.out)
    report.outputs.append(str(args.out))
    print(f"best {result.kind} params {result.best_params} "
          f"with CV accuracy {result.best_score:.4f}")
    if result.rescreen_mean is not None:
        print(f"fold-setting scores {result.fold_setting_scores}; 3-way mean {result.rescreen_mean:.4f}")


def _cmd_evaluate(args, report: RunReport) -> None:
    schema, d = _load(args)
    model, doc = load_model_document(args.model_file)
    enc = encoding.fit(schema, doc.get("meta", {}).get("encoding", "hybrid"))
    m = evaluate(model, enc.transform(d), d.target)
    write_json(m.to_dict(), args.out)
    report.outputs.append(str(args.out))
    print(f"accuracy {m.accuracy:.4f} precision {m.precision:.4f} "
          f"recall {m.recall:.4f} f1 {m.f1:.4f}")


def _cmd_explain_shap(args, report: RunReport) -> None:
    schema, d = _load(args)
    model, doc = load_model_document(args.model_file)
    enc = encoding.fit(schema, doc.get("meta", {}).get("encoding", "hybrid"))
    background = sample_background(d, size=args.background, seed=args.seed)
    summary = global_summary(model, enc, d, background, mode=args.mode,
                             top_k=args.top_k, seed=args.seed,
                             permutations=args.permutations,
                             max_instances=args.max_instances)
    if args.out_csv is not None:
        attributions_to_csv(summary.attributions, d, args.out_csv)
        report.outputs.append(str(args.out_csv))
    if args.out_json is not None:
        write_json(ranking_to_json_obj(summary.ranking, args.top_k), args.out_json)
        report.outputs.append(str(args.out_json))
    top = summary.top_entries()
    print(f"attributed {len(summary.attributions)} instances in {summary.mode} mode; "
          f"top factor: {top[0][0]} ({top[0][1]:.4f})")


def _cmd_explain_pgm(args, report: RunReport) -> None:
    schema, d = _load(args)
    model, doc = load_model_document(args.model_file)
    enc = encoding.fit(schema, doc.get("meta", {}).get("encoding", "hybrid"))
    cfg = pgm.PgmConfig(perturb_prob=args.perturb_prob, samples=args.samples,
                        runs=args.runs, alpha=args.alpha, mode=args.mode,
                        seed=args.seed, change_metric=args.change_metric, tau=args.tau)
    if args.cohort:
        if "=" not in args.cohort:
            raise ConfigError(f"--cohort wants feature=level, got {args.cohort!r}")
        feature, level = args.cohort.split("=", 1)
        graph = pgm.cohort_explain(model, enc, d, (feature, level), cfg, threads=args.threads)
    else:
        graph = pgm.explain(model, enc, d, cfg, threads=args.threads)
    report.outputs += write_graph(graph, args.out_json, args.out_dot)
    report.warnings += list(graph.warnings)
    ranked = graph.ranked()
    sel = graph.selected_names()
    print(f"{len(graph.nodes)} nodes, {len(sel)} selected at alpha={cfg.alpha}; "
          f"strongest: {ranked[0].name} (weight {ranked[0].weight:.4f})")


_HANDLERS = {
    "gen-data": _cmd_gen_data,
    "train": _cmd_train,
    "tune": _cmd_tune,
    "evaluate": _cmd_evaluate,
    ("explain", "shap"): _cmd_explain_shap,
    ("explain", "pgm"): _cmd_explain_pgm,
}


def dispatch(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses exit code 2 for usage errors
        return int(exc.code or 0)
    key = (args.command, args.explainer) if args.command == "explain" else args.command
    config = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()
              if k not in ("command", "explainer", "report")}
    report = RunReport(
        command=args.command if isinstance(key, str) else " ".join(key),
        config=config,
        seed=getattr(args, "seed", None),
    )
    started = time.perf_counter()
    try:
        if args.threads < 1:
            raise ConfigError(f"--threads must be >= 1, got {args.threads}")
        _HANDLERS[key](args, report)
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except _NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except VaxlensError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    report.timing_seconds = time.perf_counter() - started
    if args.report is not None:
        report.write(args.report)
    return 0


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
