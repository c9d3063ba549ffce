"""Command-line entry point.

Exit codes: 0 success, 2 usage/configuration, 3 data error, 4 numeric or
degenerate error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import adtree, featsel, imputation, metrics, pipeline, proximity
from .errors import ConfigError, DataError, DegenerateError, DxError
from .tabular import MISSING_TOKEN, inject_missing

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _add_data(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, type=Path, help="CSV file with a header row")
    p.add_argument("--schema", required=True, type=Path, help="one '<name>:<kind>' line per column")
    p.add_argument("--missing-token", default=MISSING_TOKEN)


def _add_seed(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", required=True, type=int)


def _add_adt(p: argparse.ArgumentParser) -> None:
    p.add_argument("--adt-iters", type=int, default=10, help="boosting rounds")
    p.add_argument("--epsilon", type=float, default=1.0, help="prediction-value smoothing")


def _add_ga(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ga-pop", type=int, default=20)
    p.add_argument("--ga-gens", type=int, default=20)
    p.add_argument("--ga-crossover", type=float, default=1.0)
    p.add_argument("--ga-mutation", type=float, default=0.001)
    p.add_argument("--ga-cv", type=int, default=None, help="folds for fitness (default: --k)")


def _adt_cfg(a) -> adtree.ADTConfig:
    return adtree.ADTConfig(a.adt_iters, a.epsilon)


def _ga_cfg(a) -> featsel.GaConfig:
    try:
        return featsel.GaConfig(a.ga_pop, a.ga_gens, a.ga_crossover, a.ga_mutation, 1, a.seed)
    except DataError as exc:
        raise ConfigError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dxpipe", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pipeline", help="impute, select features, cross-validate, report")
    _add_data(p)
    _add_seed(p)
    _add_adt(p)
    _add_ga(p)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--mode", choices=pipeline.MODES, default="paper-faithful")
    p.add_argument("--quantiles", type=int, default=4)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("impute", help="fill missing cells")
    _add_data(p)
    p.add_argument("--method", choices=("nm", "mean-mode", "knn"), default="nm")
    p.add_argument("--knn-k", type=int, default=5)
    p.add_argument("--distances", action="store_true", help="also dump the distance matrix")
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("inject", help="blank a fraction of feature cells")
    _add_data(p)
    _add_seed(p)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("select", help="genetic wrapper feature selection")
    _add_data(p)
    _add_seed(p)
    _add_adt(p)
    _add_ga(p)
    p.add_argument("--k", type=int, default=10, help="folds for fitness")
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("train", help="train an ADT on the whole dataset")
    _add_data(p)
    _add_seed(p)
    _add_adt(p)
    p.add_argument("--features", type=Path, help="features.txt restricting the columns")
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("evaluate", help="pooled k-fold ROC/AUC report, or score a saved tree")
    _add_data(p)
    _add_seed(p)
    _add_adt(p)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--quantiles", type=int, default=4)
    p.add_argument("--features", type=Path)
    p.add_argument("--tree", type=Path, help="score this tree instead of cross-validating")
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("compare-imputers", help="inject/impute/classify/Wilcoxon harness")
    _add_data(p)
    _add_adt(p)
    p.add_argument("--rates", type=_floats, required=True, help="comma-separated missing rates")
    p.add_argument("--seeds", type=_ints, required=True, help="comma-separated seeds")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--knn-k", type=int, default=5)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("bench", help="imputation time against dataset size")
    _add_seed(p)
    p.add_argument("--sizes", type=_ints, default=[1000, 2500, 5000, 7500, 10000])
    p.add_argument("--n-columns", type=int, default=8)
    p.add_argument("--missing-rate", type=float, default=0.1)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--out", required=True, type=Path)
    return parser


def _load(a):
    with pipeline._stage("load"):
        return pipeline.read_dataset(a.data, a.schema, a.missing_token)


def _project(a, data):
    if getattr(a, "features", None):
        with pipeline._stage("load"):
            return data.project(pipeline.read_features(a.features, data))
    return data


def cmd_pipeline(a) -> None:
    cfg = pipeline.PipelineConfig(
        data=a.data, schema=a.schema, out=a.out, seed=a.seed, k=a.k,
        ga=_ga_cfg(a), adt=_adt_cfg(a), mode=a.mode, missing_token=a.missing_token,
        quantiles=a.quantiles, ga_cv=a.ga_cv,
    )
    r = pipeline.run_pipeline(cfg)
    print(f"features: {', '.join(r['pipeline']['selected_features'])}")
    print(f"accuracy {r['accuracy']:.4f}  SE {r['sensitivity']:.4f}  SP {r['specificity']:.4f}  AUC {r['auc']:.4f}")
    op = r["operating_point"]
    print(f"operating point: threshold {op['threshold']:.4f}  SE {op['sensitivity']:.4f}  SP {op['specificity']:.4f}")


def cmd_impute(a) -> None:
    data = _load(a)
    with pipeline._stage("impute"):
        if a.method == "nm":
            filled, log = imputation.impute(data)
            pipeline.write_atomic(a.out / pipeline.IMPUTE_LOG, log.to_text(data))
        elif a.method == "mean-mode":
            filled = imputation.impute_mean_mode(data)
        else:
            filled = imputation.impute_knn(data, a.knn_k)
        pipeline.write_atomic(a.out / pipeline.IMPUTED, filled.to_csv(a.missing_token))
        if a.distances:
            pipeline.write_atomic(a.out / "distances.csv", proximity.dump_distance_matrix(data))
    print(f"imputed {data.n_missing} cells -> {a.out / pipeline.IMPUTED}")


def cmd_inject(a) -> None:
    data = _load(a)
    with pipeline._stage("inject"):
        damaged = inject_missing(data, a.rate, a.seed)
        pipeline.write_atomic(a.out / "injected.csv", damaged.to_csv(a.missing_token))
    print(f"blanked {damaged.n_missing} cells -> {a.out / 'injected.csv'}")


def cmd_select(a) -> None:
    data = _load(a)
    with pipeline._stage("select"):
        sel = featsel.select_features(data, _ga_cfg(a), a.ga_cv or a.k, _adt_cfg(a))
        pipeline.write_atomic(a.out / pipeline.FEATURES, pipeline.features_text(sel.columns))
    print("selected: " + ", ".join(sel.columns))
    print(f"fitness: {sel.fitness:.4f}  ({sel.evaluations} masks evaluated)")
    for g, f in enumerate(sel.history):
        print(f"  generation {g:3d}  best {f:.4f}")


def cmd_train(a) -> None:
    data = _project(a, _load(a))
    with pipeline._stage("train"):
        tree = adtree.train(data, a.adt_iters, a.epsilon, a.seed)
        pipeline.write_atomic(a.out / pipeline.TREE, tree.dumps())
    print(tree.describe(), end="")


def cmd_evaluate(a) -> None:
    data = _project(a, _load(a))
    with pipeline._stage("evaluate"):
        if a.tree:
            tree = adtree.ADTree.loads(pipeline.read_text(a.tree, "tree"))
            mg = adtree.margins(tree, data)
            pool = metrics.ScorePool(
                adtree.probability(mg), data.y.copy(), adtree.classify_margin(tree, mg),
                np.zeros(data.m, dtype=int),
            )
            rep, curve = metrics.evaluate_pool(pool, 1, a.quantiles)
            report = rep.to_dict()
        else:
            report, curve = pipeline.evaluate_dataset(data, a.k, _adt_cfg(a), a.seed, a.quantiles)
        pipeline.write_atomic(a.out / pipeline.REPORT, pipeline.dumps_json(report))
        pipeline.write_atomic(a.out / pipeline.ROC, curve.to_csv())
    print(f"accuracy {report['accuracy']:.4f}  AUC {report['auc']:.4f}")


def cmd_compare(a) -> None:
    data = _load(a)
    with pipeline._stage("compare"):
        cfg = imputation.ClassifierConfig(a.k, _adt_cfg(a), a.knn_k)
        rep = imputation.compare_imputers(data, a.rates, a.seeds, cfg)
        pipeline.write_atomic(a.out / "comparison.csv", rep.to_text())
    print(rep.to_text(), end="")


def cmd_bench(a) -> None:
    with pipeline._stage("bench"):
        rep = pipeline.run_bench(a.sizes, a.n_columns, a.missing_rate, a.seed, a.repeats, a.out)
    for s, t in zip(rep.sizes, rep.seconds):
        print(f"  {s:7d} records  {t:8.3f} s")
    print(f"T = {rep.slope:.3e} * D + {rep.intercept:.3f}  (r^2 = {rep.r_squared:.4f})")
    print(f"machine: {rep.machine['platform']} ({rep.machine['cpu_count']} cpu)")


COMMANDS = {
    "pipeline": cmd_pipeline,
    "impute": cmd_impute,
    "inject": cmd_inject,
    "select": cmd_select,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "compare-imputers": cmd_compare,
    "bench": cmd_bench,
}


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, pipeline.StageError):
        exc = exc.cause
    if isinstance(exc, ConfigError):
        return EXIT_USAGE
    if isinstance(exc, DegenerateError):
        return EXIT_NUMERIC
    if isinstance(exc, (DataError, ValueError, KeyError)):
        return EXIT_DATA
    return EXIT_NUMERIC


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    try:
        COMMANDS[args.command](args)
    except (DxError, ArithmeticError, ValueError) as exc:
        print(f"dxpipe: error: {exc}", file=sys.stderr)
        return exit_code(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
