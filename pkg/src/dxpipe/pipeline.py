"""End-to-end runs: load, impute, select, cross-validate, report; plus the scaling bench.

Every stage writes its artifact under fixed names in the output directory so a
downstream stage can be re-run on its own from those files.
"""

from __future__ import annotations

import hashlib
import json
import os
import platform
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import adtree, featsel, imputation, metrics, synthetic
from .errors import ConfigError, DataError, DxError
from .tabular import MISSING_TOKEN, Dataset, Schema, inject_missing, load_dataset, stratified_kfold

MODES = ("paper-faithful", "nested")

REPORT = "report.json"
ROC = "roc.csv"
FEATURES = "features.txt"
IMPUTED = "imputed.csv"
IMPUTE_LOG = "impute.log"
TREE = "tree.txt"
BENCH = "bench.csv"
BENCH_SUMMARY = "bench.json"


class StageError(DxError):
    """Failure inside a named pipeline stage; ``cause`` keeps the original error."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


class _stage:
    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, StageError) and isinstance(exc, Exception):
            raise StageError(self.name, exc) from exc
        return False


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def read_text(path, what: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"{what} file not found: {p}")
    return p.read_text(encoding="utf-8")


def read_dataset(data, schema, missing_token: str = MISSING_TOKEN) -> Dataset:
    schema_text = read_text(schema, "schema")
    csv_text = read_text(data, "data")
    return load_dataset(csv_text, Schema.parse(schema_text), missing_token)


def read_features(path, dataset: Dataset) -> list[int]:
    names = [ln.strip() for ln in read_text(path, "features").splitlines() if ln.strip()]
    if not names:
        raise DataError(f"no column names in {path}")
    return [dataset.column_index(n) for n in names]


def features_text(names: Sequence[str]) -> str:
    return "".join(f"{n}\n" for n in names)


def evaluate_dataset(
    dataset: Dataset,
    k: int,
    adt_cfg: adtree.ADTConfig,
    seed: int,
    quantiles: int = 4,
) -> tuple[dict, metrics.RocCurve]:
    """Pooled k-fold ADT scores summarised as a report dict and ROC curve."""
    pool = metrics.pooled_cv_scores(dataset, k, adt_cfg, seed)
    report, curve = metrics.evaluate_pool(pool, k, quantiles)
    return report.to_dict(), curve


@dataclass
class PipelineConfig:
    data: Path
    schema: Path
    out: Path
    seed: int
    k: int = 10
    ga: featsel.GaConfig = field(default_factory=featsel.GaConfig)
    adt: adtree.ADTConfig = field(default_factory=adtree.ADTConfig)
    mode: str = "paper-faithful"
    missing_token: str = MISSING_TOKEN
    quantiles: int = 4
    ga_cv: int | None = None

    def settings(self) -> dict:
        """Run settings echoed into the report (no paths, so reports compare across directories)."""
        return {
            "k": self.k,
            "seed": self.seed,
            "mode": self.mode,
            "adt": asdict(self.adt),
            "ga": asdict(self.ga),
            "ga_cv": self.ga_cv or self.k,
            "quantiles": self.quantiles,
        }


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Load, impute, select features, cross-validate and write all stage artifacts."""
    if cfg.mode not in MODES:
        raise StageError("config", ConfigError(f"mode must be one of {MODES}"))
    out = Path(cfg.out)
    ga = featsel.GaConfig(**{**asdict(cfg.ga), "seed": cfg.seed})
    ga_cv = cfg.ga_cv or cfg.k

    with _stage("load"):
        raw = read_dataset(cfg.data, cfg.schema, cfg.missing_token)
        stratified_kfold(raw, cfg.k, cfg.seed)

    with _stage("impute"):
        data, log = imputation.impute(raw)
        write_atomic(out / IMPUTED, data.to_csv(cfg.missing_token))
        write_atomic(out / IMPUTE_LOG, log.to_text(raw))

    with _stage("select"):
        chosen = featsel.select_features(data, ga, ga_cv, cfg.adt)
        write_atomic(out / FEATURES, features_text(chosen.columns))
        projected = data.project(np.flatnonzero(chosen.mask))

    with _stage("evaluate"):
        if cfg.mode == "paper-faithful":
            report, curve = evaluate_dataset(projected, cfg.k, cfg.adt, cfg.seed, cfg.quantiles)
            fold_features = None
        else:
            report, curve, fold_features = _nested(data, cfg, ga, ga_cv)

    with _stage("write"):
        tree = adtree.train(projected, cfg.adt.iterations, cfg.adt.epsilon, cfg.seed)
        write_atomic(out / TREE, tree.dumps())
        report["pipeline"] = {
            "settings": cfg.settings(),
            "n_imputed": len(log),
            "selected_features": chosen.columns,
            "selection_fitness": chosen.fitness,
            "ga_history": chosen.history,
            "fold_features": fold_features,
        }
        write_atomic(out / ROC, curve.to_csv())
        write_atomic(out / REPORT, dumps_json(report))
    return report


def _nested(data: Dataset, cfg: PipelineConfig, ga: featsel.GaConfig, ga_cv: int):
    """Selection repeated inside every outer training fold."""
    folds = stratified_kfold(data, cfg.k, cfg.seed)
    probs = np.zeros(data.m)
    preds = np.zeros(data.m, dtype=int)
    fold_features = []
    for train_idx, test_idx in folds.splits():
        train_part = data.take(train_idx)
        sel = featsel.select_features(train_part, ga, ga_cv, cfg.adt)
        cols = np.flatnonzero(sel.mask)
        fold_features.append(sel.columns)
        tree = adtree.train(train_part.project(cols), cfg.adt.iterations, cfg.adt.epsilon, cfg.seed)
        mg = adtree.margins(tree, data.take(test_idx).project(cols))
        probs[test_idx] = adtree.probability(mg)
        preds[test_idx] = adtree.classify_margin(tree, mg)
    pool = metrics.ScorePool(probs, data.y.copy(), preds, folds.assignment.copy())
    report, curve = metrics.evaluate_pool(pool, cfg.k, cfg.quantiles)
    return report.to_dict(), curve, fold_features


def machine_metadata() -> dict:
    return {
        "platform": platform.platform(),
        "machine": platform.machine(),
        "processor": platform.processor(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "cpu_count": os.cpu_count(),
    }


@dataclass
class BenchReport:
    sizes: list[int]
    seconds: list[float]
    missing_cells: list[int]
    digests: list[str]
    slope: float
    intercept: float
    r_squared: float
    settings: dict
    machine: dict

    def to_csv(self) -> str:
        lines = ["size,seconds,missing_cells,digest"]
        for row in zip(self.sizes, self.seconds, self.missing_cells, self.digests):
            lines.append("{},{!r},{},{}".format(*row))
        return "\n".join(lines) + "\n"

    def deterministic_part(self) -> dict:
        """Everything except wall-clock timings and the fit made from them."""
        return {
            "sizes": self.sizes,
            "missing_cells": self.missing_cells,
            "digests": self.digests,
            "settings": self.settings,
        }


def run_bench(
    sizes: Sequence[int],
    n_columns: int = 8,
    missing_rate: float = 0.1,
    seed: int = 0,
    repeats: int = 1,
    out: Path | None = None,
) -> BenchReport:
    """Time imputation on synthetic data of each size and fit time against size."""
    sizes = [int(s) for s in sizes]
    if len(set(sizes)) < 4:
        raise ConfigError("bench needs at least 4 distinct sizes")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ConfigError("bench sizes must be strictly ascending")
    if n_columns < 1 or repeats < 1:
        raise ConfigError("n_columns and repeats must be positive")
    seconds, cells, digests = [], [], []
    for size in sizes:
        data = inject_missing(synthetic.make_dataset(size, n_columns - 1, seed), missing_rate, seed)
        best = float("inf")
        for _ in range(repeats):
            t0 = time.perf_counter()
            filled, _ = imputation.impute(data)
            best = min(best, time.perf_counter() - t0)
        seconds.append(best)
        cells.append(data.n_missing)
        digests.append(hashlib.sha256(filled.to_csv().encode()).hexdigest()[:16])
    slope, intercept, r2 = metrics.linear_fit(sizes, seconds)
    report = BenchReport(
        sizes, seconds, cells, digests, slope, intercept, r2,
        {"n_columns": n_columns, "missing_rate": missing_rate, "seed": seed, "repeats": repeats},
        machine_metadata(),
    )
    if out is not None:
        write_atomic(Path(out) / BENCH, report.to_csv())
        write_atomic(Path(out) / BENCH_SUMMARY, dumps_json(asdict(report)))
    return report
