"""Missing-value imputation.

:func:`impute` fills each missing cell from the records whose class-conditional
distance to the incomplete record is at or below the mean distance (z-score
<= 0): the neighbours' mode for discrete columns, their mean for real ones.
:func:`impute_mean_mode` and :func:`impute_knn` are baselines, and
:func:`compare_imputers` runs all three through a classifier on data with
injected missingness.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import adtree, metrics
from .errors import DataError
from .proximity import IndexContext, z_scores
from .tabular import ColumnKind, Dataset, inject_missing, stratified_kfold

RULES = ("mode", "mean", "class-fallback", "global-fallback")


@dataclass(frozen=True, eq=False)
class ImputedCell:
    record: int
    column: int
    neighbors: np.ndarray
    value: object
    rule: str


@dataclass
class ImputationLog:
    entries: list[ImputedCell] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def to_text(self, dataset: Dataset) -> str:
        lines = []
        for e in self.entries:
            kind = dataset.features[e.column].kind
            value = int(e.value) if kind is ColumnKind.INTEGER else e.value
            lines.append(
                f"record={e.record}\tcolumn={dataset.features[e.column].name}\t"
                f"value={value!r}\trule={e.rule}\tneighbors={','.join(map(str, e.neighbors.tolist()))}"
            )
        return "\n".join(lines) + ("\n" if lines else "")


def _check_columns(dataset: Dataset) -> None:
    if dataset.m == 0:
        return
    empty = [c.name for l, c in enumerate(dataset.features) if dataset.missing[:, l].all()]
    if empty:
        raise DataError(f"columns with no observed value cannot be imputed: {empty}")


def _mode(values: list, tiebreak: Counter | None = None):
    """Most frequent value; ties prefer ``tiebreak`` frequency, then the smallest value."""
    counts = Counter(values)
    top = max(counts.values())
    tied = [v for v, c in counts.items() if c == top]
    if len(tied) == 1:
        return tied[0]
    tiebreak = tiebreak or Counter()
    return min(tied, key=lambda v: (-tiebreak[v], v))


def _mean(values: list) -> float:
    return math.fsum(values) / len(values)


class _Filler:
    """Column statistics shared by the fill rules of every imputer."""

    def __init__(self, dataset: Dataset):
        self.ds = dataset
        self.cls = dataset.y
        self.obs = ~dataset.missing
        self.class_counts = {}
        for l in range(dataset.n_features):
            for c in (-1, 1):
                sel = self.obs[:, l] & (self.cls == c)
                self.class_counts[c, l] = Counter(dataset.values[l][sel].tolist())

    def stat(self, rows: np.ndarray, l: int, i: int | None = None):
        vals = self.ds.values[l][rows].tolist()
        if self.ds.features[l].kind.is_discrete:
            tb = self.class_counts[self.cls[i], l] if i is not None else None
            return _mode(vals, tb), "mode"
        return _mean(vals), "mean"

    def observed(self, rows: np.ndarray, l: int) -> np.ndarray:
        return rows[self.obs[rows, l]]

    def fill(self, i: int, l: int, neighbors: np.ndarray) -> ImputedCell:
        donors = self.observed(neighbors, l)
        if len(donors):
            value, rule = self.stat(donors, l, i)
            return ImputedCell(i, l, donors, value, rule)
        same = self.observed(np.flatnonzero(self.cls == self.cls[i]), l)
        if len(same):
            value, _ = self.stat(same, l, i)
            return ImputedCell(i, l, np.zeros(0, dtype=int), value, "class-fallback")
        value, _ = self.stat(self.observed(np.arange(self.ds.m), l), l, i)
        return ImputedCell(i, l, np.zeros(0, dtype=int), value, "global-fallback")


def _apply(dataset: Dataset, cells: list[ImputedCell]) -> Dataset:
    return dataset.replace_cells({(c.record, c.column): c.value for c in cells})


def neighbor_set(ctx: IndexContext, i: int) -> np.ndarray:
    """Records ``j != i`` whose distance z-score is <= 0."""
    m = ctx.dataset.m
    others = np.delete(np.arange(m), i)
    if not len(others):
        return others
    d = ctx.distance_row(i)[others]
    return others[z_scores(d) <= 0]


def impute(dataset: Dataset) -> tuple[Dataset, ImputationLog]:
    """Fill every missing feature cell; returns the completed data and a per-cell log.

    All distances and fills come from the input dataset, so the result does not
    depend on the order in which records are processed.  When no selected
    neighbour observes the column, the record's class and then the whole
    column supply the value.
    """
    _check_columns(dataset)
    log = ImputationLog()
    if not dataset.n_missing:
        return dataset, log
    ctx = IndexContext.build(dataset)
    filler = _Filler(dataset)
    for i in np.flatnonzero(dataset.missing.any(axis=1)):
        nb = neighbor_set(ctx, int(i))
        for l in np.flatnonzero(dataset.missing[i]):
            log.entries.append(filler.fill(int(i), int(l), nb))
    return _apply(dataset, log.entries), log


def impute_mean_mode(dataset: Dataset) -> Dataset:
    """Global column mean (real) or mode (categorical/integer) for each gap."""
    _check_columns(dataset)
    if not dataset.n_missing:
        return dataset
    cells = {}
    for l, col in enumerate(dataset.features):
        gaps = np.flatnonzero(dataset.missing[:, l])
        if not len(gaps):
            continue
        vals = dataset.values[l][~dataset.missing[:, l]].tolist()
        fill = _mode(vals) if col.kind.is_discrete else _mean(vals)
        cells.update({(int(i), l): fill for i in gaps})
    return dataset.replace_cells(cells)


def impute_knn(dataset: Dataset, k: int) -> Dataset:
    """k-nearest-neighbour imputation under the class-conditional distance.

    Columns missing in either record contribute nothing to that distance.
    Neighbours are the ``k`` closest other records (ties by record index);
    those observing the target column vote (mode) or are averaged (mean), with
    the global column statistic when none of them observes it.
    """
    if k < 1 or k >= dataset.m:
        raise DataError(f"k must satisfy 1 <= k < m={dataset.m}, got {k}")
    _check_columns(dataset)
    if not dataset.n_missing:
        return dataset
    ctx = IndexContext.build(dataset)
    filler = _Filler(dataset)
    cells = {}
    for i in np.flatnonzero(dataset.missing.any(axis=1)):
        i = int(i)
        others = np.delete(np.arange(dataset.m), i)
        d = ctx.distance_row(i)[others]
        nearest = others[np.argsort(d, kind="stable")[:k]]
        for l in np.flatnonzero(dataset.missing[i]):
            l = int(l)
            donors = filler.observed(nearest, l)
            if not len(donors):
                donors = filler.observed(np.arange(dataset.m), l)
            cells[i, l] = filler.stat(donors, l, i)[0]
    return dataset.replace_cells(cells)


@dataclass(frozen=True)
class ClassifierConfig:
    k: int = 10
    adt: adtree.ADTConfig = adtree.ADTConfig()
    knn_k: int = 5


@dataclass
class ComparisonReport:
    runs: list[tuple[float, int]]
    accuracies: dict[str, list[float]]
    wilcoxon: dict[str, metrics.WilcoxonResult]

    def to_text(self) -> str:
        methods = list(self.accuracies)
        lines = ["rate,seed," + ",".join(methods)]
        for r, (rate, seed) in enumerate(self.runs):
            lines.append(f"{rate!r},{seed}," + ",".join(repr(self.accuracies[m][r]) for m in methods))
        lines.append("")
        lines.append("baseline,rank_sum_plus,rank_sum_minus,n,p_value,exact")
        for name, w in self.wilcoxon.items():
            lines.append(f"{name},{w.w_plus!r},{w.w_minus!r},{w.n},{w.p_value!r},{w.exact}")
        return "\n".join(lines) + "\n"


def cv_accuracy(dataset: Dataset, cfg: ClassifierConfig, seed: int) -> float:
    pool = metrics.pooled_cv_scores(dataset, cfg.k, cfg.adt, seed)
    return float((pool.predictions == pool.labels).mean())


def compare_imputers(
    complete: Dataset,
    rates: Sequence[float],
    seeds: Sequence[int],
    cfg: ClassifierConfig = ClassifierConfig(),
) -> ComparisonReport:
    """Inject, impute with each method, score with k-fold ADT accuracy, test pairs.

    Every (rate, seed) combination is one matched pair; the Wilcoxon test
    compares the class-conditional method (``nm``) with each baseline.
    """
    if complete.n_missing:
        raise DataError("compare_imputers expects a complete dataset")
    stratified_kfold(complete, cfg.k, 0)  # fail early on impossible fold counts
    knn_k = min(cfg.knn_k, complete.m - 1)
    methods = {
        "nm": lambda d: impute(d)[0],
        "mean_mode": impute_mean_mode,
        "knn": lambda d: impute_knn(d, knn_k),
    }
    runs = [(float(r), int(s)) for r in rates for s in seeds]
    acc = {name: [] for name in methods}
    for rate, seed in runs:
        damaged = inject_missing(complete, rate, seed)
        for name, fn in methods.items():
            acc[name].append(cv_accuracy(fn(damaged), cfg, seed))
    tests = {
        name: metrics.wilcoxon_signed_rank(acc["nm"], acc[name])
        for name in methods
        if name != "nm"
    }
    return ComparisonReport(runs, acc, tests)
