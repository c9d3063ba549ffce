"""Evaluation: confusion counts, pooled CV scores, ROC/AUC, Wilcoxon, OLS."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import adtree
from .errors import DataError, DegenerateError
from .tabular import Dataset, stratified_kfold


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(labels: Sequence, predictions: Sequence, positive=1) -> Confusion:
    labels = np.asarray(labels)
    predictions = np.asarray(predictions)
    if labels.shape != predictions.shape or labels.size == 0:
        raise DataError("labels and predictions must be non-empty and of equal length")
    actual = labels == positive
    pred = predictions == positive
    return Confusion(
        int((actual & pred).sum()),
        int((~actual & pred).sum()),
        int((~actual & ~pred).sum()),
        int((actual & ~pred).sum()),
    )


def basic_rates(c: Confusion) -> tuple[float, float, float]:
    """(sensitivity, specificity, accuracy)."""
    if c.tp + c.fn == 0:
        raise DegenerateError("sensitivity undefined: no positive records")
    if c.tn + c.fp == 0:
        raise DegenerateError("specificity undefined: no negative records")
    return c.tp / (c.tp + c.fn), c.tn / (c.tn + c.fp), (c.tp + c.tn) / c.total


@dataclass(frozen=True)
class ScorePool:
    """Held-out scores pooled over all folds, indexed by record."""

    probabilities: np.ndarray
    labels: np.ndarray
    predictions: np.ndarray
    folds: np.ndarray

    @property
    def size(self) -> int:
        return len(self.labels)

    def fold_accuracies(self) -> list[float]:
        out = []
        for f in range(int(self.folds.max()) + 1 if self.size else 0):
            sel = self.folds == f
            out.append(float((self.predictions[sel] == self.labels[sel]).mean()))
        return out


def pooled_cv_scores(
    dataset: Dataset,
    k: int,
    cfg: adtree.ADTConfig = adtree.ADTConfig(),
    seed: int = 0,
    folds=None,
) -> ScorePool:
    """Train on k-1 folds, score the held-out fold, pool every record's score."""
    folds = folds or stratified_kfold(dataset, k, seed)
    probs = np.zeros(dataset.m)
    preds = np.zeros(dataset.m, dtype=int)
    for train_idx, test_idx in folds.splits():
        tree = adtree.train(dataset.take(train_idx), cfg.iterations, cfg.epsilon, seed)
        held = dataset.take(test_idx)
        mg = adtree.margins(tree, held)
        probs[test_idx] = adtree.probability(mg)
        preds[test_idx] = adtree.classify_margin(tree, mg)
    return ScorePool(probs, dataset.y.copy(), preds, folds.assignment.copy())


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    fpr: float
    tpr: float
    counts: Confusion
    computed: bool = True


@dataclass(frozen=True)
class RocCurve:
    points: tuple[RocPoint, ...]

    @property
    def fpr(self) -> np.ndarray:
        return np.array([p.fpr for p in self.points])

    @property
    def tpr(self) -> np.ndarray:
        return np.array([p.tpr for p in self.points])

    def to_csv(self) -> str:
        lines = ["threshold,fpr,tpr"]
        for p in self.points:
            lines.append(f"{p.threshold!r},{p.fpr!r},{p.tpr!r}")
        return "\n".join(lines) + "\n"


def roc_curve(probabilities: Sequence[float], labels: Sequence[int], thresholds: Sequence[float]) -> RocCurve:
    """ROC points for explicit thresholds (positive iff score >= threshold).

    The (0, 0) and (1, 1) end points are always added.
    """
    p = np.asarray(probabilities, dtype=float)
    actual = np.asarray(labels) > 0
    n_pos, n_neg = int(actual.sum()), int((~actual).sum())
    if n_pos == 0 or n_neg == 0:
        raise DataError("ROC needs both classes in the pool")
    pts = [
        RocPoint(math.inf, 0.0, 0.0, Confusion(0, 0, n_neg, n_pos), computed=False),
        RocPoint(-math.inf, 1.0, 1.0, Confusion(n_pos, n_neg, 0, 0), computed=False),
    ]
    for t in thresholds:
        c = confusion(actual, p >= t, positive=True)
        pts.append(RocPoint(float(t), c.fp / n_neg, c.tp / n_pos, c))
    pts.sort(key=lambda q: (q.fpr, q.tpr, -q.threshold))
    return RocCurve(tuple(pts))


def quantile_thresholds(probabilities: Sequence[float], quantile_count: int = 4) -> np.ndarray:
    if quantile_count < 1:
        raise DataError("quantile_count must be positive")
    return np.quantile(np.asarray(probabilities, dtype=float), np.linspace(0.0, 1.0, quantile_count + 1))


def roc_points(pool: ScorePool, quantile_count: int = 4) -> RocCurve:
    """ROC at the quantile boundaries (min, Q1, median, Q3, max by default) of the pooled scores."""
    return roc_curve(pool.probabilities, pool.labels, quantile_thresholds(pool.probabilities, quantile_count))


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the FPR-sorted points."""
    x, y = curve.fpr, curve.tpr
    return float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1]) / 2.0))


@dataclass(frozen=True)
class OperatingPoint:
    threshold: float
    sensitivity: float
    specificity: float
    accuracy: float
    distance: float
    fpr: float
    tpr: float


def operating_point(curve: RocCurve) -> OperatingPoint:
    """Computed ROC point closest to (0, 1); ties go to the larger threshold."""
    cands = [p for p in curve.points if p.computed]
    if not cands:
        raise DataError("curve has no computed points")
    best = min(cands, key=lambda p: (math.hypot(p.fpr, 1.0 - p.tpr), -p.threshold))
    c = best.counts
    return OperatingPoint(
        threshold=best.threshold,
        sensitivity=best.tpr,
        specificity=1.0 - best.fpr,
        accuracy=(c.tp + c.tn) / c.total,
        distance=math.hypot(best.fpr, 1.0 - best.tpr),
        fpr=best.fpr,
        tpr=best.tpr,
    )


@dataclass(frozen=True)
class WilcoxonResult:
    w_plus: float
    w_minus: float
    p_value: float
    n: int
    exact: bool


def _average_ranks(a: np.ndarray) -> np.ndarray:
    order = np.argsort(a, kind="stable")
    ranks = np.empty(len(a))
    sorted_a = a[order]
    i = 0
    while i < len(a):
        j = i
        while j + 1 < len(a) and sorted_a[j + 1] == sorted_a[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


EXACT_LIMIT = 20


def wilcoxon_signed_rank(x: Sequence[float], y: Sequence[float]) -> WilcoxonResult:
    """Two-sided Wilcoxon matched-pairs signed-rank test on ``x - y``.

    Zero differences are dropped and tied magnitudes get average ranks.  For up
    to 20 non-zero differences the p-value is exact: the null distribution of
    ``W+`` over all ``2**n`` sign assignments is built by counting subset sums
    of the (doubled, hence integer) ranks.  Beyond that a tie-corrected normal
    approximation is used.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size == 0:
        raise DataError("wilcoxon needs two non-empty samples of equal length")
    d = x - y
    d = d[d != 0]
    n = len(d)
    if n == 0:
        return WilcoxonResult(0.0, 0.0, 1.0, 0, True)
    ranks = _average_ranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    if n <= EXACT_LIMIT:
        r2 = np.rint(2 * ranks).astype(np.int64)
        total = int(r2.sum())
        counts = np.zeros(total + 1, dtype=np.int64)
        counts[0] = 1
        for r in r2:
            counts[r:] = counts[r:] + counts[: total + 1 - r].copy()
        obs = int(r2[d > 0].sum())
        dev = abs(2 * obs - total)
        sums = np.arange(total + 1)
        extreme = np.abs(2 * sums - total) >= dev
        p = float(counts[extreme].sum()) / float(2**n)
        return WilcoxonResult(w_plus, w_minus, min(p, 1.0), n, True)
    mean = n * (n + 1) / 4.0
    _, tie_sizes = np.unique(np.abs(d), return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_sizes**3 - tie_sizes)) / 48.0
    z = (w_plus - mean) / math.sqrt(var)
    return WilcoxonResult(w_plus, w_minus, math.erfc(abs(z) / math.sqrt(2.0)), n, False)


def linear_fit(x: Sequence[float], y: Sequence[float]) -> tuple[float, float, float]:
    """Ordinary least squares ``y = slope * x + intercept`` and its r^2.

    Constant ``y`` gives slope 0 and r^2 defined as 0.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise DataError("linear_fit needs at least two paired points")
    if np.all(x == x[0]):
        raise DegenerateError("linear_fit needs at least two distinct x values")
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    sxy = float(np.sum((x - xm) * (y - ym)))
    syy = float(np.sum((y - ym) ** 2))
    slope = sxy / sxx
    intercept = float(ym - slope * xm)
    r2 = 0.0 if syy == 0 else min(1.0, max(0.0, sxy * sxy / (sxx * syy)))
    return slope, intercept, r2


@dataclass
class EvalReport:
    n_records: int
    k: int
    accuracy: float
    sensitivity: float
    specificity: float
    auc: float
    operating_point: dict
    fold_accuracies: list[float]
    thresholds: list[float]
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(d.pop("extra"))
        return d


def evaluate_pool(pool: ScorePool, k: int, quantile_count: int = 4) -> tuple[EvalReport, RocCurve]:
    """Summarise a pool: classifier-rule accuracy/SE/SP, ROC, AUC, operating point."""
    se, sp, acc = basic_rates(confusion(pool.labels, pool.predictions))
    thresholds = quantile_thresholds(pool.probabilities, quantile_count)
    curve = roc_curve(pool.probabilities, pool.labels, thresholds)
    op = operating_point(curve)
    report = EvalReport(
        n_records=pool.size,
        k=k,
        accuracy=acc,
        sensitivity=se,
        specificity=sp,
        auc=auc(curve),
        operating_point=asdict(op),
        fold_accuracies=pool.fold_accuracies(),
        thresholds=[float(t) for t in thresholds],
    )
    return report, curve
