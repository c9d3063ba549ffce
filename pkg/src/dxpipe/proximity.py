"""Class-conditional proximity between mixed-type records.

For a feature column ``l`` and two records ``i != k`` the index compares the
two cells relative to the decision classes of the records:

* same class, discrete column: ``min(a/b, b/a)`` where ``a`` and ``b`` count
  how often each record's value occurs in that class;
* same class, real column: ``min(x_i/mu, x_k/mu)`` with ``mu`` the class mean;
* different classes, discrete column: ``max(a/b, b/a)`` where each count is
  taken within the record's own class;
* different classes, real column: ``max(x_i/lam, x_k/lam)`` with ``lam`` the
  smaller of the two class means.

A column where either record is missing contributes 0.  The record distance
is the Euclidean norm of the per-column indices.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError, DegenerateError
from .tabular import Dataset


@dataclass(frozen=True, eq=False)
class IndexContext:
    """Per-(class, column) statistics precomputed once per dataset.

    ``own_count[i, l]`` is how many records of ``i``'s class share its value in
    column ``l`` (0 when missing); ``class_mean[c, l]`` is the mean of the
    observed cells of real column ``l`` in class ``c`` (``nan`` if none).
    """

    dataset: Dataset
    class_code: np.ndarray
    discrete: np.ndarray
    own_count: np.ndarray
    class_mean: np.ndarray
    real_values: np.ndarray

    @classmethod
    def build(cls, dataset: Dataset) -> "IndexContext":
        m, nf = dataset.m, dataset.n_features
        code = (dataset.y > 0).astype(int)
        discrete = np.array([c.kind.is_discrete for c in dataset.features], dtype=bool)
        own = np.zeros((m, nf), dtype=float)
        means = np.full((2, nf), np.nan)
        reals = np.full((m, nf), np.nan)
        for l in range(nf):
            obs = ~dataset.missing[:, l]
            col = dataset.values[l]
            for c in (0, 1):
                rows = np.flatnonzero(obs & (code == c))
                if not len(rows):
                    continue
                if discrete[l]:
                    counts = Counter(col[rows].tolist())
                    own[rows, l] = [counts[v] for v in col[rows].tolist()]
                else:
                    means[c, l] = math.fsum(col[rows].tolist()) / len(rows)
            if not discrete[l]:
                reals[:, l] = col
        return cls(dataset, code, discrete, own, means, reals)

    def column_row(self, i: int, l: int) -> np.ndarray:
        """Index of record ``i`` against every record for column ``l``."""
        ds = self.dataset
        out = np.zeros(ds.m)
        if ds.missing[i, l]:
            return out
        obs = ~ds.missing[:, l]
        obs[i] = False
        same = self.class_code == self.class_code[i]
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.discrete[l]:
                a = self.own_count[i, l]
                b = self.own_count[:, l]
                r1, r2 = a / b, b / a
                vals = np.where(same, np.minimum(r1, r2), np.maximum(r1, r2))
            else:
                ci = self.class_code[i]
                mu = self.class_mean[ci, l]
                lam = min(mu, self.class_mean[1 - ci, l])
                if (mu == 0 and np.any(obs & same)) or (lam == 0 and np.any(obs & ~same)):
                    raise DegenerateError(
                        f"class mean of column {ds.features[l].name!r} is zero; ratio index undefined"
                    )
                x = self.real_values[:, l]
                xi = x[i]
                vals = np.where(
                    same,
                    np.minimum(xi / mu, x / mu),
                    np.maximum(xi / lam, x / lam),
                )
        np.copyto(out, vals, where=obs)
        return out

    def distance_row(self, i: int) -> np.ndarray:
        """``d_ij`` for every ``j`` (``d_ii = 0``)."""
        acc = np.zeros(self.dataset.m)
        for l in range(self.dataset.n_features):
            if self.dataset.missing[i, l]:
                continue
            idx = self.column_row(i, l)
            acc += idx * idx
        return np.sqrt(acc)


def _check_column(dataset: Dataset, l: int) -> None:
    if l == dataset.n_features:
        raise DataError("the decision column has no proximity index")
    if not 0 <= l < dataset.n_features:
        raise DataError(f"column index {l} out of range")


def column_index(dataset: Dataset, i: int, k: int, l: int, ctx: IndexContext | None = None) -> float:
    _check_column(dataset, l)
    ctx = ctx or IndexContext.build(dataset)
    if not dataset.missing[i, l] and not dataset.missing[k, l] and i != k:
        ci = ctx.class_code[i]
        ck = ctx.class_code[k]
        if not ctx.discrete[l] and (
            math.isnan(ctx.class_mean[ci, l]) or math.isnan(ctx.class_mean[ck, l])
        ):
            raise DataError(f"no observed cells to average in column {l}")
    return float(ctx.column_row(i, l)[k])


def record_distance(dataset: Dataset, i: int, k: int, ctx: IndexContext | None = None) -> float:
    ctx = ctx or IndexContext.build(dataset)
    return float(ctx.distance_row(i)[k])


def distance_matrix(dataset: Dataset, ctx: IndexContext | None = None) -> np.ndarray:
    ctx = ctx or IndexContext.build(dataset)
    return np.vstack([ctx.distance_row(i) for i in range(dataset.m)]) if dataset.m else np.zeros((0, 0))


def z_scores(distances: Sequence[float]) -> np.ndarray:
    """Standardise with the sample standard deviation (divisor ``len - 1``).

    A single distance or zero spread yields all-zero scores.
    """
    d = np.asarray(distances, dtype=float)
    if d.size == 0:
        raise DataError("z_scores needs at least one distance")
    if d.size == 1:
        return np.zeros(1)
    mean = math.fsum(d.tolist()) / d.size
    dev = d - mean
    s = math.sqrt(math.fsum((dev * dev).tolist()) / (d.size - 1))
    if s == 0:
        return np.zeros(d.size)
    return dev / s


@dataclass(frozen=True)
class DistanceRow:
    source: int
    others: np.ndarray
    distances: np.ndarray
    z: np.ndarray
    mean: float

    @property
    def neighbors(self) -> np.ndarray:
        """Records whose distance is at or below the mean (``z <= 0``)."""
        return self.others[self.z <= 0]


def distance_row(dataset: Dataset, i: int, ctx: IndexContext | None = None) -> DistanceRow:
    ctx = ctx or IndexContext.build(dataset)
    full = ctx.distance_row(i)
    others = np.delete(np.arange(dataset.m), i)
    d = full[others]
    mean = math.fsum(d.tolist()) / len(d) if len(d) else 0.0
    z = z_scores(d) if len(d) else np.zeros(0)
    return DistanceRow(i, others, d, z, mean)


def dump_distance_matrix(dataset: Dataset) -> str:
    """Long-format ``row,col,distance`` CSV of the full matrix."""
    dm = distance_matrix(dataset)
    lines = ["row,col,distance"]
    for i in range(dataset.m):
        for k in range(dataset.m):
            lines.append(f"{i},{k},{float(dm[i, k])!r}")
    return "\n".join(lines) + "\n"
