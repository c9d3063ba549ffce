"""Typed tabular data model: schema-driven CSV loading, folds and missingness.

A :class:`Dataset` holds ``m`` records of ``n - 1`` feature columns plus a
trailing binary decision column.  Feature values are kept column-wise as
numpy arrays together with a boolean missing mask, so downstream modules can
vectorise over records.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError

MISSING_TOKEN = "?"


class ColumnKind(str, Enum):
    CATEGORICAL = "categorical"
    INTEGER = "integer"
    REAL = "real"
    DECISION = "decision"

    @property
    def is_discrete(self) -> bool:
        """Categorical and integer columns are compared by value frequency."""
        return self in (ColumnKind.CATEGORICAL, ColumnKind.INTEGER)


@dataclass(frozen=True)
class Column:
    name: str
    kind: ColumnKind


@dataclass(frozen=True)
class Schema:
    """Ordered column definitions; the decision column is always last."""

    columns: tuple[Column, ...]
    positive_label: str | None = None

    def __post_init__(self):
        if len(self.columns) < 2:
            raise DataError("schema needs at least one feature and the decision column")
        kinds = [c.kind for c in self.columns]
        if kinds.count(ColumnKind.DECISION) != 1 or kinds[-1] is not ColumnKind.DECISION:
            raise DataError("exactly one decision column is required and it must be last")
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise DataError(f"duplicate column names in schema: {names}")

    @property
    def features(self) -> tuple[Column, ...]:
        return self.columns[:-1]

    @property
    def decision(self) -> Column:
        return self.columns[-1]

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @classmethod
    def parse(cls, text: str) -> "Schema":
        """Parse ``name:kind`` lines; the decision line may add ``:positive``.

        Blank lines and ``#`` comments are ignored.
        """
        columns = []
        positive = None
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(":", 2)]
            if len(parts) < 2:
                raise DataError(f"schema line {lineno}: expected '<name>:<kind>', got {raw!r}")
            try:
                kind = ColumnKind(parts[1])
            except ValueError:
                raise DataError(f"schema line {lineno}: unknown column kind {parts[1]!r}") from None
            if len(parts) == 3:
                if kind is not ColumnKind.DECISION:
                    raise DataError(f"schema line {lineno}: only the decision column takes a label")
                positive = parts[2]
            columns.append(Column(parts[0], kind))
        return cls(tuple(columns), positive)

    def dumps(self) -> str:
        lines = []
        for col in self.columns:
            line = f"{col.name}:{col.kind.value}"
            if col.kind is ColumnKind.DECISION and self.positive_label is not None:
                line += f":{self.positive_label}"
            lines.append(line)
        return "\n".join(lines) + "\n"


def _empty_column(kind: ColumnKind, m: int) -> np.ndarray:
    if kind is ColumnKind.CATEGORICAL:
        return np.full(m, None, dtype=object)
    return np.full(m, np.nan, dtype=float)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable table of records.

    ``values[l]`` is the l-th feature column: an object array of ``str`` for
    categorical columns, a float array otherwise (integers are stored exactly).
    ``missing[i, l]`` marks unobserved cells; their entries in ``values`` are
    ``None``/``nan`` and must not be read.  ``labels`` holds the raw decision
    labels and ``classes`` the ``(negative, positive)`` label pair.
    """

    schema: Schema
    values: tuple[np.ndarray, ...]
    missing: np.ndarray
    labels: np.ndarray
    classes: tuple[str, str]

    @property
    def m(self) -> int:
        return len(self.labels)

    @property
    def n(self) -> int:
        return len(self.schema.columns)

    @property
    def n_features(self) -> int:
        return len(self.values)

    @property
    def features(self) -> tuple[Column, ...]:
        return self.schema.features

    @property
    def y(self) -> np.ndarray:
        """Decision labels mapped to +1 (positive) / -1 (negative)."""
        return np.where(self.labels == self.classes[1], 1, -1)

    @property
    def n_missing(self) -> int:
        return int(self.missing.sum())

    def column_index(self, name: str) -> int:
        for l, col in enumerate(self.features):
            if col.name == name:
                return l
        raise DataError(f"no feature column named {name!r}")

    def cell(self, i: int, l: int):
        """Python value of a feature cell, or ``None`` when missing."""
        if self.missing[i, l]:
            return None
        v = self.values[l][i]
        kind = self.features[l].kind
        if kind is ColumnKind.INTEGER:
            return int(v)
        if kind is ColumnKind.REAL:
            return float(v)
        return v

    def row(self, i: int) -> list:
        return [self.cell(i, l) for l in range(self.n_features)] + [self.labels[i]]

    def take(self, indices: Sequence[int] | np.ndarray) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(
            self.schema,
            tuple(v[idx].copy() for v in self.values),
            self.missing[idx].copy(),
            self.labels[idx].copy(),
            self.classes,
        )

    def project(self, columns: Iterable[int]) -> "Dataset":
        """Keep the given feature columns (in ascending order) plus the decision."""
        keep = sorted(set(int(c) for c in columns))
        if not keep:
            raise DataError("projection must keep at least one feature column")
        schema = Schema(
            tuple(self.features[l] for l in keep) + (self.schema.decision,),
            self.schema.positive_label,
        )
        return Dataset(
            schema,
            tuple(self.values[l] for l in keep),
            self.missing[:, keep].copy(),
            self.labels,
            self.classes,
        )

    def replace_cells(self, cells: dict[tuple[int, int], object]) -> "Dataset":
        """Return a copy with the given ``(i, l) -> value`` cells filled in."""
        values = [v.copy() for v in self.values]
        missing = self.missing.copy()
        for (i, l), v in cells.items():
            values[l][i] = v
            missing[i, l] = False
        return Dataset(self.schema, tuple(values), missing, self.labels, self.classes)

    def with_missing(self, mask: np.ndarray) -> "Dataset":
        """Copy where every ``True`` cell of ``mask`` becomes missing."""
        values = [v.copy() for v in self.values]
        missing = self.missing | mask
        for l, kind in enumerate(c.kind for c in self.features):
            values[l][mask[:, l]] = None if kind is ColumnKind.CATEGORICAL else np.nan
        return Dataset(self.schema, tuple(values), missing, self.labels, self.classes)

    def equals(self, other: "Dataset") -> bool:
        if self.schema != other.schema or self.classes != other.classes:
            return False
        if self.m != other.m or not np.array_equal(self.missing, other.missing):
            return False
        if not np.array_equal(self.labels, other.labels):
            return False
        obs = ~self.missing
        for l in range(self.n_features):
            a, b = self.values[l][obs[:, l]], other.values[l][obs[:, l]]
            if not np.array_equal(a, b):
                return False
        return True

    def to_csv(self, missing_token: str = MISSING_TOKEN) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.schema.names)
        for i in range(self.m):
            writer.writerow(
                [missing_token if v is None else _format_cell(v) for v in self.row(i)]
            )
        return buf.getvalue()


def _format_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_cell(token: str, kind: ColumnKind, where: str):
    if kind is ColumnKind.CATEGORICAL:
        return token
    if kind is ColumnKind.INTEGER:
        try:
            return int(token)
        except ValueError:
            raise DataError(f"{where}: {token!r} is not an integer") from None
    try:
        v = float(token)
    except ValueError:
        raise DataError(f"{where}: {token!r} is not a real number") from None
    if not math.isfinite(v):
        raise DataError(f"{where}: non-finite value {token!r}")
    return v


def _resolve_classes(labels: Sequence[str], positive: str | None) -> tuple[str, str]:
    distinct = sorted(set(labels))
    if positive is not None:
        others = [c for c in distinct if c != positive]
        if len(others) > 1:
            raise DataError(f"decision column must be binary, found labels {distinct}")
        return (others[0] if others else ""), positive
    if len(distinct) > 2:
        raise DataError(f"decision column must be binary, found labels {distinct}")
    if len(distinct) == 1:
        raise DataError(
            f"decision column holds a single label {distinct[0]!r}; "
            "name the positive label in the schema"
        )
    if not distinct:
        return "", ""
    return distinct[0], distinct[1]


def from_rows(schema: Schema, rows: Sequence[Sequence], classes: tuple[str, str] | None = None) -> Dataset:
    """Build a Dataset from parsed Python rows (``None`` marks a missing cell)."""
    feats = schema.features
    m = len(rows)
    values = [_empty_column(c.kind, m) for c in feats]
    missing = np.zeros((m, len(feats)), dtype=bool)
    labels = np.empty(m, dtype=object)
    for i, row in enumerate(rows):
        if len(row) != len(schema.columns):
            raise DataError(f"row {i + 1}: expected {len(schema.columns)} cells, got {len(row)}")
        for l, col in enumerate(feats):
            v = row[l]
            if v is None:
                missing[i, l] = True
            else:
                values[l][i] = v
        if row[-1] is None:
            raise DataError(f"row {i + 1}: decision value may not be missing")
        labels[i] = str(row[-1])
    if classes is None:
        classes = _resolve_classes(list(labels), schema.positive_label)
    return Dataset(schema, tuple(values), missing, labels, classes)


def load_dataset(csv_text: str, schema: Schema, missing_token: str = MISSING_TOKEN) -> Dataset:
    """Parse CSV text against ``schema``; ``missing_token`` cells become missing."""
    reader = csv.reader(io.StringIO(csv_text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError("CSV input is empty (header row required)") from None
    if header != schema.names:
        raise DataError(f"CSV header {header} does not match schema columns {schema.names}")
    rows = []
    for lineno, raw in enumerate(reader, 2):
        if not raw or all(not t.strip() for t in raw):
            continue
        if len(raw) != len(schema.columns):
            raise DataError(f"line {lineno}: expected {len(schema.columns)} cells, got {len(raw)}")
        row = []
        for col, token in zip(schema.columns, raw):
            token = token.strip()
            where = f"line {lineno}, column {col.name!r}"
            if token == missing_token:
                if col.kind is ColumnKind.DECISION:
                    raise DataError(f"{where}: decision value may not be missing")
                row.append(None)
            elif col.kind is ColumnKind.DECISION:
                row.append(token)
            else:
                row.append(_parse_cell(token, col.kind, where))
        rows.append(row)
    return from_rows(schema, rows)


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    assignment: np.ndarray

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)

    def splits(self):
        for f in range(self.k):
            yield self.train_indices(f), self.test_indices(f)


def stratified_kfold(dataset: Dataset, k: int, seed: int) -> FoldAssignment:
    """Shuffle each class by ``seed`` and deal its records round-robin to folds.

    The dealing position carries over from one class to the next so fold sizes
    also stay within one record of each other.
    """
    if k < 2:
        raise DataError(f"k must be at least 2, got {k}")
    rng = np.random.default_rng(seed)
    assignment = np.full(dataset.m, -1, dtype=int)
    start = 0
    for label in sorted(set(dataset.labels)):
        members = np.flatnonzero(dataset.labels == label)
        if len(members) < k:
            raise DataError(
                f"class {label!r} has {len(members)} records, fewer than k={k} folds"
            )
        members = rng.permutation(members)
        assignment[members] = (start + np.arange(len(members))) % k
        start = (start + len(members)) % k
    return FoldAssignment(k, assignment)


def inject_missing(dataset: Dataset, rate: float, seed: int) -> Dataset:
    """Blank ``round(rate * m * (n - 1))`` uniformly chosen feature cells."""
    if not 0.0 <= rate <= 1.0:
        raise DataError(f"missing rate must lie in [0, 1], got {rate}")
    if dataset.n_missing:
        raise DataError("inject_missing expects a complete dataset")
    total = dataset.m * dataset.n_features
    count = int(math.floor(rate * total + 0.5))
    rng = np.random.default_rng(seed)
    chosen = rng.choice(total, size=count, replace=False)
    mask = np.zeros(total, dtype=bool)
    mask[chosen] = True
    return dataset.with_missing(mask.reshape(dataset.m, dataset.n_features))
