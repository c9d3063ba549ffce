"""Alternating decision trees learned by confidence-rated boosting.

The tree is a root prediction value plus a list of splitter (decision) nodes.
Splitter ``t`` hangs under prediction node ``parent`` and owns the two new
prediction nodes ``2t + 1`` (condition true) and ``2t + 2`` (condition false).
A record's margin is the root value plus the branch value of every splitter
whose parent prediction node the record reaches.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import DataError, DegenerateError
from .tabular import ColumnKind, Dataset

FORMAT_TAG = "adtree\t1"
_TIE_RTOL = 1e-9


@dataclass(frozen=True)
class ADTConfig:
    iterations: int = 10
    epsilon: float = 1.0


@dataclass(frozen=True)
class Condition:
    """``column == value`` for discrete columns, ``column < value`` for reals."""

    column: str
    op: str
    value: object

    def __post_init__(self):
        if self.op not in ("eq", "lt"):
            raise ValueError(f"unknown condition operator {self.op!r}")
        if self.op == "lt" and not math.isfinite(self.value):
            raise ValueError("threshold must be finite")

    def holds(self, value) -> bool:
        if self.op == "lt":
            return value < self.value
        return value == self.value

    def mask(self, dataset: Dataset) -> np.ndarray:
        l = dataset.column_index(self.column)
        col = dataset.values[l]
        if self.op == "lt":
            return col < self.value
        return col == self.value

    def __str__(self) -> str:
        sym = "<" if self.op == "lt" else "="
        return f"{self.column} {sym} {self.value!r}"


@dataclass(frozen=True)
class Splitter:
    parent: int
    condition: Condition
    true_value: float
    false_value: float


@dataclass(frozen=True)
class ADTree:
    root: float
    splitters: tuple[Splitter, ...]
    classes: tuple[str, str]
    majority: int = 1
    # record count per class at training time, informational only
    class_counts: tuple[int, int] = field(default=(0, 0), compare=False)

    @property
    def iterations(self) -> int:
        return len(self.splitters)

    @property
    def prediction_values(self) -> list[float]:
        out = [self.root]
        for s in self.splitters:
            out += [s.true_value, s.false_value]
        return out

    def path(self, node: int) -> list[tuple[Condition, bool]]:
        """Conditions (with required truth value) leading to prediction node ``node``."""
        steps = []
        while node:
            t, side = divmod(node - 1, 2)
            s = self.splitters[t]
            steps.append((s.condition, side == 0))
            node = s.parent
        return steps[::-1]

    def describe(self) -> str:
        """Indented rule dump, one prediction/decision node per line."""
        children: dict[int, list[int]] = {}
        for t, s in enumerate(self.splitters):
            children.setdefault(s.parent, []).append(t)
        lines = [f": {self.root:+.4f}"]

        def visit(node: int, depth: int) -> None:
            for t in children.get(node, []):
                s = self.splitters[t]
                pad = "|  " * depth
                lines.append(f"{pad}({t + 1}) {s.condition}: {s.true_value:+.4f}")
                visit(2 * t + 1, depth + 1)
                lines.append(f"{pad}({t + 1}) not {s.condition}: {s.false_value:+.4f}")
                visit(2 * t + 2, depth + 1)

        visit(0, 0)
        return "\n".join(lines) + "\n"

    def dumps(self) -> str:
        """Pre-order text serialisation; floats are written with ``repr``."""
        children: dict[int, list[int]] = {}
        for t, s in enumerate(self.splitters):
            children.setdefault(s.parent, []).append(t)
        lines = [
            FORMAT_TAG,
            "classes\t" + json.dumps(list(self.classes)),
            f"majority\t{self.majority}",
            f"root\t{self.root!r}",
        ]

        def visit(node: int) -> None:
            for t in children.get(node, []):
                s = self.splitters[t]
                c = s.condition
                lines.append(
                    "\t".join([
                        "split", str(t), str(s.parent), json.dumps(c.column), c.op,
                        json.dumps(c.value), repr(s.true_value), repr(s.false_value),
                    ])
                )
                visit(2 * t + 1)
                visit(2 * t + 2)

        visit(0)
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "ADTree":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != FORMAT_TAG:
            raise DataError("not an adtree file")
        fields = {}
        nodes = {}
        for ln in lines[1:]:
            parts = ln.split("\t")
            if parts[0] == "split":
                t, parent = int(parts[1]), int(parts[2])
                cond = Condition(json.loads(parts[3]), parts[4], json.loads(parts[5]))
                nodes[t] = Splitter(parent, cond, float(parts[6]), float(parts[7]))
            else:
                fields[parts[0]] = parts[1]
        if sorted(nodes) != list(range(len(nodes))):
            raise DataError("adtree file has gaps in splitter numbering")
        return cls(
            root=float(fields["root"]),
            splitters=tuple(nodes[t] for t in range(len(nodes))),
            classes=tuple(json.loads(fields["classes"])),
            majority=int(fields["majority"]),
        )


def _half_log_ratio(wp: float, wn: float, eps: float) -> float:
    return 0.5 * math.log((wp + eps) / (wn + eps))


@dataclass
class _Candidates:
    """Admissible conditions for one column, in ascending value order."""

    column: int
    op: str
    values: list
    # real: sort order and prefix lengths; discrete: one-hot membership
    order: np.ndarray | None = None
    prefix: np.ndarray | None = None
    onehot: np.ndarray | None = None
    codes: np.ndarray | None = None


def _column_candidates(dataset: Dataset, l: int) -> _Candidates | None:
    col = dataset.values[l]
    if dataset.features[l].kind is ColumnKind.REAL:
        x = col.astype(float)
        order = np.argsort(x, kind="stable")
        xs = x[order]
        cut = np.flatnonzero(xs[1:] > xs[:-1])
        if not len(cut):
            return None
        lo, hi = xs[cut], xs[cut + 1]
        thr = lo + (hi - lo) / 2
        thr = np.where(thr <= lo, hi, thr)
        return _Candidates(l, "lt", [float(t) for t in thr], order=order, prefix=cut + 1)
    uniq, codes = np.unique(col, return_inverse=True)
    if len(uniq) < 2:
        return None
    onehot = np.zeros((len(col), len(uniq)))
    onehot[np.arange(len(col)), codes] = 1.0
    values = [str(u) if dataset.features[l].kind is ColumnKind.CATEGORICAL else float(u) for u in uniq]
    return _Candidates(l, "eq", values, onehot=onehot, codes=codes.ravel())


def _z_table(cand: _Candidates, WP: np.ndarray, WN: np.ndarray, w_out: np.ndarray) -> np.ndarray:
    """Z for every (precondition, candidate) pair of one column."""
    if cand.op == "lt":
        cp = np.cumsum(WP[:, cand.order], axis=1)[:, cand.prefix - 1]
        cn = np.cumsum(WN[:, cand.order], axis=1)[:, cand.prefix - 1]
    else:
        cp = WP @ cand.onehot
        cn = WN @ cand.onehot
    tp = WP.sum(axis=1, keepdims=True)
    tn = WN.sum(axis=1, keepdims=True)
    fp = np.maximum(tp - cp, 0.0)
    fn = np.maximum(tn - cn, 0.0)
    return 2.0 * (np.sqrt(cp * cn) + np.sqrt(fp * fn)) + w_out[:, None]


def train(dataset: Dataset, iterations: int = 10, epsilon: float = 1.0, seed: int = 0) -> ADTree:
    """Grow an ADT with ``iterations`` boosting rounds (see :func:`boost`)."""
    for tree, _ in boost(dataset, iterations, epsilon, seed):
        pass
    return tree


def boost(dataset: Dataset, iterations: int = 10, epsilon: float = 1.0, seed: int = 0):
    """Yield ``(tree, weights)`` after the root and after every boosting round.

    Each round picks the (precondition, condition) pair minimising
    ``Z = 2[sqrt(W+(c1&c2) W-(c1&c2)) + sqrt(W+(c1&~c2) W-(c1&~c2))] + W(~c1)``,
    attaches the two smoothed log-odds prediction values and reweights the
    records by ``exp(-y * r(x))``.  Ties in ``Z`` go to the lower column, then
    the lower threshold/value, then a seeded choice of precondition.
    """
    if iterations < 1:
        raise DataError("the number of boosting rounds must be positive")
    if epsilon <= 0:
        raise DataError("epsilon must be positive")
    if dataset.n_missing:
        raise DataError("ADT training needs a complete dataset; impute first")
    y = dataset.y.astype(float)
    n_pos = int((y > 0).sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("ADT training needs records from both classes")
    cands = [c for l in range(dataset.n_features) if (c := _column_candidates(dataset, l))]
    if not cands:
        raise DegenerateError("no admissible split: every feature column is constant")

    rng = np.random.default_rng(seed)
    pos, neg = y > 0, y < 0
    w = np.ones(len(y))
    root = _half_log_ratio(float(w[pos].sum()), float(w[neg].sum()), epsilon)
    w = w * np.exp(-y * root)

    majority = 1 if n_pos >= n_neg else -1
    pre = [np.ones(len(y), dtype=bool)]
    splitters = []
    yield ADTree(root, (), dataset.classes, majority, (n_neg, n_pos)), w
    for _ in range(iterations):
        P = np.array(pre, dtype=float)
        WP = P * (w * pos)
        WN = P * (w * neg)
        w_out = w.sum() - (WP.sum(axis=1) + WN.sum(axis=1))
        tables = [_z_table(c, WP, WN, w_out) for c in cands]
        z_min = min(float(t.min()) for t in tables)
        limit = z_min + _TIE_RTOL * max(abs(z_min), 1e-300)
        for cand, table in zip(cands, tables):
            hits = table <= limit
            if hits.any():
                j = int(np.flatnonzero(hits.any(axis=0))[0])
                tied = np.flatnonzero(hits[:, j])
                p = int(tied[0]) if len(tied) == 1 else int(rng.choice(tied))
                break
        if cand.op == "lt":
            c2 = dataset.values[cand.column].astype(float) < cand.values[j]
        else:
            c2 = cand.codes == j
        c1 = pre[p]
        t_mask, f_mask = c1 & c2, c1 & ~c2
        a = _half_log_ratio(float(w[t_mask & pos].sum()), float(w[t_mask & neg].sum()), epsilon)
        b = _half_log_ratio(float(w[f_mask & pos].sum()), float(w[f_mask & neg].sum()), epsilon)
        r = np.where(t_mask, a, 0.0) + np.where(f_mask, b, 0.0)
        w = w * np.exp(-y * r)
        cond = Condition(dataset.features[cand.column].name, cand.op, cand.values[j])
        splitters.append(Splitter(p, cond, a, b))
        pre += [t_mask, f_mask]
        yield ADTree(root, tuple(splitters), dataset.classes, majority, (n_neg, n_pos)), w


def margins(tree: ADTree, dataset: Dataset) -> np.ndarray:
    """Margins of every record of ``dataset`` (vectorised :func:`margin`)."""
    names = {s.condition.column for s in tree.splitters}
    for name in names:
        if dataset.missing[:, dataset.column_index(name)].any():
            raise DataError(f"column {name!r} has missing cells; impute before scoring")
    out = np.full(dataset.m, tree.root)
    reach = [np.ones(dataset.m, dtype=bool)]
    for s in tree.splitters:
        c2 = s.condition.mask(dataset)
        t_mask = reach[s.parent] & c2
        f_mask = reach[s.parent] & ~c2
        out = out + (np.where(t_mask, s.true_value, 0.0) + np.where(f_mask, s.false_value, 0.0))
        reach += [t_mask, f_mask]
    return out


def margin(tree: ADTree, record: Mapping[str, object]) -> float:
    """Sum of the root and every reached branch value for one record."""
    total = tree.root
    reached = [True]
    for s in tree.splitters:
        here = reached[s.parent]
        if here:
            v = record.get(s.condition.column)
            if v is None:
                raise DataError(f"record is missing {s.condition.column!r}")
            ok = s.condition.holds(v)
            total = total + ((s.true_value if ok else 0.0) + (0.0 if ok else s.false_value))
            reached += [ok, not ok]
        else:
            reached += [False, False]
    return total


def probability(m: float | np.ndarray):
    """Logistic map ``1 / (1 + exp(-2 m))`` of a margin."""
    m = np.asarray(m, dtype=float)
    e = np.exp(-2.0 * np.abs(m))
    p = np.where(m >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return float(p) if p.ndim == 0 else p


def classify_margin(tree: ADTree, m: float | np.ndarray):
    """+1/-1 from margins; a zero margin goes to the training majority class."""
    m = np.asarray(m, dtype=float)
    out = np.where(m > 0, 1, np.where(m < 0, -1, tree.majority))
    return int(out) if out.ndim == 0 else out


def classify(tree: ADTree, record: Mapping[str, object]) -> str:
    sign = classify_margin(tree, margin(tree, record))
    return tree.classes[1] if sign > 0 else tree.classes[0]


def predict(tree: ADTree, dataset: Dataset) -> np.ndarray:
    """+1/-1 predictions for every record."""
    return classify_margin(tree, margins(tree, dataset))
