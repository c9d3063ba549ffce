"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Every criterion also returns a deterministic text report (timings excluded)
so the determinism criterion can rerun them and compare bytes.
"""

import json
import tempfile
import time
from pathlib import Path

import numpy as np
import oracles
import pytest
from conftest import WORKED_CSV, WORKED_SCHEMA, random_rows, rows_to_dataset

from dxpipe import adtree, cli, synthetic
from dxpipe.imputation import impute
from dxpipe.metrics import Confusion, RocCurve, RocPoint, auc, roc_curve, wilcoxon_signed_rank
from dxpipe.pipeline import BenchReport
from dxpipe.proximity import IndexContext, column_index, z_scores
from dxpipe.tabular import Schema, inject_missing, load_dataset

BENCH_SIZES = [1000, 2500, 5000, 7500, 10000]
_reports: dict[int, str] = {}


def _announce(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")


def criterion_1():
    t0 = time.perf_counter()
    d = load_dataset(WORKED_CSV, WORKED_SCHEMA)
    ctx = IndexContext.build(d)
    i12 = column_index(d, 0, 1, 1, ctx)
    i13 = column_index(d, 0, 2, 1, ctx)
    mean = float(ctx.class_mean[1, 1])
    filled, _ = impute(d)
    elapsed = time.perf_counter() - t0
    ok = (
        abs(i12 - 0.86) <= 0.005
        and abs(i13 - 0.99) <= 0.005
        and abs(mean - 12.17) <= 0.005
        and filled.cell(0, 0) == "yes"
        and elapsed < 1.0
    )
    report = f"I12={i12!r} I13={i13!r} mean={mean!r} fill={filled.cell(0, 0)!r}"
    return ok, report, f"{report} ({elapsed:.3f} s)"


def criterion_2():
    z = z_scores([0.0, 0.0, 0.93])
    ok = bool(np.all(np.abs(z - np.array([-0.577, -0.577, 1.155])) <= 0.001))
    report = "z=" + ",".join(repr(float(v)) for v in z)
    return ok, report, report


def criterion_3():
    diffs = np.arange(1, 11, dtype=float) / 100
    r = wilcoxon_signed_rank(0.5 + diffs, np.full(10, 0.5))
    ok = (r.w_plus, r.w_minus) == (55.0, 0.0) and abs(r.p_value - 0.00195) <= 0.0005
    report = f"W+={r.w_plus!r} W-={r.w_minus!r} p={r.p_value!r} exact={r.exact}"
    return ok, report, report


def criterion_4():
    t0 = time.perf_counter()
    mismatches, lines = 0, []
    for seed in range(200):
        rows, kinds = random_rows(np.random.default_rng(seed), max_m=8, max_features=4, max_missing=3)
        d = rows_to_dataset(rows, kinds)
        filled = impute(d)[0]
        got = [filled.row(i) for i in range(d.m)]
        want = oracles.impute(rows, kinds)
        mismatches += got != want
        lines.append(repr(got))
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 30.0
    return ok, "\n".join(lines), f"{200 - mismatches}/200 datasets identical to oracle ({elapsed:.2f} s)"


def _separable():
    schema = Schema.parse("x:real\ny:decision:p\n")
    return load_dataset("x,y\n2,p\n3,p\n7,n\n8,n\n", schema)


def criterion_5():
    parts, ok = [], True
    data = synthetic.make_dataset(120, 5, seed=7)
    for T in (1, 5, 10):
        tree = adtree.train(data, T, 1.0, 0)
        ok &= tree.iterations == T and len(tree.prediction_values) == 2 * T + 1
        parts.append(tree.dumps())
    ms = np.linspace(-30, 30, 2001)
    worst = float(np.max(np.abs(adtree.probability(ms) + adtree.probability(-ms) - 1.0)))
    ok &= worst < 1e-12
    sep = _separable()
    acc = float((adtree.predict(adtree.train(sep, 1), sep) == sep.y).mean())
    ok &= acc == 1.0
    parts.append(f"complement={worst!r} separable_accuracy={acc!r}")
    return ok, "\n".join(parts), f"node counts ok for T=1,5,10; max |p(m)+p(-m)-1|={worst:.1e}; separable acc={acc}"


def _xy_curve(xy):
    return RocCurve(tuple(RocPoint(float(-i), x, y, Confusion(0, 0, 0, 0)) for i, (x, y) in enumerate(xy)))


def criterion_6():
    ok = True
    a_diag = auc(_xy_curve([(0.0, 0.0), (1.0, 1.0)]))
    a_perfect = auc(_xy_curve([(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)]))
    ok &= a_diag == 0.5 and a_perfect == 1.0
    rng = np.random.default_rng(2024)
    sums = []
    for _ in range(50):
        n = int(rng.integers(1, 30))
        x = rng.integers(-5, 6, n).astype(float)
        y = rng.integers(-5, 6, n).astype(float)
        r = wilcoxon_signed_rank(x, y)
        ok &= r.w_plus + r.w_minus == r.n * (r.n + 1) / 2
        sums.append(f"{r.w_plus!r}/{r.w_minus!r}")
    pools = 0
    while pools < 50:
        n = int(rng.integers(2, 13))
        labels = rng.choice([-1, 1], n).tolist()
        if len(set(labels)) < 2:
            continue
        probs = rng.choice([0.1, 0.25, 0.5, 0.75, 0.9], n).tolist()
        curve = roc_curve(probs, labels, sorted(set(probs)))
        for p in curve.points:
            if p.computed:
                se, sp = oracles.rates_at(probs, labels, p.threshold)
                ok &= p.tpr == se and abs((1 - p.fpr) - sp) < 1e-15
        ok &= abs(auc(curve) - oracles.mann_whitney_auc(probs, labels)) < 1e-12
        sums.append(repr(auc(curve)))
        pools += 1
    return ok, "\n".join(sums), f"AUC diag={a_diag} perfect={a_perfect}; 50 rank-sum identities; 50 pools match oracle"


def criterion_7():
    complete = synthetic.make_dataset(500, 7, seed=42)
    damaged = inject_missing(complete, 0.10, 42)
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        (tmp / "data.csv").write_text(damaged.to_csv())
        (tmp / "schema.txt").write_text(damaged.schema.dumps())
        t0 = time.perf_counter()
        code = cli.main([
            "pipeline", "--data", str(tmp / "data.csv"), "--schema", str(tmp / "schema.txt"),
            "--seed", "42", "--k", "10", "--out", str(tmp / "out"),
        ])
        elapsed = time.perf_counter() - t0
        if code != 0:
            return False, f"exit {code}", f"pipeline exited with {code}"
        text = (tmp / "out" / "report.json").read_text()
        roc = (tmp / "out" / "roc.csv").read_text()
    rep = json.loads(text)
    feats = rep["pipeline"]["selected_features"]
    ok = elapsed < 300 and "signal" in feats and rep["accuracy"] >= 0.95 and rep["auc"] >= 0.95
    detail = f"features={feats} accuracy={rep['accuracy']:.4f} AUC={rep['auc']:.4f} ({elapsed:.1f} s)"
    return ok, text + roc, detail


def criterion_8():
    with tempfile.TemporaryDirectory() as tmp:
        t0 = time.perf_counter()
        code = cli.main(["bench", "--seed", "0", "--sizes", ",".join(map(str, BENCH_SIZES)), "--out", tmp])
        elapsed = time.perf_counter() - t0
        if code != 0:
            return False, f"exit {code}", f"bench exited with {code}"
        summary = json.loads((Path(tmp) / "bench.json").read_text())
    rep = BenchReport(**summary)
    ok = rep.r_squared >= 0.9 and elapsed < 600
    secs = ", ".join(f"{s:.2f}" for s in rep.seconds)
    detail = f"r^2={rep.r_squared:.4f} slope={rep.slope:.3e} s/record; times [{secs}] s (total {elapsed:.1f} s)"
    return ok, json.dumps(rep.deterministic_part(), sort_keys=True), detail


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4,
            5: criterion_5, 6: criterion_6, 7: criterion_7, 8: criterion_8}


def _run(n):
    ok, report, detail = CRITERIA[n]()
    _reports[n] = report
    return ok, detail


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_criterion(n, capsys):
    ok, detail = _run(n)
    _announce(capsys, n, ok, detail)
    assert ok, detail


@pytest.mark.slow
def test_criterion_7_end_to_end(capsys):
    ok, detail = _run(7)
    _announce(capsys, 7, ok, detail)
    assert ok, detail


@pytest.mark.slow
def test_criterion_8_scaling(capsys):
    ok, detail = _run(8)
    _announce(capsys, 8, ok, detail)
    assert ok, detail


@pytest.mark.slow
def test_criterion_9_determinism(capsys):
    differing = []
    for n, fn in CRITERIA.items():
        first = _reports.get(n)
        if first is None:
            first = fn()[1]
        second = fn()[1]
        if first != second:
            differing.append(n)
    ok = not differing
    detail = "criteria 1-8 reports byte-identical on rerun" if ok else f"reports differ for {differing}"
    _announce(capsys, 9, ok, detail)
    assert ok, detail
