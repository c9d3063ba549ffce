import json

import pytest

from dxpipe import cli, synthetic
from dxpipe.adtree import ADTree
from dxpipe.tabular import inject_missing


@pytest.fixture
def files(tmp_path):
    complete = synthetic.make_dataset(60, 3, seed=4, positive_fraction=0.5)
    damaged = inject_missing(complete, 0.1, 2)
    (tmp_path / "complete.csv").write_text(complete.to_csv())
    (tmp_path / "data.csv").write_text(damaged.to_csv())
    (tmp_path / "schema.txt").write_text(complete.schema.dumps())
    return tmp_path


def _common(t, data="data.csv"):
    return ["--data", str(t / data), "--schema", str(t / "schema.txt")]


SMALL = ["--adt-iters", "3", "--ga-pop", "6", "--ga-gens", "3"]


def _pipeline(t, out, extra=()):
    argv = ["pipeline", *_common(t), "--seed", "5", "--k", "3", *SMALL, "--out", str(t / out), *extra]
    return cli.main(argv)


def test_pipeline_writes_artifacts_and_is_deterministic(files, capsys):
    assert _pipeline(files, "a") == 0
    assert _pipeline(files, "b") == 0
    for name in ("report.json", "roc.csv", "features.txt", "imputed.csv", "impute.log", "tree.txt"):
        a, b = files / "a" / name, files / "b" / name
        assert a.exists(), name
        assert a.read_bytes() == b.read_bytes(), name
    report = json.loads((files / "a" / "report.json").read_text())
    assert report["pipeline"]["settings"]["seed"] == 5
    assert "signal" in report["pipeline"]["selected_features"]
    assert report["pipeline"]["n_imputed"] > 0
    assert "features:" in capsys.readouterr().out


def test_evaluate_reproduces_pipeline_report(files):
    assert _pipeline(files, "run") == 0
    run = files / "run"
    argv = [
        "evaluate", "--data", str(run / "imputed.csv"), "--schema", str(files / "schema.txt"),
        "--features", str(run / "features.txt"), "--seed", "5", "--k", "3", "--adt-iters", "3",
        "--out", str(files / "ev"),
    ]
    assert cli.main(argv) == 0
    pipe = json.loads((run / "report.json").read_text())
    ev = json.loads((files / "ev" / "report.json").read_text())
    for key in ("accuracy", "sensitivity", "specificity", "auc", "operating_point", "fold_accuracies"):
        assert ev[key] == pipe[key], key
    assert (files / "ev" / "roc.csv").read_text() == (run / "roc.csv").read_text()


def test_nested_mode_records_fold_features(files):
    assert _pipeline(files, "n", ["--mode", "nested"]) == 0
    report = json.loads((files / "n" / "report.json").read_text())
    assert len(report["pipeline"]["fold_features"]) == 3


def test_train_then_score_saved_tree(files, capsys):
    out = files / "t"
    assert cli.main(["train", *_common(files, "complete.csv"), "--seed", "1", "--adt-iters", "4", "--out", str(out)]) == 0
    tree = ADTree.loads((out / "tree.txt").read_text())
    assert tree.iterations == 4
    assert "signal" in capsys.readouterr().out
    argv = ["evaluate", *_common(files, "complete.csv"), "--seed", "1", "--tree", str(out / "tree.txt"), "--out", str(out)]
    assert cli.main(argv) == 0
    assert json.loads((out / "report.json").read_text())["accuracy"] == 1.0


@pytest.mark.parametrize("method", ["nm", "mean-mode", "knn"])
def test_impute_methods(files, method):
    out = files / method
    assert cli.main(["impute", *_common(files), "--method", method, "--knn-k", "3", "--distances", "--out", str(out)]) == 0
    text = (out / "imputed.csv").read_text()
    assert "?" not in text
    assert (out / "distances.csv").read_text().startswith("row,col,distance\n")
    assert (out / "impute.log").exists() == (method == "nm")


def test_inject(files):
    out = files / "inj"
    assert cli.main(["inject", *_common(files, "complete.csv"), "--seed", "3", "--rate", "0.25", "--out", str(out)]) == 0
    body = (out / "injected.csv").read_text().splitlines()[1:]
    assert sum(line.split(",")[:-1].count("?") for line in body) == 60  # 0.25 * 60 * 4


def test_select(files, capsys):
    argv = ["select", *_common(files, "complete.csv"), "--seed", "2", "--k", "3", *SMALL, "--out", str(files / "s")]
    assert cli.main(argv) == 0
    assert "signal" in (files / "s" / "features.txt").read_text().split()
    assert "generation" in capsys.readouterr().out


def test_compare_imputers(files):
    argv = [
        "compare-imputers", *_common(files, "complete.csv"), "--rates", "0.1", "--seeds", "0,1",
        "--k", "3", "--adt-iters", "2", "--knn-k", "3", "--out", str(files / "c"),
    ]
    assert cli.main(argv) == 0
    assert (files / "c" / "comparison.csv").read_text().startswith("rate,seed,nm,mean_mode,knn\n")


def test_bench_small(files):
    out = files / "bench"
    assert cli.main(["bench", "--seed", "0", "--sizes", "20,30,40,50", "--n-columns", "3", "--out", str(out)]) == 0
    summary = json.loads((out / "bench.json").read_text())
    assert summary["sizes"] == [20, 30, 40, 50]
    assert "machine" in summary and (out / "bench.csv").exists()


def test_bench_rejects_too_few_sizes(files, capsys):
    assert cli.main(["bench", "--seed", "0", "--sizes", "20,30", "--out", str(files / "b")]) == 2
    assert "bench" in capsys.readouterr().err


def test_missing_schema_is_usage_error_naming_stage(files, capsys):
    argv = ["pipeline", "--data", str(files / "data.csv"), "--schema", str(files / "nope.txt"),
            "--seed", "1", "--out", str(files / "x")]
    assert cli.main(argv) == 2
    assert "load" in capsys.readouterr().err


def test_bad_data_is_data_error(files, capsys):
    (files / "bad.csv").write_text("wrong,header\n1,2\n")
    assert cli.main(["impute", *_common(files, "bad.csv"), "--out", str(files / "x")]) == 3
    assert "load" in capsys.readouterr().err


def test_bad_ga_setting_is_usage_error(files):
    argv = ["select", *_common(files, "complete.csv"), "--seed", "1", "--ga-mutation", "2", "--out", str(files / "x")]
    assert cli.main(argv) == 2


def test_degenerate_training_is_numeric_error(files):
    (files / "flat.csv").write_text("x,y\n1.0,p\n1.0,n\n")
    (files / "flat.txt").write_text("x:real\ny:decision:p\n")
    argv = ["train", "--data", str(files / "flat.csv"), "--schema", str(files / "flat.txt"), "--seed", "0",
            "--out", str(files / "x")]
    assert cli.main(argv) == 4


def test_seed_is_required(files):
    with pytest.raises(SystemExit) as exc:
        cli.main(["pipeline", *_common(files), "--out", str(files / "x")])
    assert exc.value.code == 2
