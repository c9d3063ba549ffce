import numpy as np
import pytest

from dxpipe.tabular import Column, ColumnKind, Schema, from_rows, load_dataset

WORKED_CSV = """C1,C2,class
?,12.0,positive
yes,10.5,positive
no,14.0,positive
no,13.0,negative
"""

WORKED_SCHEMA = Schema.parse("C1:categorical\nC2:real\nclass:decision\n")


@pytest.fixture
def worked_dataset():
    return load_dataset(WORKED_CSV, WORKED_SCHEMA)


def random_rows(rng: np.random.Generator, max_m=8, max_features=3, max_missing=3):
    """Small mixed-kind dataset with both classes and every column partly observed."""
    while True:
        m = int(rng.integers(2, max_m + 1))
        nf = int(rng.integers(1, max_features + 1))
        kinds = [str(k) for k in rng.choice(["categorical", "integer", "real"], nf)]
        labels = ["neg", "pos"] + [str(v) for v in rng.choice(["neg", "pos"], m - 2)]
        rng.shuffle(labels)
        rows = []
        for i in range(m):
            row = []
            for kind in kinds:
                if kind == "categorical":
                    row.append(str(rng.choice(["a", "b", "c"])))
                elif kind == "integer":
                    row.append(int(rng.integers(0, 3)))
                else:
                    row.append(float(rng.choice([0.5, 1.0, 2.5, 4.0, 7.5])) + float(rng.integers(0, 3)))
            rows.append(row + [labels[i]])
        n_miss = int(rng.integers(0, max_missing + 1))
        cells = [(i, l) for i in range(m) for l in range(nf)]
        for c in rng.permutation(len(cells))[:n_miss]:
            i, l = cells[c]
            rows[i][l] = None
        if all(any(r[l] is not None for r in rows) for l in range(nf)):
            return rows, kinds


def rows_to_dataset(rows, kinds):
    cols = [Column(f"c{l}", ColumnKind(k)) for l, k in enumerate(kinds)]
    schema = Schema(tuple(cols) + (Column("y", ColumnKind.DECISION),), positive_label="pos")
    return from_rows(schema, rows)
