"""Synthetic mixed-type datasets with one informative column."""

from __future__ import annotations

import numpy as np

from .tabular import Column, ColumnKind, Dataset, Schema, from_rows

NOISE_KINDS = (ColumnKind.REAL, ColumnKind.CATEGORICAL, ColumnKind.INTEGER)


def make_dataset(m: int, n_noise: int = 7, seed: int = 0, positive_fraction: float = 0.4) -> Dataset:
    """``m`` complete records: ``signal`` separates the classes, the rest is noise.

    Positives draw ``signal`` from U(4, 8) and negatives from U(10, 14); noise
    columns cycle through real U(1, 10), categorical {a, b, c} and integer 0..4,
    all independent of the class.  Real values stay positive because the
    proximity index divides by class means.
    """
    rng = np.random.default_rng(seed)
    n_pos = int(round(m * positive_fraction))
    labels = np.array(["pos"] * n_pos + ["neg"] * (m - n_pos), dtype=object)
    labels = labels[rng.permutation(m)]
    positive = labels == "pos"
    columns = [Column("signal", ColumnKind.REAL)]
    cols = [np.round(np.where(positive, rng.uniform(4, 8, m), rng.uniform(10, 14, m)), 3)]
    for j in range(n_noise):
        kind = NOISE_KINDS[j % len(NOISE_KINDS)]
        columns.append(Column(f"noise{j + 1}", kind))
        if kind is ColumnKind.REAL:
            cols.append(np.round(rng.uniform(1, 10, m), 3))
        elif kind is ColumnKind.CATEGORICAL:
            cols.append(rng.choice(np.array(["a", "b", "c"], dtype=object), m))
        else:
            cols.append(rng.integers(0, 5, m))
    columns.append(Column("diagnosis", ColumnKind.DECISION))
    schema = Schema(tuple(columns), positive_label="pos")
    rows = []
    for i in range(m):
        row = []
        for col, values in zip(columns, cols):
            v = values[i]
            if col.kind is ColumnKind.REAL:
                v = float(v)
            elif col.kind is ColumnKind.INTEGER:
                v = int(v)
            else:
                v = str(v)
            row.append(v)
        rows.append(row + [labels[i]])
    return from_rows(schema, rows)
