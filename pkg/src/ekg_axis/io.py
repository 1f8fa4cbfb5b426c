"""Plain-text CSV export with round-trip exact floats."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path, columns: dict) -> Path:
    """Write equal-length columns with a header row.

    Floats use the shortest repr that round-trips (at most 17 significant digits).
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    arrays = [np.asarray(columns[k]) for k in names]
    n = {len(a) for a in arrays}
    if len(n) > 1:
        raise ValueError("columns must have equal length")
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        ints = [np.issubdtype(a.dtype, np.integer) or a.dtype == bool for a in arrays]
        for row in zip(*arrays):
            writer.writerow([str(int(v)) if is_int else repr(float(v)) for v, is_int in zip(row, ints)])
    return path


def read_csv(path) -> dict:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        names = next(reader)
        rows = [list(map(float, row)) for row in reader]
    data = np.array(rows, dtype=float).reshape(-1, len(names))
    return {k: data[:, i] for i, k in enumerate(names)}
