"""Shared builders for synthetic tables used across the test suite."""

import numpy as np

from tabfm.nn_index import build
from tabfm.table_store import NUMERIC, RawColumn, RawTable, prepare


def numeric_table(matrix, missing=None, name="t", target=None):
    """Build a RawTable from a dense float matrix (missing = set of (i, j))."""
    matrix = np.asarray(matrix, dtype=float)
    missing = missing or set()
    cols = []
    for j in range(matrix.shape[1]):
        vals = [
            None if (i, j) in missing else float(matrix[i, j])
            for i in range(matrix.shape[0])
        ]
        cols.append(RawColumn(f"c{j}", NUMERIC, vals))
    return RawTable(name, cols, matrix.shape[0], target=target)


def prepared(matrix, **kwargs):
    return prepare(numeric_table(matrix, **kwargs))


def prepared_with_index(matrix, **kwargs):
    table = prepared(matrix, **kwargs)
    return table, build(table)
