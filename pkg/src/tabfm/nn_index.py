"""Exact nearest-neighbor retrieval over prepared feature rows.

Brute-force L2 search: at desk scale an exact linear scan is fast enough
and makes retrieval a deterministic oracle for everything downstream.
Squared distances are used internally; reported distances are L2. Ties are
broken by ascending row id. The index holds a reference to the table's
matrix and is read-only after build.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .table_store import PreparedTable


@dataclass(frozen=True)
class NeighborIndex:
    data: np.ndarray  # (N, F) float64, not copied
    dim: int
    size: int


@dataclass(frozen=True)
class NeighborResult:
    row_ids: np.ndarray   # (k,) int64, distance-then-id order
    distances: np.ndarray  # (k,) float64, nondecreasing L2


def build(table) -> NeighborIndex:
    """Index a PreparedTable (or a bare feature matrix)."""
    data = table.data if isinstance(table, PreparedTable) else np.asarray(table, float)
    if data.ndim != 2 or data.shape[0] < 1:
        raise DataError("cannot index an empty table")
    return NeighborIndex(data=data, dim=data.shape[1], size=data.shape[0])


def _check_query(index: NeighborIndex, point: np.ndarray, k: int) -> np.ndarray:
    point = np.asarray(point, dtype=np.float64)
    if point.shape != (index.dim,):
        raise DataError(f"query dimension {point.shape} != ({index.dim},)")
    if not np.all(np.isfinite(point)):
        raise DataError("query point contains non-finite values")
    if not 1 <= k <= index.size:
        raise DataError(f"k={k} outside [1, {index.size}]")
    return point


def query(index: NeighborIndex, point, k: int) -> NeighborResult:
    """Exact k nearest rows by L2 distance, ties broken by ascending row id."""
    point = _check_query(index, point, k)
    diff = index.data - point
    sq = np.einsum("ij,ij->i", diff, diff)
    order = np.lexsort((np.arange(index.size), sq))[:k]
    return NeighborResult(row_ids=order.astype(np.int64), distances=np.sqrt(sq[order]))


def query_masked(index: NeighborIndex, point, masked_col: int, k: int) -> NeighborResult:
    """query() with the point's masked_col coordinate zeroed (the standardized
    mean); indexed rows keep their values in that column."""
    point = np.asarray(point, dtype=np.float64)
    if not 0 <= masked_col < index.dim:
        raise DataError(f"masked_col {masked_col} outside [0, {index.dim})")
    masked = point.copy()
    masked[masked_col] = 0.0
    return query(index, masked, k)


def query_batch(index: NeighborIndex, points: np.ndarray, k: int) -> np.ndarray:
    """Row ids of the k nearest rows for each query point, shape (M, k).

    Same distance and tie semantics as query(); used by inference where
    only ids are needed.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != index.dim:
        raise DataError(f"query matrix shape {points.shape} incompatible with dim {index.dim}")
    if not 1 <= k <= index.size:
        raise DataError(f"k={k} outside [1, {index.size}]")
    # ||x||^2 - 2 x.q + ||q||^2 ranks identically but loses exact ties; keep
    # the diff-based form per chunk instead.
    ids = np.empty((points.shape[0], k), dtype=np.int64)
    row_ids = np.arange(index.size)
    for i, q in enumerate(points):
        diff = index.data - q
        sq = np.einsum("ij,ij->i", diff, diff)
        ids[i] = np.lexsort((row_ids, sq))[:k]
    return ids
