"""Self-supervised training episodes.

An episode picks an anchor row and a target column from a prepared table,
retrieves the anchor's neighborhood with the target coordinate masked,
turns the retrieved target values into a classification or regression
task, and randomly subsamples/shuffles the remaining feature columns. The
combinatorial task space is what keeps small real corpora from saturating.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DataError
from .nn_index import NeighborIndex, query_masked
from .table_store import PreparedTable

CLASSIFICATION = "classification"
REGRESSION = "regression"

# distinct-value count above which a column may become a regression target,
# and the probability that it actually does
CLS_THRESHOLD = 10
REGRESSION_PROB = 0.7


@dataclass(frozen=True)
class SslEpisode:
    features: np.ndarray   # (K, f) retained features, episode order
    targets: np.ndarray    # (K,) class codes or standardized reals
    task_kind: str
    num_classes: int       # classification only; 0 for regression
    source_col: int        # original column index of the target
    feature_perm: np.ndarray  # original column index of each episode feature


def choose_feature_subset(num_features: int, rng: np.random.Generator) -> np.ndarray:
    """Random feature subset: size uniform on [floor(F/2), F] (at least 1),
    sampled without replacement in random order."""
    if num_features < 1:
        raise DataError("need at least one feature")
    low = max(1, num_features // 2)
    size = int(rng.integers(low, num_features + 1))
    return rng.choice(num_features, size=size, replace=False)


def generate_target(column: np.ndarray, rng: np.random.Generator):
    """Turn a column of values into (targets, task_kind, num_classes).

    More than CLS_THRESHOLD distinct values: regression with probability
    REGRESSION_PROB (values standardized over the episode), otherwise a
    random number of classes is carved out by boundaries sampled from the
    interior distinct values. At most CLS_THRESHOLD distinct values: the
    values become classes directly. Class labels are densified to
    [0, observed) and then shuffled by a random permutation.
    """
    column = np.asarray(column, dtype=np.float64)
    distinct = np.unique(column)
    if distinct.size < 2:
        raise DataError("target column has fewer than 2 distinct values")

    if distinct.size > CLS_THRESHOLD:
        if rng.random() > 1.0 - REGRESSION_PROB:
            std = column.std()
            return (column - column.mean()) / std, REGRESSION, 0
        num_classes = int(rng.integers(2, CLS_THRESHOLD))
        boundaries = rng.choice(distinct[1:-1], size=num_classes - 1, replace=False)
        labels = (column[:, None] > boundaries[None, :]).sum(axis=1)
    else:
        labels = np.searchsorted(distinct, column)

    observed, dense = np.unique(labels, return_inverse=True)
    shuffle = rng.permutation(observed.size)
    return shuffle[dense].astype(np.int64), CLASSIFICATION, int(observed.size)


def make_episode(
    table: PreparedTable,
    index: NeighborIndex,
    k: int,
    rng: np.random.Generator,
    fixed_col: Optional[int] = None,
) -> SslEpisode:
    """Sample one training episode from a table.

    Anchors on a uniform row, retrieves k neighbors with the target column
    masked out of the query, deletes the target column from the retrieved
    features, subsamples/shuffles the rest, and synthesizes the target.
    The target column is re-drawn (up to F attempts) when the retrieved
    values are degenerate. fixed_col pins the target column (the no-SSL
    ablation path); it still errors if that column is degenerate.
    """
    n, f = table.data.shape
    if f < 2:
        raise DataError(f"table {table.source!r} needs at least 2 columns")
    if n < k:
        raise DataError(f"table {table.source!r} has {n} rows < k={k}")

    anchor = table.data[int(rng.integers(n))]
    attempts = 1 if fixed_col is not None else f
    for _ in range(attempts):
        col = fixed_col if fixed_col is not None else int(rng.integers(f))
        result = query_masked(index, anchor, col, k)
        target_values = table.data[result.row_ids, col]
        if np.unique(target_values).size >= 2:
            break
    else:
        raise DataError(
            f"table {table.source!r}: no target column with >=2 distinct "
            f"retrieved values after {attempts} attempts"
        )

    features = np.delete(table.data[result.row_ids], col, axis=1)
    subset = choose_feature_subset(f - 1, rng)
    features = features[:, subset]
    original = np.where(subset < col, subset, subset + 1)
    targets, task_kind, num_classes = generate_target(target_values, rng)
    return SslEpisode(
        features=features,
        targets=targets,
        task_kind=task_kind,
        num_classes=num_classes,
        source_col=col,
        feature_perm=original.astype(np.int64),
    )
