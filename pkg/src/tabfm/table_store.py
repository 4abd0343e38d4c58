"""CSV ingestion, column encoding, standardization, and fold splitting.

Raw tables come in as CSV (header row, comma-delimited, empty field =
missing). Non-numeric columns are integer-encoded with a lexicographic
category order, every column is standardized to mean 0 / std 1 over its
non-missing entries (population convention), values are clipped to
[-CLIP, CLIP] after standardization, and missing entries are imputed to 0
(the post-standardization mean) after clipping. Constant columns become
all zeros.

PreparedTable is immutable after construction and safe for concurrent
reads.
"""

from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DataError

CLIP = 10.0
TABLE_MAGIC = b"TDPT-TBL1"
TABLE_VERSION = 1

NUMERIC = "numeric"
CATEGORICAL = "categorical"


@dataclass
class RawColumn:
    name: str
    kind: str  # NUMERIC or CATEGORICAL
    values: list  # entry is None where missing; floats or strings otherwise


@dataclass
class RawTable:
    name: str
    columns: list[RawColumn]
    n_rows: int
    target: Optional[str] = None

    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> RawColumn:
        for c in self.columns:
            if c.name == name:
                return c
        raise DataError(f"no column named {name!r} in table {self.name!r}")


@dataclass(frozen=True)
class PreparedTable:
    """Standardized numeric view of a table.

    data is float64 (N, F); entries where missing_mask is True are exactly 0.
    encoders[j] is the ordered category list for categorical column j, None
    for numeric columns. target_col indexes into the columns when a
    supervised target was designated at load time.
    """

    data: np.ndarray
    missing_mask: np.ndarray
    col_means: np.ndarray
    col_stds: np.ndarray
    encoders: list
    col_names: list
    source: str
    target_col: Optional[int] = None

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    @property
    def n_cols(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class FoldSplit:
    fold_id: int
    train_rows: np.ndarray
    test_rows: np.ndarray
    seed: int


def _parse_numeric(text: str) -> Optional[float]:
    """Return the finite float value of text, or None if it is not one."""
    try:
        value = float(text)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def load_csv(path, target_column: Optional[str] = None) -> RawTable:
    """Load a header-first CSV file into a RawTable.

    Empty fields denote missing values. A column is categorical iff any
    non-missing entry fails finite-numeric parsing. Raises DataError on
    ragged rows or zero data rows.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                row = [""]  # blank line: a single empty field
            if len(row) != len(header):
                raise DataError(
                    f"{path}: ragged row at line {lineno} "
                    f"({len(row)} fields, expected {len(header)})"
                )
            rows.append(row)
    if not rows:
        raise DataError(f"{path}: no data rows")
    if target_column is not None and target_column not in header:
        raise DataError(f"{path}: target column {target_column!r} not in header")

    columns = []
    for j, name in enumerate(header):
        cells = [row[j] for row in rows]
        parsed = [None if cell == "" else _parse_numeric(cell) for cell in cells]
        is_numeric = all(p is not None for cell, p in zip(cells, parsed) if cell != "")
        if is_numeric:
            columns.append(RawColumn(name, NUMERIC, parsed))
        else:
            values = [None if cell == "" else cell for cell in cells]
            columns.append(RawColumn(name, CATEGORICAL, values))
    return RawTable(name=path.stem, columns=columns, n_rows=len(rows), target=target_column)


def _encode_column(col: RawColumn):
    """Return (float64 values with NaN for missing, encoder or None)."""
    n = len(col.values)
    out = np.full(n, np.nan)
    if col.kind == NUMERIC:
        for i, v in enumerate(col.values):
            if v is not None:
                out[i] = float(v)
        return out, None
    categories = sorted({str(v) for v in col.values if v is not None})
    code = {c: k for k, c in enumerate(categories)}
    for i, v in enumerate(col.values):
        if v is not None:
            out[i] = code[str(v)]
    return out, categories


def prepare(raw: RawTable) -> PreparedTable:
    """Encode, standardize, clip, and impute a raw table.

    Categoricals are integer-encoded in lexicographic category order.
    Standardization uses the population std over non-missing entries;
    clipping to [-CLIP, CLIP] happens after standardization and imputation
    (missing -> 0) after clipping. Constant columns become all zeros.
    """
    if raw.n_rows < 1 or not raw.columns:
        raise DataError(f"table {raw.name!r} has no rows or no columns")
    n, f = raw.n_rows, len(raw.columns)
    data = np.zeros((n, f))
    mask = np.zeros((n, f), dtype=bool)
    means = np.zeros(f)
    stds = np.zeros(f)
    encoders = []
    for j, col in enumerate(raw.columns):
        if len(col.values) != n:
            raise DataError(
                f"column {col.name!r} has {len(col.values)} entries, expected {n}"
            )
        values, enc = _encode_column(col)
        encoders.append(enc)
        missing = np.isnan(values)
        mask[:, j] = missing
        observed = values[~missing]
        if observed.size == 0:
            continue  # all-missing column: zeros, mean/std stay 0
        mean = observed.mean()
        std = observed.std()  # population convention
        means[j] = mean
        stds[j] = std
        if std == 0.0:
            continue  # constant column: zeros
        z = np.clip((values - mean) / std, -CLIP, CLIP)
        z[missing] = 0.0
        data[:, j] = z
    target_col = None
    if raw.target is not None:
        target_col = raw.column_names().index(raw.target)
    data.flags.writeable = False
    mask.flags.writeable = False
    return PreparedTable(
        data=data,
        missing_mask=mask,
        col_means=means,
        col_stds=stds,
        encoders=encoders,
        col_names=raw.column_names(),
        source=raw.name,
        target_col=target_col,
    )


def apply_preparation(fitted: PreparedTable, raw: RawTable) -> np.ndarray:
    """Encode and standardize new rows with statistics fit on another table.

    Columns are matched by name against the fitted table's feature layout.
    Categories unseen at fit time are treated as missing (imputed to 0).
    """
    names = raw.column_names()
    n = raw.n_rows
    out = np.zeros((n, fitted.n_cols))
    for j, name in enumerate(fitted.col_names):
        if name not in names:
            raise DataError(f"new data lacks column {name!r}")
        col = raw.column(name)
        enc = fitted.encoders[j]
        values = np.full(n, np.nan)
        if enc is None:
            for i, v in enumerate(col.values):
                if v is not None:
                    parsed = _parse_numeric(str(v))
                    if parsed is not None:
                        values[i] = parsed
        else:
            code = {c: k for k, c in enumerate(enc)}
            for i, v in enumerate(col.values):
                if v is not None:
                    values[i] = code.get(str(v), np.nan)
        std = fitted.col_stds[j]
        if std == 0.0:
            continue
        z = np.clip((values - fitted.col_means[j]) / std, -CLIP, CLIP)
        z[np.isnan(z)] = 0.0
        out[:, j] = z
    return out


def make_folds(table: PreparedTable, k: int, seed: int) -> list[FoldSplit]:
    """Split rows into k folds, deterministically for a given seed.

    Fold sizes differ by at most one. When a categorical target is
    designated, folds are stratified by its label.
    """
    n = table.n_rows
    if k < 2:
        raise DataError(f"k must be >= 2, got {k}")
    if k > n:
        raise DataError(f"k={k} exceeds row count {n}")
    rng = np.random.default_rng(seed)

    stratified = (
        table.target_col is not None and table.encoders[table.target_col] is not None
    )
    if stratified:
        col = table.data[:, table.target_col]
        miss = table.missing_mask[:, table.target_col]
        # missing targets form their own stratum
        keys = [("m",) if miss[i] else ("v", col[i]) for i in range(n)]
        order = []
        for key in sorted(set(keys)):
            members = np.flatnonzero([kk == key for kk in keys])
            order.extend(rng.permutation(members).tolist())
    else:
        order = rng.permutation(n).tolist()

    assignment = np.empty(n, dtype=np.int64)
    for pos, row in enumerate(order):
        assignment[row] = pos % k
    folds = []
    all_rows = np.arange(n)
    for fold_id in range(k):
        test = all_rows[assignment == fold_id]
        train = all_rows[assignment != fold_id]
        folds.append(FoldSplit(fold_id, train, test, seed))
    return folds


CLASSIFICATION = "classification"
REGRESSION = "regression"


@dataclass(frozen=True)
class SupervisedData:
    """Feature table plus aligned targets for one supervised task."""

    features: PreparedTable
    y: np.ndarray
    task_kind: str
    classes: Optional[list]  # label names in code order, classification only


def supervised_view(raw: RawTable, task_kind: Optional[str] = None) -> SupervisedData:
    """Split a raw table into prepared features and encoded targets.

    Rows with a missing target are dropped. The target column is excluded
    from the features. task_kind defaults to classification for categorical
    targets and regression for numeric ones; classification may be forced
    onto a numeric target (distinct values become the classes).
    """
    if raw.target is None:
        raise DataError(f"table {raw.name!r} has no designated target column")
    target = raw.column(raw.target)
    keep = [i for i, v in enumerate(target.values) if v is not None]
    if not keep:
        raise DataError(f"table {raw.name!r}: target column is entirely missing")

    if task_kind is None:
        task_kind = CLASSIFICATION if target.kind == CATEGORICAL else REGRESSION
    if task_kind == REGRESSION and target.kind == CATEGORICAL:
        raise DataError(f"cannot regress categorical target {raw.target!r}")

    feature_cols = []
    for col in raw.columns:
        if col.name == raw.target:
            continue
        feature_cols.append(
            RawColumn(col.name, col.kind, [col.values[i] for i in keep])
        )
    if not feature_cols:
        raise DataError(f"table {raw.name!r} has no feature columns")
    features = prepare(RawTable(raw.name, feature_cols, len(keep)))

    raw_targets = [target.values[i] for i in keep]
    if task_kind == CLASSIFICATION:
        if target.kind == CATEGORICAL:
            classes = sorted({str(v) for v in raw_targets})
        else:
            classes = sorted({float(v) for v in raw_targets})
        code = {c: k for k, c in enumerate(classes)}
        y = np.array(
            [code[str(v) if target.kind == CATEGORICAL else float(v)] for v in raw_targets],
            dtype=np.int64,
        )
        if len(classes) < 2:
            raise DataError(f"table {raw.name!r}: fewer than 2 target classes")
        return SupervisedData(features, y, CLASSIFICATION, classes)
    y = np.array([float(v) for v in raw_targets])
    return SupervisedData(features, y, REGRESSION, None)


def save_table(table: PreparedTable, path) -> None:
    """Write the versioned binary table format (float32 data, packed mask)."""
    header = {
        "n_rows": int(table.n_rows),
        "n_cols": int(table.n_cols),
        "col_names": list(table.col_names),
        "col_means": [float(x) for x in table.col_means],
        "col_stds": [float(x) for x in table.col_stds],
        "encoders": table.encoders,
        "source": table.source,
        "target_col": table.target_col,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(TABLE_MAGIC)
        fh.write(struct.pack("<II", TABLE_VERSION, len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(table.data, dtype="<f4").tobytes())
        fh.write(np.packbits(table.missing_mask.ravel()).tobytes())


def load_table(path) -> PreparedTable:
    """Read a table written by save_table."""
    with open(path, "rb") as fh:
        magic = fh.read(len(TABLE_MAGIC))
        if magic != TABLE_MAGIC:
            raise DataError(f"{path}: bad magic {magic!r}")
        version, blob_len = struct.unpack("<II", fh.read(8))
        if version != TABLE_VERSION:
            raise DataError(f"{path}: unsupported table version {version}")
        header = json.loads(fh.read(blob_len).decode("utf-8"))
        n, f = header["n_rows"], header["n_cols"]
        data = np.frombuffer(fh.read(n * f * 4), dtype="<f4").astype(np.float64)
        data = data.reshape(n, f)
        bits = np.frombuffer(fh.read((n * f + 7) // 8), dtype=np.uint8)
        mask = np.unpackbits(bits, count=n * f).reshape(n, f).astype(bool)
    data.flags.writeable = False
    mask.flags.writeable = False
    return PreparedTable(
        data=data,
        missing_mask=mask,
        col_means=np.array(header["col_means"]),
        col_stds=np.array(header["col_stds"]),
        encoders=header["encoders"],
        col_names=header["col_names"],
        source=header["source"],
        target_col=header["target_col"],
    )
