import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tabfm.errors import DataError
from tabfm.table_store import (
    CATEGORICAL,
    NUMERIC,
    PreparedTable,
    RawColumn,
    RawTable,
    apply_preparation,
    load_csv,
    load_table,
    make_folds,
    prepare,
    save_table,
    supervised_view,
)


def write_csv(tmp_path, text, name="t.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


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


class TestLoadCsv:
    def test_kind_detection(self, tmp_path):
        raw = load_csv(write_csv(tmp_path, "a,b\n1,x\n2,y\n"))
        assert raw.n_rows == 2
        assert raw.columns[0].kind == NUMERIC
        assert raw.columns[1].kind == CATEGORICAL

    def test_empty_cell_is_missing(self, tmp_path):
        raw = load_csv(write_csv(tmp_path, "a\n1\n\n3\n"))
        assert raw.columns[0].values == [1.0, None, 3.0]

    def test_ragged_row_rejected(self, tmp_path):
        with pytest.raises(DataError, match="ragged"):
            load_csv(write_csv(tmp_path, "a,b\n1\n"))

    def test_zero_data_rows_rejected(self, tmp_path):
        with pytest.raises(DataError, match="no data rows"):
            load_csv(write_csv(tmp_path, "a,b\n"))

    def test_target_recorded_and_validated(self, tmp_path):
        p = write_csv(tmp_path, "a,b\n1,x\n")
        assert load_csv(p, target_column="b").target == "b"
        with pytest.raises(DataError, match="target column"):
            load_csv(p, target_column="z")

    def test_non_finite_text_forces_categorical(self, tmp_path):
        raw = load_csv(write_csv(tmp_path, "a\nnan\n1\n"))
        assert raw.columns[0].kind == CATEGORICAL


class TestPrepare:
    def test_standardization(self):
        prep = prepare(numeric_table([[1], [2], [3]]))
        expected = np.array([-1.224744871, 0.0, 1.224744871])
        np.testing.assert_allclose(prep.data[:, 0], expected, atol=1e-9)

    def test_outlier_clipped_at_ten(self):
        # one outlier among n values reaches z = sqrt(n-1); use n-1 = 149 > 100
        vals = [0.0] * 149 + [37.0]
        prep = prepare(numeric_table([[v] for v in vals]))
        assert np.sqrt(149) > 10  # unclipped z-score would exceed the bound
        assert prep.data[-1, 0] == 10.0
        assert np.all(prep.data[:-1, 0] > -1)

    def test_constant_column_zeroed(self):
        prep = prepare(numeric_table([[5], [5], [5]]))
        np.testing.assert_array_equal(prep.data[:, 0], [0, 0, 0])
        assert prep.col_stds[0] == 0.0

    def test_missing_imputed_to_zero_and_masked(self):
        prep = prepare(numeric_table([[1], [2], [3]], missing={(1, 0)}))
        assert prep.missing_mask[1, 0]
        assert prep.data[1, 0] == 0.0

    def test_categorical_lexicographic_codes(self):
        col = RawColumn("c", CATEGORICAL, ["b", "a", "c", "a"])
        prep = prepare(RawTable("t", [col], 4))
        assert prep.encoders[0] == ["a", "b", "c"]
        # codes 1,0,2,0 standardized; equal raw codes stay equal
        assert prep.data[1, 0] == prep.data[3, 0]
        assert prep.data[1, 0] < prep.data[0, 0] < prep.data[2, 0]

    def test_all_missing_column(self):
        prep = prepare(numeric_table([[1], [2]], missing={(0, 0), (1, 0)}))
        np.testing.assert_array_equal(prep.data[:, 0], [0, 0])

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(
            st.floats(min_value=-1e3, max_value=1e3, allow_nan=False),
            min_size=2,
            max_size=40,
        )
    )
    def test_mean_zero_std_one(self, values):
        prep = prepare(numeric_table([[v] for v in values]))
        col = prep.data[:, 0]
        if prep.col_stds[0] == 0.0:
            np.testing.assert_array_equal(col, 0.0)
        else:
            assert abs(col.mean()) <= 1e-9
            assert abs(col.std() - 1.0) <= 1e-9

    def test_idempotent_on_own_output(self):
        rng = np.random.default_rng(0)
        mat = rng.normal(size=(50, 3)) * [1.0, 7.0, 0.01] + [4, -2, 9]
        missing = {(3, 1), (10, 0)}
        first = prepare(numeric_table(mat, missing))
        again_raw = numeric_table(first.data, missing)
        second = prepare(again_raw)
        np.testing.assert_allclose(second.data, first.data, atol=1e-9)

    def test_row_permutation_commutes(self):
        rng = np.random.default_rng(1)
        mat = rng.normal(size=(30, 2))
        perm = rng.permutation(30)
        direct = prepare(numeric_table(mat[perm]))
        permuted = prepare(numeric_table(mat)).data[perm]
        np.testing.assert_allclose(direct.data, permuted, atol=1e-12)

    def test_empty_table_rejected(self):
        with pytest.raises(DataError):
            prepare(RawTable("t", [], 0))


class TestMakeFolds:
    def table(self, n, target=False, labels=None):
        rng = np.random.default_rng(2)
        raw = numeric_table(rng.normal(size=(n, 2)))
        if target:
            col = RawColumn("y", CATEGORICAL, [str(v) for v in labels])
            raw.columns.append(col)
            raw.target = "y"
        return prepare(raw)

    def test_partition(self):
        folds = make_folds(self.table(10), 2, seed=0)
        assert len(folds[0].test_rows) == 5 and len(folds[1].test_rows) == 5
        assert set(folds[0].test_rows).isdisjoint(folds[1].test_rows)
        assert set(folds[0].test_rows) | set(folds[1].test_rows) == set(range(10))
        assert set(folds[0].train_rows) == set(folds[1].test_rows)

    def test_deterministic(self):
        a = make_folds(self.table(23), 4, seed=7)
        b = make_folds(self.table(23), 4, seed=7)
        for fa, fb in zip(a, b):
            np.testing.assert_array_equal(fa.test_rows, fb.test_rows)

    def test_sizes_within_one(self):
        folds = make_folds(self.table(23), 4, seed=7)
        sizes = [len(f.test_rows) for f in folds]
        assert max(sizes) - min(sizes) <= 1

    def test_k_exceeds_rows(self):
        with pytest.raises(DataError):
            make_folds(self.table(3), 5, seed=0)

    def test_stratified(self):
        labels = [0] * 12 + [1] * 6
        table = self.table(18, target=True, labels=labels)
        folds = make_folds(table, 3, seed=3)
        for f in folds:
            got = [labels[i] for i in f.test_rows]
            assert got.count(0) == 4 and got.count(1) == 2


class TestSupervisedView:
    def test_classification_labels(self, tmp_path):
        raw = load_csv(
            write_csv(tmp_path, "a,y\n1,pos\n2,neg\n3,pos\n"), target_column="y"
        )
        sup = supervised_view(raw)
        assert sup.task_kind == "classification"
        assert sup.classes == ["neg", "pos"]
        np.testing.assert_array_equal(sup.y, [1, 0, 1])
        assert sup.features.col_names == ["a"]

    def test_missing_target_rows_dropped(self, tmp_path):
        raw = load_csv(
            write_csv(tmp_path, "a,y\n1,2.0\n2,\n3,4.0\n"), target_column="y"
        )
        sup = supervised_view(raw)
        assert sup.task_kind == "regression"
        np.testing.assert_array_equal(sup.y, [2.0, 4.0])
        assert sup.features.n_rows == 2

    def test_forced_classification_on_numeric(self, tmp_path):
        raw = load_csv(
            write_csv(tmp_path, "a,y\n1,0\n2,1\n3,0\n"), target_column="y"
        )
        sup = supervised_view(raw, task_kind="classification")
        assert sup.classes == [0.0, 1.0]
        np.testing.assert_array_equal(sup.y, [0, 1, 0])


class TestBinaryFormat:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(4)
        mat = rng.normal(size=(17, 5))
        missing = {(0, 0), (8, 3), (16, 4)}
        table = prepare(numeric_table(mat, missing, name="dataset-a"))
        path = tmp_path / "t.tbl"
        save_table(table, path)
        back = load_table(path)
        np.testing.assert_allclose(
            back.data, table.data.astype(np.float32).astype(np.float64)
        )
        np.testing.assert_array_equal(back.missing_mask, table.missing_mask)
        np.testing.assert_array_equal(back.col_means, table.col_means)
        np.testing.assert_array_equal(back.col_stds, table.col_stds)
        assert back.col_names == table.col_names
        assert back.source == "dataset-a"

    def test_save_is_byte_stable(self, tmp_path):
        table = prepare(numeric_table(np.eye(6)))
        p0, p1 = tmp_path / "a.tbl", tmp_path / "b.tbl"
        save_table(table, p0)
        save_table(table, p1)
        assert p0.read_bytes() == p1.read_bytes()

    def test_bad_magic_rejected(self, tmp_path):
        p = tmp_path / "x.tbl"
        p.write_bytes(b"NOTMAGIC!" + b"\x00" * 16)
        with pytest.raises(DataError, match="magic"):
            load_table(p)


class TestApplyPreparation:
    def test_matches_fit_transform(self):
        rng = np.random.default_rng(5)
        mat = rng.normal(size=(40, 3)) * 3 + 1
        fitted = prepare(numeric_table(mat))
        out = apply_preparation(fitted, numeric_table(mat))
        np.testing.assert_allclose(out, fitted.data, atol=1e-12)

    def test_unseen_category_imputed(self):
        col = RawColumn("c", CATEGORICAL, ["a", "b", "a", "b"])
        fitted = prepare(RawTable("t", [col], 4))
        new = RawTable("u", [RawColumn("c", CATEGORICAL, ["a", "zz"])], 2)
        out = apply_preparation(fitted, new)
        assert out[1, 0] == 0.0
