import numpy as np
import pytest

import latentqubo as lq


def make_dataset(rows, labels, tag="random"):
    X = np.asarray(rows, dtype=np.uint8)
    Y = np.asarray(labels, dtype=np.float64)
    return lq.LabeledDataset(X=X, Y=Y, provenance=(tag,) * len(Y))


class TestConstruction:
    def test_basic_properties(self):
        data = make_dataset([[0, 1], [1, 1]], [0.25, 0.75])
        assert data.n == 2
        assert len(data) == 2
        assert data.max_label() == 0.75
        vec, label = data.best_row()
        assert vec.tolist() == [1, 1] and label == 0.75

    def test_best_row_first_on_ties(self):
        data = make_dataset([[1, 0], [0, 1]], [0.5, 0.5])
        vec, _ = data.best_row()
        assert vec.tolist() == [1, 0]

    def test_empty(self):
        data = lq.LabeledDataset.empty(5)
        assert data.n == 5
        assert len(data) == 0
        with pytest.raises(ValueError, match="empty"):
            data.max_label()

    def test_non_binary_rejected(self):
        with pytest.raises(ValueError, match="0 or 1"):
            make_dataset([[0, 2]], [0.5])

    def test_non_finite_label_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            make_dataset([[0, 1]], [np.nan])

    def test_length_mismatch_rejected(self):
        X = np.zeros((2, 3), dtype=np.uint8)
        with pytest.raises(ValueError):
            lq.LabeledDataset(X=X, Y=np.zeros(3), provenance=("a", "b", "c"))

    def test_bad_tag_rejected(self):
        X = np.zeros((1, 3), dtype=np.uint8)
        with pytest.raises(ValueError, match="tag"):
            lq.LabeledDataset(X=X, Y=np.zeros(1), provenance=("has space",))

    def test_arrays_locked(self):
        data = make_dataset([[0, 1]], [0.5])
        with pytest.raises(ValueError):
            data.X[0, 0] = 1


class TestMembership:
    def test_contains(self):
        data = make_dataset([[0, 1, 1], [1, 0, 0]], [0.1, 0.2])
        assert data.contains(np.array([0, 1, 1], dtype=np.uint8))
        assert not data.contains(np.array([1, 1, 1], dtype=np.uint8))

    def test_append_dedup_against_existing(self):
        data = make_dataset([[0, 1]], [0.1])
        merged, added = data.append_rows(
            np.array([[0, 1], [1, 1]], dtype=np.uint8),
            np.array([0.9, 0.5]),
            tags=("iter1", "iter1"),
        )
        assert added == 1
        assert len(merged) == 2
        # the existing label for [0, 1] survives
        assert merged.Y[0] == 0.1
        assert merged.X[1].tolist() == [1, 1]
        assert merged.provenance == ("random", "iter1")

    def test_append_dedup_within_batch(self):
        data = lq.LabeledDataset.empty(2)
        merged, added = data.append_rows(
            np.array([[1, 0], [1, 0], [0, 0]], dtype=np.uint8),
            np.array([0.3, 0.8, 0.2]),
            tags=("iter1",) * 3,
        )
        assert added == 2
        # first occurrence wins
        assert merged.Y.tolist() == [0.3, 0.2]

    def test_append_without_dedup(self):
        data = make_dataset([[1, 0]], [0.5])
        merged, added = data.append_rows(
            np.array([[1, 0]], dtype=np.uint8),
            np.array([0.7]),
            tags=("iter2",),
            dedup=False,
        )
        assert added == 1
        assert len(merged) == 2

    def test_append_width_mismatch(self):
        data = make_dataset([[1, 0]], [0.5])
        with pytest.raises(ValueError):
            data.append_rows(
                np.array([[1, 0, 1]], dtype=np.uint8), np.array([0.1]), tags=("t",)
            )

    def test_subset(self):
        data = make_dataset([[0, 0], [0, 1], [1, 0]], [0.1, 0.2, 0.3])
        sub = data.subset([2, 0])
        assert sub.X.tolist() == [[1, 0], [0, 0]]
        assert sub.Y.tolist() == [0.3, 0.1]


class TestSerialization:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        X = rng.integers(0, 2, (25, 9)).astype(np.uint8)
        Y = rng.random(25)
        data = lq.LabeledDataset(X=X, Y=Y, provenance=tuple(f"iter{i}" for i in range(25)))
        path = tmp_path / "data.txt"
        lq.save_dataset(data, path)
        loaded = lq.load_dataset(path)
        assert loaded.X.tolist() == data.X.tolist()
        assert loaded.Y.tolist() == data.Y.tolist()
        assert loaded.provenance == data.provenance

    def test_file_layout(self, tmp_path):
        data = make_dataset([[1, 0, 1]], [0.5], tag="seed")
        path = tmp_path / "data.txt"
        lq.save_dataset(data, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "DATASET v1 n=3 count=1"
        assert lines[1] == "101 0.5 seed"

    def test_empty_round_trip(self, tmp_path):
        path = tmp_path / "data.txt"
        lq.save_dataset(lq.LabeledDataset.empty(4), path)
        loaded = lq.load_dataset(path)
        assert loaded.n == 4 and len(loaded) == 0

    def test_bad_header(self, tmp_path):
        path = tmp_path / "data.txt"
        path.write_text("DATA v1 n=3 count=1\n101 0.5 seed\n")
        with pytest.raises(ValueError, match="header"):
            lq.load_dataset(path)

    def test_count_mismatch(self, tmp_path):
        path = tmp_path / "data.txt"
        path.write_text("DATASET v1 n=3 count=2\n101 0.5 seed\n")
        with pytest.raises(ValueError):
            lq.load_dataset(path)
