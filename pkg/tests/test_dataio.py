"""Tests for CSV ingestion, stratified splits and model files."""
import numpy as np
import pytest

from hdlss.classifiers import fit_binary, fit_ovo, predict_binary_batch, predict_ovo_batch
from hdlss.dataio import (
    CsvDatasetReader,
    LabeledDataset,
    load_csv,
    load_features_csv,
    load_model,
    read_json_document,
    save_dataset_csv,
    save_model,
    stratified_split,
    train_count,
    write_json_document,
)
from hdlss.distributions import substream
from hdlss.errors import DataFormatError, InsufficientSampleError, ModelFormatError


def _write(tmp_path, name: str, text: str) -> str:
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestCsvLoading:
    """load_csv and load_features_csv."""

    def test_named_label_column(self, tmp_path) -> None:
        """Label column picked by name, features in file order."""
        path = _write(tmp_path, "a.csv", "x1,y,x2\n0.5,a,1\n-2,b,3e-1\n")
        data = load_csv(path, label_column="y")
        np.testing.assert_array_equal(data.features, [[0.5, 1.0], [-2.0, 0.3]])
        assert data.labels == ("a", "b")
        assert data.feature_names == ("x1", "x2")

    def test_integer_labels(self, tmp_path) -> None:
        """Numeric label text becomes an int."""
        data = load_csv(_write(tmp_path, "b.csv", "label,f\n1,0\n2,1\n"))
        assert data.labels == (1, 2)
        assert data.label_vocabulary == (1, 2)

    def test_non_numeric_cell(self, tmp_path) -> None:
        """The error names the row and the column."""
        path = _write(tmp_path, "c.csv", "label,x1,x2\n1,0.1,0.2\n2,abc,0.3\n")
        with pytest.raises(DataFormatError, match=r"'abc' at row 2, column 'x1'"):
            load_csv(path)

    def test_ragged_row(self, tmp_path) -> None:
        """A short row leaves an empty cell."""
        path = _write(tmp_path, "d.csv", "label,x1,x2\n1,0.1,0.2\n2,0.3\n")
        with pytest.raises(DataFormatError):
            load_csv(path)

    def test_long_row(self, tmp_path) -> None:
        """Extra fields are a parse error."""
        path = _write(tmp_path, "e.csv", "label,x1\n1,0.1\n2,0.3,0.4,0.5\n")
        with pytest.raises(DataFormatError):
            load_csv(path)

    def test_missing_label_column(self, tmp_path) -> None:
        """An unknown label name is reported."""
        path = _write(tmp_path, "f.csv", "y,x1\n1,0.1\n")
        with pytest.raises(DataFormatError, match="label column"):
            load_csv(path, label_column="label")

    def test_empty_file(self, tmp_path) -> None:
        """Nothing to read."""
        with pytest.raises(DataFormatError):
            load_csv(_write(tmp_path, "g.csv", ""))

    def test_no_header_index_label(self, tmp_path) -> None:
        """Without a header the label column is a position."""
        data = load_csv(_write(tmp_path, "h.csv", "1,0.5,0.25\n2,1.5,2.5\n"), label_column="0", has_header=False)
        assert data.labels == (1, 2)
        np.testing.assert_array_equal(data.features, [[0.5, 0.25], [1.5, 2.5]])

    def test_features_only(self, tmp_path) -> None:
        """Unlabeled prediction input, optionally dropping a label column."""
        path = _write(tmp_path, "i.csv", "label,x1,x2\n1,0.1,0.2\n2,0.3,0.4\n")
        np.testing.assert_array_equal(load_features_csv(path, drop_column="label"), [[0.1, 0.2], [0.3, 0.4]])
        assert load_features_csv(path).shape == (2, 3)

    def test_round_trip_is_bit_exact(self, tmp_path, rng) -> None:
        """Doubles survive save_dataset_csv and load_csv unchanged."""
        X = rng.normal(size=(12, 5)) * 10.0 ** rng.integers(-8, 8, size=(12, 5))
        data = LabeledDataset(X, tuple([1] * 6 + [2] * 6))
        path = str(tmp_path / "rt.csv")
        save_dataset_csv(data, path)
        back = load_csv(path)
        np.testing.assert_array_equal(back.features, X)
        assert back.labels == data.labels

    def test_reader_helpers(self) -> None:
        """Cell cleaning mirrors what the loader accepts."""
        assert CsvDatasetReader.clean_value("  ") is None
        assert CsvDatasetReader.clean_value(float("nan")) is None
        assert CsvDatasetReader.safe_float("inf") is None
        assert CsvDatasetReader.safe_float("1e3") == 1000.0
        assert CsvDatasetReader.clean_label("07") == "07"
        assert CsvDatasetReader.clean_label("7") == 7


class TestLabeledDataset:
    """Validation of in-memory datasets."""

    def test_non_finite(self) -> None:
        """NaN features are rejected."""
        with pytest.raises(DataFormatError):
            LabeledDataset(np.array([[np.nan]]), (1,))

    def test_label_count(self) -> None:
        """One label per row."""
        with pytest.raises(DataFormatError):
            LabeledDataset(np.zeros((3, 2)), (1, 2))

    def test_class_counts(self) -> None:
        """Counts follow the sorted vocabulary."""
        data = LabeledDataset(np.zeros((5, 1)), ("b", "a", "b", "c", "b"))
        assert data.class_counts() == {"a": 1, "b": 3, "c": 1}


class TestSplits:
    """train_count and stratified_split."""

    def test_train_count(self) -> None:
        """Round to nearest, exact halves down."""
        assert train_count(0.5, 10) == 5
        assert train_count(0.5, 19) == 9
        assert train_count(0.5, 2) == 1
        assert train_count(0.7, 10) == 7

    def test_balanced_split(self, rng) -> None:
        """10 + 10 rows split 5/5 per class."""
        data = LabeledDataset(rng.normal(size=(20, 3)), tuple([1] * 10 + [2] * 10))
        train, test = stratified_split(data, 0.5, substream(1, 2))
        assert train.class_counts() == {1: 5, 2: 5}
        assert test.class_counts() == {1: 5, 2: 5}

    def test_odd_class(self, rng) -> None:
        """19 rows give 9 training and 10 test rows."""
        data = LabeledDataset(rng.normal(size=(23, 2)), tuple([1] * 19 + [2] * 4))
        train, test = stratified_split(data, 0.5, substream(1, 2))
        assert train.class_counts()[1] == 9
        assert test.class_counts()[1] == 10

    def test_reproducible_and_ordered(self, rng) -> None:
        """Same generator key, same split, original row order kept."""
        X = np.arange(30, dtype=float).reshape(15, 2)
        data = LabeledDataset(X, tuple([1] * 8 + [2] * 7))
        a_train, a_test = stratified_split(data, 0.5, substream(4, 0))
        b_train, b_test = stratified_split(data, 0.5, substream(4, 0))
        np.testing.assert_array_equal(a_train.features, b_train.features)
        np.testing.assert_array_equal(a_test.features, b_test.features)
        assert np.all(np.diff(a_train.features[:, 0]) > 0)
        assert np.all(np.diff(a_test.features[:, 0]) > 0)
        merged = np.sort(np.concatenate([a_train.features[:, 0], a_test.features[:, 0]]))
        np.testing.assert_array_equal(merged, X[:, 0])

    def test_singleton_class(self, rng) -> None:
        """A class of one cannot be split."""
        data = LabeledDataset(rng.normal(size=(4, 2)), (1, 1, 1, 2))
        with pytest.raises(InsufficientSampleError):
            stratified_split(data, 0.5, substream(0))


class TestModelFiles:
    """save_model and load_model."""

    def test_binary_round_trip(self, tmp_path) -> None:
        """The hand example reloads with its statistics intact."""
        model = fit_binary("delta2", [[0.0], [2.0]], [[1.0], [3.0]])
        path = str(tmp_path / "m.json")
        save_model(path, model)
        back = load_model(path)
        assert (back.stats.T_ff, back.stats.T_gg, back.stats.T_fg) == (0.25, 0.25, 0.125)
        assert back.rule == "delta2"
        Z = np.linspace(-1.0, 4.0, 11).reshape(-1, 1)
        np.testing.assert_array_equal(predict_binary_batch(back, Z), predict_binary_batch(model, Z))

    def test_ovo_round_trip(self, tmp_path, rng) -> None:
        """Ensembles keep their labels, members and tie stream."""
        labels = ["x"] * 4 + ["y"] * 4 + ["z"] * 4
        features = rng.normal(size=(12, 6)) + np.repeat([[0.0], [1.0], [2.0]], 4, axis=0)
        ens = fit_ovo("delta3", features, labels, seed=8)
        path = str(tmp_path / "ovo.json")
        save_model(path, ens)
        back = load_model(path)
        assert back.labels == ("x", "y", "z")
        assert back.rng_seed == 8
        Z = rng.normal(1.0, 1.0, size=(15, 6))
        np.testing.assert_array_equal(predict_ovo_batch(back, Z, 3), predict_ovo_batch(ens, Z, 3))

    def test_truncated_file(self, tmp_path) -> None:
        """Half a document is a format error."""
        path = str(tmp_path / "t.json")
        save_model(path, fit_binary("delta1", [[0.0], [2.0]], [[1.0], [3.0]]))
        raw = (tmp_path / "t.json").read_bytes()
        (tmp_path / "t.json").write_bytes(raw[: len(raw) // 2])
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_unknown_version(self, tmp_path) -> None:
        """Only version 1 is understood."""
        path = str(tmp_path / "v.json")
        save_model(path, fit_binary("delta1", [[0.0], [2.0]], [[1.0], [3.0]]))
        doc = read_json_document(path)
        doc["format_version"] = 2
        write_json_document(path, doc)
        with pytest.raises(ModelFormatError, match="format_version"):
            load_model(path)

    def test_corrupted_statistics(self, tmp_path) -> None:
        """Stored statistics must agree with the stored training data."""
        path = str(tmp_path / "s.json")
        save_model(path, fit_binary("delta1", [[0.0], [2.0]], [[1.0], [3.0]]))
        doc = read_json_document(path)
        doc["stats"]["T_ff"] = 0.3
        write_json_document(path, doc)
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_shape_mismatch(self, tmp_path) -> None:
        """Declared sizes must match the stored matrices."""
        path = str(tmp_path / "d.json")
        save_model(path, fit_binary("delta1", [[0.0], [2.0]], [[1.0], [3.0]]))
        doc = read_json_document(path)
        doc["m"] = 3
        write_json_document(path, doc)
        with pytest.raises(ModelFormatError):
            load_model(path)
