"""Tests for the benchmark-file converter script."""
import numpy as np

from hdlss.dataio import load_csv
from scripts.prepare_real_dataset import clean_label, main, normalize_value


class TestHelpers:
    """Label and value cleaning."""

    def test_clean_label(self) -> None:
        """Float-formatted integer labels lose their fraction."""
        assert clean_label("1.0") == "1"
        assert clean_label("  ALL  ") == "ALL"
        assert clean_label(2) == "2"

    def test_normalize_value(self) -> None:
        """Missing markers become None."""
        assert normalize_value("?") is None
        assert normalize_value("NA") is None
        assert normalize_value(" 2.5 ") == 2.5


class TestFormats:
    """Each supported input layout converts to a loadable CSV."""

    def test_ucr(self, tmp_path, capsys) -> None:
        """Label first, whitespace separated, rows with missing values dropped."""
        train, test = tmp_path / "X_TRAIN.tsv", tmp_path / "X_TEST.tsv"
        train.write_text("1.0 0.5 0.25\n2.0 1.5 2.5\n")
        test.write_text("1.0 ? 3\n2.0 4 5\n")
        out = tmp_path / "ucr.csv"
        main([str(train), str(test), "--format", "ucr", "--out", str(out)])
        data = load_csv(str(out))
        assert data.labels == (1, 2, 2)
        np.testing.assert_array_equal(data.features, [[0.5, 0.25], [1.5, 2.5], [4.0, 5.0]])
        assert "Dropping 1 rows" in capsys.readouterr().out

    def test_compcancer(self, tmp_path) -> None:
        """Genes by samples is transposed to samples by genes."""
        src = tmp_path / "golub.txt"
        src.write_text("id\ts1\ts2\ts3\nclass\tALL\tAML\tALL\ng1\t1\t2\t3\ng2\t4\t5\t6\n")
        out = tmp_path / "golub.csv"
        main([str(src), "--format", "compcancer", "--out", str(out)])
        data = load_csv(str(out))
        assert data.labels == ("ALL", "AML", "ALL")
        assert data.feature_names == ("g1", "g2")
        np.testing.assert_array_equal(data.features, [[1, 4], [2, 5], [3, 6]])

    def test_orange(self, tmp_path) -> None:
        """The flag row marks the class column."""
        src = tmp_path / "gse.tab"
        src.write_text("gene1\tgene2\ttissue\nc\tc\td\n\t\tclass\n0.1\t0.2\tA\n0.3\t0.4\tB\n")
        out = tmp_path / "gse.csv"
        main([str(src), "--format", "orange", "--out", str(out)])
        data = load_csv(str(out))
        assert data.labels == ("A", "B")
        np.testing.assert_array_equal(data.features, [[0.1, 0.2], [0.3, 0.4]])
