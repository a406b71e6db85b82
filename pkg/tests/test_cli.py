"""End-to-end tests of the hdlss command line."""
import numpy as np
import pandas as pd
import pytest

from hdlss.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from hdlss.dataio import LabeledDataset, save_dataset_csv

SIM_ARGS = ["simulate", "--example", "1", "--dims", "5,10", "--reps", "2",
            "--train-per-class", "4", "--test-per-class", "6", "--seed", "11"]


@pytest.fixture
def labeled_csv(tmp_path, rng):
    X = np.vstack([rng.normal(size=(12, 8)), rng.normal(2.0, 1.0, size=(12, 8))])
    path = tmp_path / "train.csv"
    save_dataset_csv(LabeledDataset(X, tuple(["ad"] * 12 + ["mpm"] * 12)), str(path))
    return str(path)


class TestTheory:
    """theory subcommand."""

    def test_example_one_constants(self, capsys) -> None:
        """N(1,1) vs N(1,2) prints theta* = 0.00712."""
        code = main(["theory", "--dmu2", "0", "--sigmaf2", "1", "--sigmag2", "2"])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        assert "theta*   = 0.00712" in out
        assert "positive" in out

    def test_invalid_variance(self) -> None:
        """A zero variance is a usage error."""
        assert main(["theory", "--dmu2", "0", "--sigmaf2", "0", "--sigmag2", "2"]) == EXIT_USAGE


class TestSimulate:
    """simulate subcommand."""

    def test_outputs_are_reproducible(self, tmp_path, capsys) -> None:
        """Two runs with one seed write identical files."""
        paths = []
        for k in range(2):
            out, csv = tmp_path / f"r{k}.json", tmp_path / f"r{k}.csv"
            code = main(["--threads", "1", "--no-progress", *SIM_ARGS, "--out", str(out), "--csv", str(csv)])
            assert code == EXIT_OK
            paths.append((out, csv))
        assert paths[0][0].read_bytes() == paths[1][0].read_bytes()
        assert paths[0][1].read_bytes() == paths[1][1].read_bytes()
        assert "seed: 11" in capsys.readouterr().out

    def test_thread_count_byte_identical(self, tmp_path) -> None:
        """One worker and eight workers produce the same JSON."""
        one, eight = tmp_path / "one.json", tmp_path / "eight.json"
        assert main(["--threads", "1", "--no-progress", *SIM_ARGS, "--out", str(one)]) == EXIT_OK
        assert main(["--threads", "8", "--no-progress", *SIM_ARGS, "--out", str(eight)]) == EXIT_OK
        assert one.read_bytes() == eight.read_bytes()

    def test_plot_data_and_metrics(self, tmp_path) -> None:
        """Plot CSV and the Prometheus textfile are written on request."""
        plot, metrics = tmp_path / "plot.csv", tmp_path / "metrics.prom"
        code = main(["--no-progress", "--metrics", str(metrics), *SIM_ARGS, "--plot-data", str(plot)])
        assert code == EXIT_OK
        assert len(pd.read_csv(plot)) == 12
        assert "hdlss_repetitions_total" in metrics.read_text()

    def test_unknown_flag(self) -> None:
        """argparse errors map to exit code 1."""
        assert main(["simulate", "--example", "1", "--bogus"]) == EXIT_USAGE

    def test_example_out_of_range(self) -> None:
        """Only examples 1 to 5 exist."""
        assert main(["simulate", "--example", "9"]) == EXIT_USAGE

    def test_unknown_classifier(self) -> None:
        """Classifier names are validated."""
        assert main(["--no-progress", *SIM_ARGS, "--classifiers", "svm"]) == EXIT_USAGE


class TestFitPredict:
    """fit then predict."""

    def test_binary_flow(self, tmp_path, labeled_csv, capsys) -> None:
        """A shift of 2 in 8 coordinates scores its own training data well."""
        model, preds = tmp_path / "m.json", tmp_path / "p.csv"
        assert main(["fit", "--rule", "d3", "--data", labeled_csv, "--model", str(model)]) == EXIT_OK
        code = main(["predict", "--model", str(model), "--data", labeled_csv, "--label", "label", "--out", str(preds)])
        assert code == EXIT_OK
        df = pd.read_csv(preds)
        assert list(df.columns) == ["row", "prediction"]
        assert len(df) == 24
        assert set(df["prediction"]) <= {"ad", "mpm"}
        assert "error:" in capsys.readouterr().out

    def test_multiclass_flow(self, tmp_path, rng) -> None:
        """Three classes fit a one-vs-one ensemble."""
        X = rng.normal(size=(15, 4)) + np.repeat([[0.0], [3.0], [6.0]], 5, axis=0)
        data_path = tmp_path / "three.csv"
        save_dataset_csv(LabeledDataset(X, tuple([1] * 5 + [2] * 5 + [3] * 5)), str(data_path))
        model, preds = tmp_path / "ovo.json", tmp_path / "p.csv"
        assert main(["fit", "--rule", "delta1", "--data", str(data_path), "--model", str(model), "--seed", "4"]) == EXIT_OK
        assert main(["predict", "--model", str(model), "--data", str(data_path), "--label", "label",
                     "--out", str(preds)]) == EXIT_OK
        assert set(pd.read_csv(preds)["prediction"]) <= {1, 2, 3}

    def test_single_class(self, tmp_path) -> None:
        """One class cannot be fitted."""
        path = tmp_path / "one.csv"
        path.write_text("label,x\n1,0.1\n1,0.2\n1,0.3\n")
        assert main(["fit", "--rule", "d1", "--data", str(path), "--model", str(tmp_path / "m.json")]) == EXIT_DATA

    def test_missing_model(self, tmp_path, labeled_csv) -> None:
        """An absent model file is a file problem."""
        code = main(["predict", "--model", str(tmp_path / "nope.json"), "--data", labeled_csv,
                     "--out", str(tmp_path / "p.csv")])
        assert code == EXIT_DATA

    def test_dimension_mismatch(self, tmp_path, labeled_csv) -> None:
        """Prediction input must match the fitted dimension."""
        model = tmp_path / "m.json"
        assert main(["fit", "--rule", "d1", "--data", labeled_csv, "--model", str(model)]) == EXIT_OK
        other = tmp_path / "other.csv"
        other.write_text("a,b\n0.1,0.2\n")
        assert main(["predict", "--model", str(model), "--data", str(other), "--out", str(tmp_path / "p.csv")]) == EXIT_DATA


class TestBench:
    """bench subcommand."""

    def test_small_benchmark(self, tmp_path, labeled_csv, capsys) -> None:
        """Repeated splits write a summary CSV."""
        csv = tmp_path / "bench.csv"
        code = main(["--no-progress", "bench", "--data", labeled_csv, "--reps", "3", "--seed", "2",
                     "--classifiers", "d1,d2,d3,knn1", "--csv", str(csv)])
        assert code == EXIT_OK
        df = pd.read_csv(csv)
        assert list(df["classifier"]) == ["delta1", "delta2", "delta3", "knn1"]
        assert (df["reps"] == 3).all()
        assert "regime" in capsys.readouterr().out

    def test_bayes_refused(self, labeled_csv) -> None:
        """Real data has no known densities."""
        code = main(["--no-progress", "bench", "--data", labeled_csv, "--reps", "2", "--seed", "2",
                     "--classifiers", "d1,bayes"])
        assert code == EXIT_USAGE
