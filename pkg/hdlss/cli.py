"""Command line entry point: simulate, fit, predict, bench, theory.

Exit codes: 0 success, 1 usage problem, 2 data or file problem, 3 internal error.
"""
import sys
import logging
import argparse

import numpy as np
import pandas as pd

from hdlss.classifiers import BinaryModel, fit_binary, fit_ovo, predict_binary_batch, predict_ovo_batch
from hdlss.config import Config
from hdlss.dataio import load_csv, load_features_csv, load_model, save_model
from hdlss.distributions import new_master_seed
from hdlss.errors import (
    ConfigError,
    DataFormatError,
    DimensionMismatchError,
    InsufficientSampleError,
    ModelFormatError,
    TheoryError,
)
from hdlss.experiments import (
    ExperimentConfig,
    format_table,
    ordering_report,
    run_real_data,
    run_simulation,
    save_result,
    write_plot_data,
    write_results_csv,
)
from hdlss.monitoring import ERROR_COUNT, PREDICTION_COUNT, write_metrics
from hdlss.theory import TheoryParams, delta0_limits, separation_is_zero, theta_constants

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

_DATA_ERRORS = (DataFormatError, ModelFormatError, InsufficientSampleError, DimensionMismatchError, OSError)
_USAGE_ERRORS = (ConfigError, TheoryError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _dims(text: str):
    try:
        return Config.parse_dims(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hdlss", description="Energy-distance classifiers for high-dimensional, low-sample-size data.")
    parser.add_argument("--threads", type=int, default=Config.HDLSS_THREADS,
                        help="worker processes (env HDLSS_THREADS)")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    parser.add_argument("--no-progress", action="store_true", help="hide progress bars")
    parser.add_argument("--metrics", default=Config.METRICS_PATH,
                        help="write Prometheus counters to this textfile on exit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="Monte Carlo study on one simulation example")
    sim.add_argument("--example", type=int, required=True, choices=range(1, 6))
    sim.add_argument("--dims", type=_dims, default=Config.default_dims())
    sim.add_argument("--reps", type=int, default=Config.DEFAULT_REPS)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--classifiers", default="d0,d1,d2,d3,knn1,bayes")
    sim.add_argument("--train-per-class", type=int, default=Config.TRAIN_PER_CLASS)
    sim.add_argument("--test-per-class", type=int, default=Config.TEST_PER_CLASS)
    sim.add_argument("--out", help="result JSON (per-rep errors, T triples, config)")
    sim.add_argument("--csv", help="summary CSV")
    sim.add_argument("--plot-data", help="d vs mean error CSV")

    fit = sub.add_parser("fit", help="fit a rule on a labeled CSV")
    fit.add_argument("--rule", required=True)
    fit.add_argument("--data", required=True)
    fit.add_argument("--label", default="label")
    fit.add_argument("--no-header", action="store_true")
    fit.add_argument("--model", required=True)
    fit.add_argument("--seed", type=int, default=None, help="tie-break seed for multi-class models")

    pred = sub.add_parser("predict", help="predict a CSV with a saved model")
    pred.add_argument("--model", required=True)
    pred.add_argument("--data", required=True)
    pred.add_argument("--label", default=None, help="label column to skip (and score against)")
    pred.add_argument("--no-header", action="store_true")
    pred.add_argument("--out", required=True)

    bench = sub.add_parser("bench", help="repeated stratified splits of a labeled CSV")
    bench.add_argument("--data", required=True)
    bench.add_argument("--label", default="label")
    bench.add_argument("--no-header", action="store_true")
    bench.add_argument("--reps", type=int, default=Config.DEFAULT_REPS)
    bench.add_argument("--seed", type=int, default=None)
    bench.add_argument("--classifiers", default="d0,d1,d2,d3,knn1")
    bench.add_argument("--fraction", type=float, default=Config.SPLIT_FRACTION)
    bench.add_argument("--out", help="result JSON")
    bench.add_argument("--csv", help="summary CSV")

    theory = sub.add_parser("theory", help="large-d limits of the angular statistics")
    theory.add_argument("--dmu2", type=float, required=True)
    theory.add_argument("--sigmaf2", type=float, required=True)
    theory.add_argument("--sigmag2", type=float, required=True)
    theory.add_argument("--m", type=int, default=Config.TRAIN_PER_CLASS)
    theory.add_argument("--n", type=int, default=Config.TRAIN_PER_CLASS)
    return parser


def _resolve_seed(seed):
    if seed is None and Config.HDLSS_SEED:
        seed = int(Config.HDLSS_SEED)
    if seed is None:
        seed = new_master_seed()
    print(f"seed: {seed}")
    return seed


def _print_report(res) -> None:
    print(format_table(res))
    if res.n_classes != 2:
        for s in res.stats:
            print(f"pair ({s.label_f}, {s.label_g}): T_ff={s.T_ff:.5f} T_fg={s.T_fg:.5f} "
                  f"T_gg={s.T_gg:.5f} regime={s.regime or '-'}")
        return
    if all(c in res.classifiers for c in ("delta1", "delta2", "delta3")):
        for v in ordering_report(res):
            verdict = "n/a" if v.consistent is None else ("consistent" if v.consistent else "violated")
            print(f"d={v.d}: regime {v.regime or '-'}, predicted {v.predicted or '-'}: {verdict}")


def cmd_simulate(args) -> int:
    seed = _resolve_seed(args.seed)
    cfg = ExperimentConfig(
        example_id=args.example,
        dims=tuple(args.dims),
        reps=args.reps,
        train_per_class=args.train_per_class,
        test_per_class=args.test_per_class,
        classifiers=args.classifiers,
        master_seed=seed,
        threads=args.threads,
        show_progress=not args.no_progress,
    )
    res = run_simulation(cfg)
    _print_report(res)
    if args.out:
        save_result(res, args.out)
    if args.csv:
        write_results_csv(res, args.csv)
    if args.plot_data:
        write_plot_data(res, args.plot_data)
    return EXIT_OK


def cmd_fit(args) -> int:
    seed = _resolve_seed(args.seed)
    data = load_csv(args.data, args.label, has_header=not args.no_header)
    vocab = data.label_vocabulary
    if len(vocab) < 2:
        raise InsufficientSampleError(
            f"{args.data} holds a single class ({vocab[0]!r}); a classifier needs two"
        )
    if len(vocab) == 2:
        labels = np.asarray(data.labels, dtype=object)
        model = fit_binary(
            args.rule,
            data.features[labels == vocab[0]],
            data.features[labels == vocab[1]],
            label_f=vocab[0],
            label_g=vocab[1],
        )
    else:
        model = fit_ovo(args.rule, data.features, data.labels, seed)
    save_model(args.model, model)
    print(f"fitted {model.rule} on {data.n_rows} rows, d={data.dim}, {len(vocab)} classes -> {args.model}")
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_model(args.model)
    seed = model.rng_seed if not isinstance(model, BinaryModel) else 0
    print(f"seed: {seed}")
    has_header = not args.no_header
    features = load_features_csv(args.data, has_header=has_header, drop_column=args.label)
    if isinstance(model, BinaryModel):
        predictions = predict_binary_batch(model, features)
    else:
        predictions = predict_ovo_batch(model, features)
    PREDICTION_COUNT.labels(rule=model.rule).inc(len(predictions))

    pd.DataFrame({"row": np.arange(1, len(predictions) + 1), "prediction": list(predictions)}).to_csv(
        args.out, index=False
    )
    if args.label is not None:
        truth = load_csv(args.data, args.label, has_header=has_header).labels
        wrong = sum(1 for p, t in zip(predictions, truth) if p != t)
        print(f"error: {wrong}/{len(truth)} = {wrong / len(truth):.4f}")
    print(f"wrote {len(predictions)} predictions to {args.out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    seed = _resolve_seed(args.seed)
    data = load_csv(args.data, args.label, has_header=not args.no_header)
    cfg = ExperimentConfig(
        dataset_path=args.data,
        reps=args.reps,
        classifiers=args.classifiers,
        master_seed=seed,
        split_fraction=args.fraction,
        threads=args.threads,
        show_progress=not args.no_progress,
    )
    res = run_real_data(data, cfg)
    _print_report(res)
    if args.out:
        save_result(res, args.out)
    if args.csv:
        write_results_csv(res, args.csv)
    return EXIT_OK


def cmd_theory(args) -> int:
    print("seed: none (deterministic)")
    p = TheoryParams(args.dmu2, args.sigmaf2, args.sigmag2, args.m, args.n)
    theta = theta_constants(p)
    on_f, on_g = delta0_limits(p)
    print(f"theta_FF = {theta.theta_ff:.6f}")
    print(f"theta_GG = {theta.theta_gg:.6f}")
    print(f"theta_FG = {theta.theta_fg:.6f}")
    print(f"theta*   = {theta.theta_star:.6f}")
    print(f"delta0 limit of l_G - l_F: {on_f:+.6f} (Z ~ F), {on_g:+.6f} (Z ~ G)")
    verdict = "zero (F and G not separable)" if separation_is_zero(p) else "positive"
    print(f"limiting separation: {verdict}")
    return EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "bench": cmd_bench,
    "theory": cmd_theory,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    level = logging.DEBUG if args.verbose else getattr(logging, str(Config.LOG_LEVEL).upper(), logging.INFO)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        return _COMMANDS[args.command](args)
    except _USAGE_ERRORS as exc:
        ERROR_COUNT.labels(stage=args.command).inc()
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _DATA_ERRORS as exc:
        ERROR_COUNT.labels(stage=args.command).inc()
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:
        ERROR_COUNT.labels(stage=args.command).inc()
        logger.exception("%s failed", args.command)
        return EXIT_INTERNAL
    finally:
        if args.metrics:
            write_metrics(args.metrics)


if __name__ == "__main__":
    sys.exit(main())
