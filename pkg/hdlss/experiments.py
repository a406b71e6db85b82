"""Seeded Monte Carlo harness and real-data benchmark.

Every (dimension, repetition) cell draws its data from its own Philox substream
keyed by (master seed, example id, d, r, role), so cells can run in any order on
any number of worker processes and the reduction below always sees the same
numbers.
"""
import math
import logging
from dataclasses import asdict, dataclass, field, replace
from itertools import combinations
from multiprocessing import Pool
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from hdlss.classifiers import (
    RULES,
    BinaryModel,
    OvoEnsemble,
    bayes_predict_batch,
    knn1_predict_batch,
    marginal_log_density,
    predict_ovo_batch,
)
from hdlss.config import Config
from hdlss.dataio import (
    LabeledDataset,
    read_json_document,
    stratified_split,
    train_count,
    write_json_document,
)
from hdlss.distributions import (
    ROLE_SPLIT,
    ROLE_TEST_F,
    ROLE_TEST_G,
    ROLE_TRAIN_F,
    ROLE_TRAIN_G,
    ExampleSpec,
    example_spec,
    new_master_seed,
    sample,
    substream,
)
from hdlss.energy_stats import (
    TrainingSet,
    compute_train_stats,
    point_discriminants_batch,
    regime_of,
)
from hdlss.errors import ConfigError, InsufficientSampleError, ModelFormatError
from hdlss.monitoring import ERROR_COUNT, PREDICTION_COUNT, REPETITION_COUNT

logger = logging.getLogger(__name__)

CLASSIFIERS = RULES + ("knn1", "bayes")
_CLASSIFIER_ALIASES = {
    "d0": "delta0",
    "d1": "delta1",
    "d2": "delta2",
    "d3": "delta3",
    "1nn": "knn1",
    "knn": "knn1",
}
RESULT_FORMAT_VERSION = 1


def normalize_classifiers(names) -> Tuple[str, ...]:
    """Canonical names in the fixed order of CLASSIFIERS, duplicates dropped."""
    if isinstance(names, str):
        names = [n for n in names.split(",") if n.strip()]
    chosen = set()
    for name in names:
        key = str(name).strip().lower()
        key = _CLASSIFIER_ALIASES.get(key, key)
        if key not in CLASSIFIERS:
            raise ConfigError(
                f"unknown classifier {name!r}; expected a subset of {', '.join(CLASSIFIERS)}"
            )
        chosen.add(key)
    if not chosen:
        raise ConfigError("no classifiers selected")
    return tuple(c for c in CLASSIFIERS if c in chosen)


# ---------------------------
# Configuration + results
# ---------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    example_id: Optional[int] = None
    dataset_path: Optional[str] = None
    dims: Tuple[int, ...] = field(default_factory=lambda: tuple(Config.default_dims()))
    reps: int = Config.DEFAULT_REPS
    train_per_class: int = Config.TRAIN_PER_CLASS
    test_per_class: int = Config.TEST_PER_CLASS
    classifiers: Tuple[str, ...] = CLASSIFIERS
    master_seed: Optional[int] = None
    split_fraction: float = Config.SPLIT_FRACTION
    # execution knobs; never part of the provenance record
    threads: int = 1
    show_progress: bool = False

    def validated(self) -> "ExperimentConfig":
        if self.reps < 1:
            raise ConfigError(f"reps must be >= 1, got {self.reps}")
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise ConfigError(f"dims must be a nonempty list of positive integers, got {self.dims}")
        if self.train_per_class < 2:
            raise ConfigError(f"train_per_class must be >= 2, got {self.train_per_class}")
        if self.test_per_class < 1:
            raise ConfigError(f"test_per_class must be >= 1, got {self.test_per_class}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        seed = self.master_seed if self.master_seed is not None else new_master_seed()
        return replace(
            self,
            dims=dims,
            classifiers=normalize_classifiers(self.classifiers),
            master_seed=int(seed),
        )

    def provenance(self) -> dict:
        record = asdict(self)
        record.pop("threads")
        record.pop("show_progress")
        record["dims"] = list(self.dims)
        record["classifiers"] = list(self.classifiers)
        return record

    @classmethod
    def from_provenance(cls, record: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__ if f not in ("threads", "show_progress")}
        kwargs = {k: v for k, v in record.items() if k in known}
        kwargs["dims"] = tuple(kwargs.get("dims", ()))
        kwargs["classifiers"] = tuple(kwargs.get("classifiers", ()))
        return cls(**kwargs)


@dataclass(frozen=True)
class CellResult:
    classifier: str
    d: int
    mean_error: float
    std_error: float
    reps: int
    errors: Tuple[float, ...]
    err_f: Tuple[float, ...] = ()
    err_g: Tuple[float, ...] = ()
    delta_hat: Tuple[float, ...] = ()


@dataclass(frozen=True)
class StatsSummary:
    """Mean T triple over repetitions for one binary problem at one dimension."""

    d: int
    T_ff: float
    T_fg: float
    T_gg: float
    regime: Optional[str]
    label_f: object = None
    label_g: object = None


@dataclass(frozen=True)
class ExperimentResult:
    kind: str
    config: dict
    master_seed: int
    cells: Tuple[CellResult, ...]
    stats: Tuple[StatsSummary, ...]
    n_classes: int = 2

    @property
    def dims(self) -> List[int]:
        return sorted({c.d for c in self.cells})

    @property
    def classifiers(self) -> List[str]:
        present = {c.classifier for c in self.cells}
        return [c for c in CLASSIFIERS if c in present]

    def cell(self, classifier: str, d: int) -> CellResult:
        for c in self.cells:
            if c.classifier == classifier and c.d == d:
                return c
        raise KeyError((classifier, d))

    def triple(self, d: int) -> Optional[StatsSummary]:
        """The T summary of the single binary problem at d, if there is one."""
        matches = [s for s in self.stats if s.d == d]
        return matches[0] if len(matches) == 1 else None

    def to_dict(self) -> dict:
        return {
            "format_version": RESULT_FORMAT_VERSION,
            "kind": self.kind,
            "config": self.config,
            "master_seed": self.master_seed,
            "n_classes": self.n_classes,
            "cells": [
                {**asdict(c), **{k: list(getattr(c, k)) for k in ("errors", "err_f", "err_g", "delta_hat")}}
                for c in self.cells
            ],
            "stats": [asdict(s) for s in self.stats],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentResult":
        if doc.get("format_version") != RESULT_FORMAT_VERSION:
            raise ModelFormatError(f"unsupported result format_version {doc.get('format_version')!r}")
        try:
            cells = tuple(
                CellResult(
                    classifier=c["classifier"],
                    d=int(c["d"]),
                    mean_error=float(c["mean_error"]),
                    std_error=float(c["std_error"]),
                    reps=int(c["reps"]),
                    errors=tuple(float(x) for x in c["errors"]),
                    err_f=tuple(float(x) for x in c.get("err_f", ())),
                    err_g=tuple(float(x) for x in c.get("err_g", ())),
                    delta_hat=tuple(float(x) for x in c.get("delta_hat", ())),
                )
                for c in doc["cells"]
            )
            stats = tuple(StatsSummary(**s) for s in doc["stats"])
            return cls(
                kind=doc["kind"],
                config=doc["config"],
                master_seed=int(doc["master_seed"]),
                cells=cells,
                stats=stats,
                n_classes=int(doc.get("n_classes", 2)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"malformed result document: {exc!r}") from exc


# ---------------------------
# Small helpers
# ---------------------------

def estimate_delta(errors_on_f: float, errors_on_g: float, alpha: float) -> float:
    """alpha * P[assigned G | Z ~ F] + (1 - alpha) * P[assigned F | Z ~ G]."""
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha * errors_on_f + (1.0 - alpha) * errors_on_g


def summarize_errors(errors: Sequence[float]) -> Tuple[float, float]:
    """(mean, sample sd / sqrt(reps)); the standard error of a single rep is 0."""
    values = [float(e) for e in errors]
    k = len(values)
    mean = math.fsum(values) / k
    if k < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (k - 1)
    return mean, math.sqrt(var) / math.sqrt(k)


def _run_tasks(worker, tasks: list, threads: int, show_progress: bool, desc: str) -> list:
    """Map worker over tasks, in order, on up to `threads` processes."""
    bar = tqdm(total=len(tasks), desc=desc, disable=not show_progress)
    outcomes = []
    try:
        if threads <= 1 or len(tasks) <= 1:
            for task in tasks:
                outcomes.append(worker(task))
                bar.update(1)
        else:
            with Pool(processes=min(threads, len(tasks))) as pool:
                for outcome in pool.imap(worker, tasks, chunksize=1):
                    outcomes.append(outcome)
                    bar.update(1)
    finally:
        bar.close()
    return outcomes


def _class_errors(pred: np.ndarray, truth: np.ndarray, label) -> Tuple[int, int]:
    mask = truth == label
    return int(np.count_nonzero(pred[mask] != label)), int(np.count_nonzero(mask))


# ---------------------------
# Simulation
# ---------------------------

@dataclass(frozen=True)
class _SimTask:
    spec: ExampleSpec
    d: int
    r: int
    master_seed: int
    train_per_class: int
    test_per_class: int
    classifiers: Tuple[str, ...]


def _draw(task: _SimTask, role: int, marginal, count: int) -> np.ndarray:
    rng = substream(task.master_seed, task.spec.id, task.d, task.r, role)
    return sample(marginal, task.d, count, rng)


def _simulate_one(task: _SimTask) -> dict:
    spec = task.spec
    X = _draw(task, ROLE_TRAIN_F, spec.f_marginal, task.train_per_class)
    Y = _draw(task, ROLE_TRAIN_G, spec.g_marginal, task.train_per_class)
    Z_f = _draw(task, ROLE_TEST_F, spec.f_marginal, task.test_per_class)
    Z_g = _draw(task, ROLE_TEST_G, spec.g_marginal, task.test_per_class)
    Z = np.vstack([Z_f, Z_g])
    truth = np.repeat([1, 2], task.test_per_class)

    training = TrainingSet(X, Y)
    stats = compute_train_stats(training)
    predictions = {}
    rules = [c for c in task.classifiers if c in RULES]
    if rules:
        disc = point_discriminants_batch(Z, training, stats, include_delta0="delta0" in rules)
        values = {"delta0": disc.l_diff, "delta1": disc.d1, "delta2": disc.d2, "delta3": disc.d3}
        for rule in rules:
            predictions[rule] = np.where(values[rule] > 0, 1, 2)
    if "knn1" in task.classifiers:
        train_y = [1] * X.shape[0] + [2] * Y.shape[0]
        predictions["knn1"] = knn1_predict_batch(np.vstack([X, Y]), train_y, Z).astype(np.int64)
    if "bayes" in task.classifiers:
        predictions["bayes"] = bayes_predict_batch(
            marginal_log_density(spec.f_marginal), marginal_log_density(spec.g_marginal), Z
        )

    outcome = {"d": task.d, "r": task.r, "triple": (stats.T_ff, stats.T_fg, stats.T_gg), "errors": {}}
    for name, pred in predictions.items():
        miss_f, n_f = _class_errors(pred, truth, 1)
        miss_g, n_g = _class_errors(pred, truth, 2)
        outcome["errors"][name] = ((miss_f + miss_g) / (n_f + n_g), miss_f / n_f, miss_g / n_g)
    return outcome


def _aggregate(outcomes: list, cfg: ExperimentConfig, dims: Sequence[int], alpha_of) -> Tuple[tuple, tuple]:
    by_key = {(o["d"], o["r"]): o for o in outcomes}
    cells = []
    summaries = []
    for d in dims:
        ordered = [by_key[(d, r)] for r in range(cfg.reps)]
        for name in cfg.classifiers:
            triples = [o["errors"][name] for o in ordered]
            errors = tuple(t[0] for t in triples)
            err_f = tuple(t[1] for t in triples)
            err_g = tuple(t[2] for t in triples)
            delta_hat = tuple(
                estimate_delta(t[1], t[2], alpha_of(o)) for t, o in zip(triples, ordered)
            )
            mean, se = summarize_errors(errors)
            cells.append(CellResult(name, d, mean, se, cfg.reps, errors, err_f, err_g, delta_hat))
        T = np.array([o["triple"] for o in ordered])
        t_ff, t_fg, t_gg = (math.fsum(T[:, k].tolist()) / cfg.reps for k in range(3))
        summaries.append(StatsSummary(d, t_ff, t_fg, t_gg, regime_of(t_ff, t_gg, t_fg)))
    return tuple(cells), tuple(summaries)


def run_simulation(cfg: ExperimentConfig, spec: Optional[ExampleSpec] = None) -> ExperimentResult:
    """Run the simulation protocol for one example across cfg.dims.

    `spec` replaces the registry lookup (used for custom generator pairs); its
    id still keys the random substreams.
    """
    cfg = cfg.validated()
    if spec is None:
        if cfg.example_id is None:
            raise ConfigError("simulation needs an example id")
        spec = example_spec(cfg.example_id)
    elif cfg.example_id is None:
        cfg = replace(cfg, example_id=spec.id)

    tasks = [
        _SimTask(spec, d, r, cfg.master_seed, cfg.train_per_class, cfg.test_per_class, cfg.classifiers)
        for d in cfg.dims
        for r in range(cfg.reps)
    ]
    logger.info(
        "simulating %s: dims=%s reps=%d seed=%d classifiers=%s",
        spec.describe(), list(cfg.dims), cfg.reps, cfg.master_seed, ",".join(cfg.classifiers),
    )
    try:
        outcomes = _run_tasks(_simulate_one, tasks, cfg.threads, cfg.show_progress, f"example {spec.id}")
    except Exception:
        ERROR_COUNT.labels(stage="simulate").inc()
        raise

    REPETITION_COUNT.labels(kind="simulation").inc(len(outcomes))
    for name in cfg.classifiers:
        PREDICTION_COUNT.labels(rule=name).inc(len(outcomes) * 2 * cfg.test_per_class)

    cells, summaries = _aggregate(outcomes, cfg, cfg.dims, lambda o: 0.5)
    return ExperimentResult("simulation", cfg.provenance(), cfg.master_seed, cells, summaries)


# ---------------------------
# Real data
# ---------------------------

@dataclass(frozen=True)
class _RealTask:
    data: LabeledDataset
    r: int
    master_seed: int
    fraction: float
    classifiers: Tuple[str, ...]


def _fit_pairwise(train: LabeledDataset) -> Dict[Tuple, tuple]:
    labels = np.asarray(train.labels, dtype=object)
    fitted = {}
    for a, b in combinations(train.label_vocabulary, 2):
        ts = TrainingSet(train.features[labels == a], train.features[labels == b])
        fitted[(a, b)] = (ts, compute_train_stats(ts))
    return fitted


def _real_one(task: _RealTask) -> dict:
    data = task.data
    split_rng = substream(task.master_seed, data.dim, task.r, ROLE_SPLIT)
    train, test = stratified_split(data, task.fraction, split_rng)
    truth = np.asarray(test.labels, dtype=object)
    fitted = _fit_pairwise(train)
    vocab = data.label_vocabulary

    predictions = {}
    for rule in (c for c in task.classifiers if c in RULES):
        models = {
            pair: BinaryModel(rule, ts, st, pair[0], pair[1]) for pair, (ts, st) in fitted.items()
        }
        if len(vocab) == 2:
            predictions[rule] = models[(vocab[0], vocab[1])].predict(test.features)
        else:
            ens = OvoEnsemble(rule, vocab, models, task.master_seed)
            predictions[rule] = predict_ovo_batch(ens, test.features, stream_key=task.r)
    if "knn1" in task.classifiers:
        predictions["knn1"] = knn1_predict_batch(train.features, train.labels, test.features)

    outcome = {
        "d": data.dim,
        "r": task.r,
        "triples": {pair: (st.T_ff, st.T_fg, st.T_gg) for pair, (_, st) in fitted.items()},
        "errors": {},
        "alpha": None,
    }
    binary = len(vocab) == 2
    if binary:
        ts = fitted[(vocab[0], vocab[1])][0]
        outcome["alpha"] = ts.alpha
    for name, pred in predictions.items():
        total = float(np.count_nonzero(pred != truth)) / truth.size
        if binary:
            miss_f, n_f = _class_errors(pred, truth, vocab[0])
            miss_g, n_g = _class_errors(pred, truth, vocab[1])
            outcome["errors"][name] = (total, miss_f / n_f, miss_g / n_g)
        else:
            outcome["errors"][name] = (total,)
    return outcome


def run_real_data(data: LabeledDataset, cfg: ExperimentConfig) -> ExperimentResult:
    """Repeated stratified splits of a labeled dataset.

    Binary problems use the rule directly; with three or more classes every rule
    runs as a one-vs-one ensemble with random tie-breaking.
    """
    cfg = cfg.validated()
    if "bayes" in cfg.classifiers:
        raise ConfigError("the Bayes rule needs known densities; it is only available in simulations")
    small = {lab: k for lab, k in data.class_counts().items() if k < 4}
    if small:
        raise InsufficientSampleError(
            f"insufficient sample: classes need at least 4 observations, got {small}"
        )
    if len(data.label_vocabulary) < 2:
        raise InsufficientSampleError("real-data benchmark needs at least two classes")

    cfg = replace(cfg, dims=(data.dim,))
    tasks = [
        _RealTask(data, r, cfg.master_seed, cfg.split_fraction, cfg.classifiers)
        for r in range(cfg.reps)
    ]
    logger.info(
        "benchmarking %d rows, d=%d, %d classes, reps=%d seed=%d",
        data.n_rows, data.dim, len(data.label_vocabulary), cfg.reps, cfg.master_seed,
    )
    try:
        outcomes = _run_tasks(_real_one, tasks, cfg.threads, cfg.show_progress, "splits")
    except Exception:
        ERROR_COUNT.labels(stage="bench").inc()
        raise

    REPETITION_COUNT.labels(kind="real_data").inc(len(outcomes))
    n_test = data.n_rows - sum(
        train_count(cfg.split_fraction, k) for k in data.class_counts().values()
    )
    for name in cfg.classifiers:
        PREDICTION_COUNT.labels(rule=name).inc(len(outcomes) * n_test)

    binary = len(data.label_vocabulary) == 2
    outcomes = sorted(outcomes, key=lambda o: o["r"])
    cells = []
    for name in cfg.classifiers:
        rows = [o["errors"][name] for o in outcomes]
        errors = tuple(t[0] for t in rows)
        mean, se = summarize_errors(errors)
        if binary:
            err_f = tuple(t[1] for t in rows)
            err_g = tuple(t[2] for t in rows)
            delta_hat = tuple(
                estimate_delta(t[1], t[2], o["alpha"]) for t, o in zip(rows, outcomes)
            )
        else:
            err_f = err_g = delta_hat = ()
        cells.append(CellResult(name, data.dim, mean, se, cfg.reps, errors, err_f, err_g, delta_hat))

    summaries = []
    for pair in combinations(data.label_vocabulary, 2):
        T = np.array([o["triples"][pair] for o in outcomes])
        t_ff, t_fg, t_gg = (math.fsum(T[:, k].tolist()) / cfg.reps for k in range(3))
        summaries.append(
            StatsSummary(data.dim, t_ff, t_fg, t_gg, regime_of(t_ff, t_gg, t_fg), pair[0], pair[1])
        )

    return ExperimentResult(
        "real_data",
        cfg.provenance(),
        cfg.master_seed,
        tuple(cells),
        tuple(summaries),
        n_classes=len(data.label_vocabulary),
    )


# ---------------------------
# Ordering diagnostic
# ---------------------------

@dataclass(frozen=True)
class OrderingVerdict:
    d: int
    regime: Optional[str]
    predicted: Optional[str]
    consistent: Optional[bool]
    errors: Tuple[float, float, float]


def _within(lower: Tuple[float, float], upper: Tuple[float, float]) -> bool:
    """lower.mean <= upper.mean up to one pooled standard error."""
    slack = math.sqrt(lower[1] ** 2 + upper[1] ** 2)
    return lower[0] <= upper[0] + slack


def ordering_verdict(regime: Optional[str], e1, e2, e3) -> Tuple[Optional[str], Optional[bool]]:
    """Each e is (mean_error, std_error) of delta1, delta2, delta3.

    Regime 'a' predicts err2 <= err3 <= err1, regime 'b' the reverse.
    """
    if regime == "a":
        return "D2<=D3<=D1", _within(e2, e3) and _within(e3, e1)
    if regime == "b":
        return "D1<=D3<=D2", _within(e1, e3) and _within(e3, e2)
    return None, None


def ordering_report(res: ExperimentResult) -> List[OrderingVerdict]:
    missing = [c for c in ("delta1", "delta2", "delta3") if c not in res.classifiers]
    if missing:
        raise ConfigError(f"ordering report needs delta1, delta2 and delta3; missing {', '.join(missing)}")
    report = []
    for d in res.dims:
        summary = res.triple(d)
        if summary is None:
            raise ConfigError(
                f"no single T triple at d={d}; multi-class results carry one per class pair"
            )
        e1, e2, e3 = (
            (res.cell(c, d).mean_error, res.cell(c, d).std_error) for c in ("delta1", "delta2", "delta3")
        )
        predicted, consistent = ordering_verdict(summary.regime, e1, e2, e3)
        report.append(
            OrderingVerdict(d, summary.regime, predicted, consistent, (e1[0], e2[0], e3[0]))
        )
    return report


# ---------------------------
# Result files
# ---------------------------

def _source_name(res: ExperimentResult) -> str:
    example = res.config.get("example_id")
    if example is not None:
        return str(example)
    return str(res.config.get("dataset_path") or "data")


def write_results_csv(res: ExperimentResult, path: str) -> None:
    rows = [
        {
            "example": _source_name(res),
            "d": c.d,
            "classifier": c.classifier,
            "mean_error": c.mean_error,
            "std_error": c.std_error,
            "reps": c.reps,
        }
        for c in sorted(res.cells, key=lambda c: (c.d, CLASSIFIERS.index(c.classifier)))
    ]
    pd.DataFrame(rows, columns=["example", "d", "classifier", "mean_error", "std_error", "reps"]).to_csv(
        path, index=False
    )


def write_plot_data(res: ExperimentResult, path: str) -> None:
    """d against mean error with a one-standard-error band, one series per classifier."""
    rows = [
        {
            "example": _source_name(res),
            "classifier": c.classifier,
            "d": c.d,
            "mean_error": c.mean_error,
            "lower": max(0.0, c.mean_error - c.std_error),
            "upper": min(1.0, c.mean_error + c.std_error),
        }
        for c in sorted(res.cells, key=lambda c: (CLASSIFIERS.index(c.classifier), c.d))
    ]
    pd.DataFrame(rows, columns=["example", "classifier", "d", "mean_error", "lower", "upper"]).to_csv(
        path, index=False
    )


def save_result(res: ExperimentResult, path: str) -> None:
    write_json_document(path, res.to_dict())


def load_result(path: str) -> ExperimentResult:
    return ExperimentResult.from_dict(read_json_document(path))


def format_table(res: ExperimentResult) -> str:
    """Percent errors as 'mean (se)', one row per d."""
    table = {}
    for d in res.dims:
        row = {}
        for name in res.classifiers:
            c = res.cell(name, d)
            row[name] = f"{100 * c.mean_error:.2f} ({100 * c.std_error:.2f})"
        summary = res.triple(d)
        if summary is not None:
            row["T_ff"] = f"{summary.T_ff:.5f}"
            row["T_fg"] = f"{summary.T_fg:.5f}"
            row["T_gg"] = f"{summary.T_gg:.5f}"
            row["regime"] = summary.regime or "-"
        table[d] = row
    df = pd.DataFrame.from_dict(table, orient="index")
    df.index.name = "d"
    return df.to_string()
