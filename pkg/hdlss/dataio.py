import math
import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np
import orjson
import pandas as pd

from hdlss.classifiers import BinaryModel, OvoEnsemble, normalize_rule
from hdlss.energy_stats import TrainingSet, TrainStats, compute_train_stats
from hdlss.errors import (
    DataFormatError,
    HdlssError,
    InsufficientSampleError,
    ModelFormatError,
)

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY


@dataclass(frozen=True)
class LabeledDataset:
    features: np.ndarray
    labels: Tuple
    label_vocabulary: Tuple = ()
    feature_names: Tuple = field(default=())

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        if X.ndim != 2:
            raise DataFormatError(f"features must be a matrix, got {X.ndim} dims")
        if not np.all(np.isfinite(X)):
            raise DataFormatError("features contain NaN or infinite values")
        labels = tuple(self.labels)
        if len(labels) != X.shape[0]:
            raise DataFormatError(f"{X.shape[0]} rows but {len(labels)} labels")
        vocab = tuple(self.label_vocabulary) or _ordered_vocabulary(labels)
        missing = set(labels) - set(vocab)
        if missing:
            raise DataFormatError(f"labels outside the vocabulary: {sorted(map(str, missing))}")
        names = tuple(self.feature_names) or tuple(f"f{k + 1}" for k in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise DataFormatError(f"{X.shape[1]} features but {len(names)} names")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "label_vocabulary", vocab)
        object.__setattr__(self, "feature_names", names)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> dict:
        return {lab: sum(1 for x in self.labels if x == lab) for lab in self.label_vocabulary}

    def subset(self, indices) -> "LabeledDataset":
        indices = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(
            self.features[indices],
            tuple(self.labels[i] for i in indices),
            self.label_vocabulary,
            self.feature_names,
        )


def _ordered_vocabulary(labels) -> Tuple:
    distinct = list(dict.fromkeys(labels))
    try:
        return tuple(sorted(distinct))
    except TypeError:
        return tuple(sorted(distinct, key=str))


# ---------------------------
# CSV ingestion
# ---------------------------

class CsvDatasetReader:
    def __init__(self, file_path: str, label_column: Union[str, int], has_header: bool = True):
        self.file_path = file_path
        self.label_column = label_column
        self.has_header = has_header

    @staticmethod
    def clean_value(v) -> Optional[str]:
        if v is None:
            return None
        if isinstance(v, float) and math.isnan(v):
            return None
        v = str(v).strip()
        return v or None

    @staticmethod
    def safe_float(x) -> Optional[float]:
        try:
            value = float(x)
        except (TypeError, ValueError):
            return None
        if not math.isfinite(value):
            return None
        return value

    @staticmethod
    def clean_label(v: str):
        # integer-looking labels become ints so "1" and 1 name the same class
        try:
            as_int = int(v)
        except ValueError:
            return v
        return as_int if str(as_int) == v else v

    def _resolve_label_column(self, columns) -> object:
        col = self.label_column
        if col in columns:
            return col
        if isinstance(col, str) and col.strip().lstrip("-").isdigit():
            col = int(col)
        if isinstance(col, int) and not self.has_header:
            if 0 <= col < len(columns):
                return columns[col]
        if isinstance(col, int) and self.has_header and 0 <= col < len(columns):
            return columns[col]
        raise DataFormatError(f"label column {self.label_column!r} not found in {self.file_path}")

    def _frame(self) -> pd.DataFrame:
        try:
            df = pd.read_csv(
                self.file_path,
                header=0 if self.has_header else None,
                dtype=str,
                keep_default_na=False,
                skip_blank_lines=True,
            )
        except pd.errors.ParserError as exc:
            raise DataFormatError(f"ragged rows in {self.file_path}: {exc}") from exc
        except pd.errors.EmptyDataError as exc:
            raise DataFormatError(f"{self.file_path} is empty") from exc
        return df

    def _parse_features(self, df: pd.DataFrame, feature_cols: list) -> np.ndarray:
        """Every cell through float(); rows are numbered from 1 after the header."""
        features = np.empty((len(df), len(feature_cols)), dtype=np.float64)
        for k, col in enumerate(feature_cols):
            for r, raw in enumerate(df[col].tolist()):
                cell = self.clean_value(raw)
                if cell is None:
                    raise DataFormatError(
                        f"ragged or empty cell at row {r + 1}, column {col!r} of {self.file_path}"
                    )
                value = self.safe_float(cell)
                if value is None:
                    raise DataFormatError(
                        f"non-numeric value {cell!r} at row {r + 1}, column {col!r} "
                        f"of {self.file_path}"
                    )
                features[r, k] = value
        return features

    def read_features(self, drop_column: Optional[Union[str, int]] = None) -> np.ndarray:
        """Feature matrix of an unlabeled file, optionally skipping one column."""
        df = self._frame()
        columns = list(df.columns)
        skip = None
        if drop_column is not None:
            self.label_column = drop_column
            skip = self._resolve_label_column(columns)
        return self._parse_features(df, [c for c in columns if c != skip])

    def read(self) -> LabeledDataset:
        df = self._frame()
        columns = list(df.columns)
        label_col = self._resolve_label_column(columns)
        feature_cols = [c for c in columns if c != label_col]
        if not feature_cols:
            raise DataFormatError(f"{self.file_path} has no feature columns")

        labels = []
        for r, raw in enumerate(df[label_col].tolist()):
            label = self.clean_value(raw)
            if label is None:
                raise DataFormatError(f"missing label at row {r + 1} of {self.file_path}")
            labels.append(self.clean_label(label))
        features = self._parse_features(df, feature_cols)

        logger.info(
            "loaded %s: %d rows, %d features, %d classes",
            self.file_path, len(labels), len(feature_cols), len(set(labels)),
        )
        return LabeledDataset(
            features, tuple(labels), feature_names=tuple(str(c) for c in feature_cols)
        )


def load_csv(path: str, label_column: Union[str, int] = "label", has_header: bool = True) -> LabeledDataset:
    return CsvDatasetReader(path, label_column, has_header).read()


def load_features_csv(path: str, has_header: bool = True, drop_column=None) -> np.ndarray:
    return CsvDatasetReader(path, drop_column, has_header).read_features(drop_column)


def save_dataset_csv(data: LabeledDataset, path: str, label_column: str = "label") -> None:
    df = pd.DataFrame(data.features, columns=list(data.feature_names))
    df.insert(0, label_column, list(data.labels))
    # default float formatting is the shortest round-trip repr
    df.to_csv(path, index=False)


# ---------------------------
# Stratified splitting
# ---------------------------

def train_count(fraction: float, count: int) -> int:
    """round(fraction * count) with exact halves rounded down."""
    x = fraction * count
    lower = math.floor(x)
    return lower + 1 if x - lower > 0.5 else lower


def stratified_split(data: LabeledDataset, fraction: float, rng: np.random.Generator):
    if not 0.0 < fraction < 1.0:
        raise HdlssError(f"split fraction must lie in (0, 1), got {fraction}")
    labels = np.asarray(data.labels, dtype=object)
    train_idx = []
    for lab in data.label_vocabulary:
        rows = np.flatnonzero(labels == lab)
        if rows.size < 2:
            raise InsufficientSampleError(
                f"class {lab!r} has {rows.size} observation(s); need at least 2 to split"
            )
        k = train_count(fraction, rows.size)
        train_idx.extend(rng.choice(rows, size=k, replace=False).tolist())

    train_mask = np.zeros(data.n_rows, dtype=bool)
    train_mask[train_idx] = True
    # both halves keep the original row order
    return data.subset(np.flatnonzero(train_mask)), data.subset(np.flatnonzero(~train_mask))


# ---------------------------
# JSON documents
# ---------------------------

def write_json_document(path: str, payload: dict) -> None:
    with open(path, "wb") as f:
        f.write(orjson.dumps(payload, option=JSON_OPTIONS))
        f.write(b"\n")


def read_json_document(path: str) -> dict:
    with open(path, "rb") as f:
        raw = f.read()
    try:
        payload = orjson.loads(raw)
    except orjson.JSONDecodeError as exc:
        raise ModelFormatError(f"{path} is not a valid document (truncated?): {exc}") from exc
    if not isinstance(payload, dict):
        raise ModelFormatError(f"{path} does not hold a JSON object")
    return payload


def _binary_to_dict(model: BinaryModel) -> dict:
    ts = model.training
    return {
        "rule": model.rule,
        "d": ts.dim,
        "m": ts.m,
        "n": ts.n,
        "label_f": model.label_f,
        "label_g": model.label_g,
        "class_f": ts.class_f,
        "class_g": ts.class_g,
        "stats": model.stats.as_dict(),
    }


def _binary_from_dict(doc: dict) -> BinaryModel:
    try:
        rule = normalize_rule(doc["rule"])
        class_f = np.asarray(doc["class_f"], dtype=np.float64)
        class_g = np.asarray(doc["class_g"], dtype=np.float64)
        stored = TrainStats.from_dict(doc["stats"])
        d, m, n = int(doc["d"]), int(doc["m"]), int(doc["n"])
        label_f, label_g = doc["label_f"], doc["label_g"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model document: {exc!r}") from exc

    if class_f.ndim != 2 or class_g.ndim != 2:
        raise ModelFormatError("class matrices must be two-dimensional")
    if class_f.shape != (m, d) or class_g.shape != (n, d):
        raise ModelFormatError(
            f"declared shape (d={d}, m={m}, n={n}) does not match stored matrices "
            f"{class_f.shape} / {class_g.shape}"
        )
    training = TrainingSet(class_f, class_g)
    recomputed = compute_train_stats(training)
    if not recomputed.matches(stored, tol=1e-12):
        raise ModelFormatError("stored statistics do not match the stored training data")
    return BinaryModel(rule, training, stored, label_f, label_g)


def save_model(path: str, model: Union[BinaryModel, OvoEnsemble]) -> None:
    if isinstance(model, BinaryModel):
        doc = {"format_version": FORMAT_VERSION, "kind": "binary", **_binary_to_dict(model)}
    elif isinstance(model, OvoEnsemble):
        doc = {
            "format_version": FORMAT_VERSION,
            "kind": "ovo",
            "rule": model.rule,
            "labels": list(model.labels),
            "rng_seed": model.rng_seed,
            "models": [_binary_to_dict(m) for m in model.models.values()],
        }
    else:
        raise TypeError(f"cannot save {type(model).__name__}")
    write_json_document(path, doc)
    logger.info("saved %s model to %s", doc["kind"], path)


def load_model(path: str) -> Union[BinaryModel, OvoEnsemble]:
    doc = read_json_document(path)
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format_version {version!r} in {path}")
    kind = doc.get("kind")
    if kind == "binary":
        return _binary_from_dict(doc)
    if kind == "ovo":
        try:
            labels = tuple(doc["labels"])
            members = [_binary_from_dict(m) for m in doc["models"]]
            rng_seed = int(doc["rng_seed"])
            rule = normalize_rule(doc["rule"])
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ModelFormatError):
                raise
            raise ModelFormatError(f"malformed ensemble document: {exc!r}") from exc
        models = {(mdl.label_f, mdl.label_g): mdl for mdl in members}
        expected = len(labels) * (len(labels) - 1) // 2
        if len(labels) < 2 or len(models) != expected:
            raise ModelFormatError(
                f"ensemble over {len(labels)} labels must hold {expected} pairwise models, "
                f"found {len(models)}"
            )
        return OvoEnsemble(rule, labels, models, rng_seed)
    raise ModelFormatError(f"unknown model kind {kind!r} in {path}")
