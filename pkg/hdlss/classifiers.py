"""Decision rules built on the energy statistics, plus the baselines.

``delta0`` thresholds l_G - l_F (vector-level angles). ``delta1``, ``delta2`` and
``delta3`` threshold the coordinatewise discriminants D1, D2 and D3. Each rule
assigns the first class when its discriminant is strictly positive and the second
class otherwise (an exact zero included).
"""
import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from hdlss.angular_core import as_matrix, as_vector
from hdlss.distributions import ROLE_TIES, MarginalSpec, joint_log_density, substream
from hdlss.energy_stats import (
    TrainingSet,
    TrainStats,
    compute_train_stats,
    point_discriminants_batch,
    point_stats_delta0_batch,
)
from hdlss.errors import (
    ConfigError,
    DimensionMismatchError,
    InsufficientSampleError,
)

logger = logging.getLogger(__name__)

RULES = ("delta0", "delta1", "delta2", "delta3")
_ALIASES = {"d0": "delta0", "d1": "delta1", "d2": "delta2", "d3": "delta3"}


def normalize_rule(rule: str) -> str:
    key = str(rule).strip().lower()
    key = _ALIASES.get(key, key)
    if key not in RULES:
        raise ConfigError(f"unknown rule {rule!r}; expected one of {', '.join(RULES)}")
    return key


def _plain(label):
    # numpy scalars -> python scalars so labels serialize cleanly
    return label.item() if isinstance(label, np.generic) else label


# ---------------------------
# Binary rules
# ---------------------------

@dataclass(frozen=True)
class BinaryModel:
    rule: str
    training: TrainingSet
    stats: TrainStats
    label_f: object = 1
    label_g: object = 2

    @property
    def dim(self) -> int:
        return self.training.dim

    def decision_values(self, Z) -> np.ndarray:
        Z = as_matrix(Z, "Z")
        if Z.shape[1] != self.dim:
            raise DimensionMismatchError(
                f"test data has dimension {Z.shape[1]}, model expects {self.dim}"
            )
        if self.rule == "delta0":
            return point_stats_delta0_batch(Z, self.training, self.stats)
        disc = point_discriminants_batch(Z, self.training, self.stats, include_delta0=False)
        return {"delta1": disc.d1, "delta2": disc.d2, "delta3": disc.d3}[self.rule]

    def predict_codes(self, Z) -> np.ndarray:
        """1 for the first class, 2 for the second."""
        return np.where(self.decision_values(Z) > 0, 1, 2)

    def predict(self, Z) -> np.ndarray:
        codes = self.predict_codes(Z)
        return np.array([self.label_f if c == 1 else self.label_g for c in codes], dtype=object)


def fit_binary(rule: str, class_f, class_g, label_f=1, label_g=2) -> BinaryModel:
    rule = normalize_rule(rule)
    training = TrainingSet(class_f, class_g)
    stats = compute_train_stats(training)
    return BinaryModel(rule, training, stats, _plain(label_f), _plain(label_g))


def predict_binary(model: BinaryModel, z):
    z = as_vector(z, "z")
    return model.predict(z.reshape(1, -1))[0]


def predict_binary_batch(model: BinaryModel, Z) -> np.ndarray:
    return model.predict(Z)


def decision_values(model: BinaryModel, Z) -> np.ndarray:
    return model.decision_values(Z)


# ---------------------------
# One-vs-one ensemble
# ---------------------------

@dataclass(frozen=True)
class OvoEnsemble:
    rule: str
    labels: Tuple
    models: Dict[Tuple, BinaryModel]
    rng_seed: int = 0

    @property
    def dim(self) -> int:
        return next(iter(self.models.values())).dim

    def vote_counts(self, Z) -> np.ndarray:
        """(points x labels) tally of pairwise wins."""
        Z = as_matrix(Z, "Z")
        index = {label: k for k, label in enumerate(self.labels)}
        votes = np.zeros((Z.shape[0], len(self.labels)), dtype=np.int64)
        for (a, b), model in self.models.items():
            codes = model.predict_codes(Z)
            rows = np.arange(Z.shape[0])
            winners = np.where(codes == 1, index[a], index[b])
            np.add.at(votes, (rows, winners), 1)
        return votes


def _split_by_label(features: np.ndarray, labels) -> Dict[object, np.ndarray]:
    labels = np.asarray(labels, dtype=object)
    return {lab: features[labels == lab] for lab in _vocabulary(labels)}


def _vocabulary(labels) -> Tuple:
    seen = []
    for lab in labels:
        lab = _plain(lab)
        if lab not in seen:
            seen.append(lab)
    try:
        return tuple(sorted(seen))
    except TypeError:
        return tuple(sorted(seen, key=str))


def fit_ovo(rule: str, features, labels, seed: Optional[int] = 0) -> OvoEnsemble:
    """Pairwise models over every label pair; row i of ``features`` has ``labels[i]``."""
    rule = normalize_rule(rule)
    X = as_matrix(features, "features")
    labels = [_plain(lab) for lab in labels]
    if len(labels) != X.shape[0]:
        raise DimensionMismatchError(f"{X.shape[0]} rows but {len(labels)} labels")
    groups = _split_by_label(X, labels)
    if len(groups) < 2:
        raise InsufficientSampleError("one-vs-one needs at least two classes")
    small = [str(lab) for lab, rows in groups.items() if rows.shape[0] < 2]
    if small:
        raise InsufficientSampleError(
            f"insufficient sample: classes with fewer than 2 points: {', '.join(small)}"
        )

    vocab = tuple(groups.keys())
    models = {}
    for a, b in combinations(vocab, 2):
        models[(a, b)] = fit_binary(rule, groups[a], groups[b], label_f=a, label_g=b)
    logger.debug("fitted %d pairwise %s models over %d classes", len(models), rule, len(vocab))
    return OvoEnsemble(rule, vocab, models, int(seed or 0))


def _pick(votes_row: np.ndarray, labels: Tuple, rng: np.random.Generator):
    top = votes_row.max()
    tied = np.flatnonzero(votes_row == top)
    if tied.size == 1:
        return labels[int(tied[0])]
    return labels[int(tied[rng.integers(tied.size)])]


def predict_ovo(ens: OvoEnsemble, z, rng_state: np.random.Generator):
    z = as_vector(z, "z")
    votes = ens.vote_counts(z.reshape(1, -1))[0]
    return _pick(votes, ens.labels, rng_state)


def predict_ovo_batch(ens: OvoEnsemble, Z, stream_key: int = 0) -> np.ndarray:
    """Predict every row; ties for point i draw from substream (seed, ties, key, i)."""
    Z = as_matrix(Z, "Z")
    votes = ens.vote_counts(Z)
    out = np.empty(Z.shape[0], dtype=object)
    for i in range(Z.shape[0]):
        rng = substream(ens.rng_seed, ROLE_TIES, stream_key, i)
        out[i] = _pick(votes[i], ens.labels, rng)
    return out


# ---------------------------
# Baselines
# ---------------------------

def knn1_predict_batch(train_X, train_y, Z) -> np.ndarray:
    X = as_matrix(train_X, "train_X")
    Z = as_matrix(Z, "Z")
    train_y = list(train_y)
    if X.shape[0] == 0 or len(train_y) == 0:
        raise InsufficientSampleError("1-NN needs a nonempty training set")
    if len(train_y) != X.shape[0]:
        raise DimensionMismatchError(f"{X.shape[0]} rows but {len(train_y)} labels")
    if Z.shape[1] != X.shape[1]:
        raise DimensionMismatchError(
            f"test data has dimension {Z.shape[1]}, training data has {X.shape[1]}"
        )
    # (M, N) squared distances; argmin keeps the lowest index among ties
    nearest = cdist(Z, X, "sqeuclidean").argmin(axis=1)
    out = np.empty(Z.shape[0], dtype=object)
    for i, j in enumerate(nearest):
        out[i] = _plain(train_y[int(j)])
    return out


def knn1_predict(train_X, train_y, z):
    z = as_vector(z, "z")
    return knn1_predict_batch(train_X, train_y, z.reshape(1, -1))[0]


LogDensity = Callable[[np.ndarray], np.ndarray]


def bayes_predict_batch(density_f: LogDensity, density_g: LogDensity, Z) -> np.ndarray:
    """Equal-prior Bayes rule on joint log-densities; ties go to the first class."""
    Z = as_matrix(Z, "Z")
    lf = np.asarray(density_f(Z), dtype=np.float64).reshape(-1)
    lg = np.asarray(density_g(Z), dtype=np.float64).reshape(-1)
    if np.any(np.isnan(lf)) or np.any(np.isnan(lg)):
        raise ValueError("density evaluated to NaN")
    return np.where(lf >= lg, 1, 2)


def bayes_predict(density_f: LogDensity, density_g: LogDensity, z) -> int:
    z = as_vector(z, "z")
    return int(bayes_predict_batch(density_f, density_g, z.reshape(1, -1))[0])


def marginal_log_density(spec: MarginalSpec) -> LogDensity:
    """Joint log-density of i.i.d. coordinates with the given marginal."""
    return lambda Z: joint_log_density(spec, Z)
