"""Pooled training statistics and test-point discriminants.

Two pipelines share this module:

* vector level (classifier delta0): t_FF, t_GG, t_FG built from ``rho_hat``;
* coordinatewise (classifiers delta1..delta3): T_FF, T_GG, T_FG built from
  ``rho_bar_hat``, plus the separation estimate W = 2 T_FG - T_FF - T_GG and
  S_FG = T_FF - T_GG.

Training statistics are anchored on the full training sample. Test-point
averages anchor on the training sample plus the test point, so a test pair
loses one self-anchor per member just like a training pair does.
Coordinatewise statistics are accumulated as integer sign-disagreement counts
and divided once, so they do not depend on the order of the observations. The vector-level statistics are
computed on a canonical (lexicographically sorted) ordering of each class for the
same reason.
"""
import math
import logging
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from hdlss.angular_core import (
    AnchorPool,
    as_matrix,
    as_vector,
    rho_bar_hat,
    rho_hat,
    rho_hat_matrix,
    sign_count_matrix,
)
from hdlss.errors import DimensionMismatchError, InsufficientSampleError

logger = logging.getLogger(__name__)


def _canonical(M: np.ndarray) -> np.ndarray:
    # rows sorted lexicographically (first column is the primary key)
    order = np.lexsort(M.T[::-1])
    return M[order]


@dataclass(frozen=True)
class TrainingSet:
    class_f: np.ndarray
    class_g: np.ndarray

    def __post_init__(self):
        f = as_matrix(self.class_f, "class_f")
        g = as_matrix(self.class_g, "class_g")
        if f.shape[1] != g.shape[1]:
            raise DimensionMismatchError(
                f"classes have different dimensions: {f.shape[1]} vs {g.shape[1]}"
            )
        if f.shape[0] < 2 or g.shape[0] < 2:
            raise InsufficientSampleError(
                f"insufficient sample: need at least 2 points per class, "
                f"got m={f.shape[0]}, n={g.shape[0]}"
            )
        object.__setattr__(self, "class_f", f)
        object.__setattr__(self, "class_g", g)

    @property
    def m(self) -> int:
        return self.class_f.shape[0]

    @property
    def n(self) -> int:
        return self.class_g.shape[0]

    @property
    def dim(self) -> int:
        return self.class_f.shape[1]

    @property
    def alpha(self) -> float:
        return self.m / (self.m + self.n)

    @property
    def pool(self) -> AnchorPool:
        return AnchorPool(self.class_f, self.class_g)

    def canonical(self) -> "TrainingSet":
        return TrainingSet(_canonical(self.class_f), _canonical(self.class_g))

    def swapped(self) -> "TrainingSet":
        return TrainingSet(self.class_g, self.class_f)


@dataclass(frozen=True)
class TrainStats:
    t_ff: float
    t_gg: float
    t_fg: float
    T_ff: float
    T_gg: float
    T_fg: float
    w_bar_star: float
    s_fg: float

    def as_dict(self) -> dict:
        return {f.name: float(getattr(self, f.name)) for f in fields(self)}

    @classmethod
    def from_dict(cls, payload: dict) -> "TrainStats":
        return cls(**{f.name: float(payload[f.name]) for f in fields(cls)})

    def matches(self, other: "TrainStats", tol: float = 0.0) -> bool:
        return all(
            abs(getattr(self, f.name) - getattr(other, f.name)) <= tol
            for f in fields(self)
        )


@dataclass(frozen=True)
class Discriminants:
    """Discriminant values; fields are floats for one point, arrays for a batch."""

    l_diff: object
    d1: object
    d2: object
    d3: object
    s_z: object

    def at(self, i: int) -> "Discriminants":
        return Discriminants(
            *(float(np.asarray(getattr(self, f.name))[i]) for f in fields(self))
        )


def _pair_means(counts: np.ndarray, scale: float, exclude_diagonal: bool) -> float:
    """Mean of ``counts / scale`` over all (or all off-diagonal) cells."""
    rows, cols = counts.shape
    total = int(counts.sum())
    if exclude_diagonal:
        total -= int(np.trace(counts))
        cells = rows * (rows - 1)
    else:
        cells = rows * cols
    return total / (scale * cells)


def _offdiag_mean(M: np.ndarray) -> float:
    mask = ~np.eye(M.shape[0], dtype=bool)
    return math.fsum(M[mask].tolist()) / (M.shape[0] * (M.shape[0] - 1))


def compute_train_stats(ts: TrainingSet) -> TrainStats:
    ts = ts.canonical()
    X, Y = ts.class_f, ts.class_g
    W = np.vstack([X, Y])
    scale = float(W.shape[0] * ts.dim)

    T_ff = _pair_means(sign_count_matrix(X, X, W), scale, exclude_diagonal=True)
    T_gg = _pair_means(sign_count_matrix(Y, Y, W), scale, exclude_diagonal=True)
    T_fg = _pair_means(sign_count_matrix(X, Y, W), scale, exclude_diagonal=False)

    if ts.dim == 1:
        # every angle is 0 or pi, so both pipelines count the same sign tests
        t_ff, t_gg, t_fg = T_ff, T_gg, T_fg
    else:
        t_ff = _offdiag_mean(rho_hat_matrix(X, X, W))
        t_gg = _offdiag_mean(rho_hat_matrix(Y, Y, W))
        t_fg = math.fsum(rho_hat_matrix(X, Y, W).ravel().tolist()) / (ts.m * ts.n)

    stats = TrainStats(
        t_ff=t_ff,
        t_gg=t_gg,
        t_fg=t_fg,
        T_ff=T_ff,
        T_gg=T_gg,
        T_fg=T_fg,
        w_bar_star=2.0 * T_fg - (T_ff + T_gg),
        s_fg=T_ff - T_gg,
    )
    logger.debug(
        "train stats m=%d n=%d d=%d T=(%.5f, %.5f, %.5f) W=%.5f",
        ts.m, ts.n, ts.dim, T_ff, T_gg, T_fg, stats.w_bar_star,
    )
    return stats


def _check_dim(Z: np.ndarray, ts: TrainingSet):
    if Z.shape[1] != ts.dim:
        raise DimensionMismatchError(
            f"test point has dimension {Z.shape[1]}, training data has {ts.dim}"
        )


def _row_means(M: np.ndarray) -> np.ndarray:
    return np.array([math.fsum(row) for row in M.tolist()]) / M.shape[1]


def _coordinatewise_means(Z: np.ndarray, ts: TrainingSet):
    """T_F(z), T_G(z) for every row of Z.

    The anchor pool is the training sample plus z itself. The z anchor always
    collides with z and adds no sign disagreement, so only the divisor grows.
    """
    X, Y = ts.class_f, ts.class_g
    W = np.vstack([X, Y])
    scale = float((W.shape[0] + 1) * ts.dim)
    T_f = sign_count_matrix(Z, X, W).sum(axis=1) / (scale * ts.m)
    T_g = sign_count_matrix(Z, Y, W).sum(axis=1) / (scale * ts.n)
    return T_f, T_g


def point_stats_delta0_batch(Z, ts: TrainingSet, stats: TrainStats) -> np.ndarray:
    """l_G(z) - l_F(z) for every row of Z, with z joining the anchor pool."""
    Z = as_matrix(Z, "Z")
    _check_dim(Z, ts)
    if ts.dim == 1:
        t_f, t_g = _coordinatewise_means(Z, ts)
    else:
        ts = ts.canonical()
        W = np.vstack([ts.class_f, ts.class_g])
        # angles at the z anchor are 0; rescale from N anchors to N + 1
        shrink = W.shape[0] / (W.shape[0] + 1)
        t_f = _row_means(rho_hat_matrix(Z, ts.class_f, W)) * shrink
        t_g = _row_means(rho_hat_matrix(Z, ts.class_g, W)) * shrink
    return (t_g - 0.5 * stats.t_gg) - (t_f - 0.5 * stats.t_ff)


def point_stats_delta0(z, ts: TrainingSet, stats: TrainStats) -> float:
    z = as_vector(z, "z")
    return float(point_stats_delta0_batch(z.reshape(1, -1), ts, stats)[0])


def point_discriminants_batch(
    Z, ts: TrainingSet, stats: TrainStats, include_delta0: bool = True
) -> Discriminants:
    Z = as_matrix(Z, "Z")
    _check_dim(Z, ts)
    T_f, T_g = _coordinatewise_means(Z, ts)

    L_f = T_f - 0.5 * stats.T_ff
    L_g = T_g - 0.5 * stats.T_gg
    s_z = T_f + T_g - 0.5 * (stats.T_ff + stats.T_gg) - stats.T_fg
    d1 = L_g - L_f
    d2 = 0.5 * stats.w_bar_star * d1 + 0.5 * stats.s_fg * s_z
    d3 = 0.5 * stats.w_bar_star * np.sign(d1) + 0.5 * stats.s_fg * np.sign(s_z)

    if include_delta0:
        l_diff = point_stats_delta0_batch(Z, ts, stats)
    else:
        l_diff = np.full(Z.shape[0], np.nan)
    return Discriminants(l_diff=l_diff, d1=d1, d2=d2, d3=d3, s_z=s_z)


def point_discriminants(z, ts: TrainingSet, stats: TrainStats) -> Discriminants:
    z = as_vector(z, "z")
    return point_discriminants_batch(z.reshape(1, -1), ts, stats).at(0)


def tau_psi_from_T(T_ff: float, T_gg: float, T_fg: float):
    """Separation measures (W, tau, psi) of a T triple.

    tau = (T_fg - T_ff)^2 + (T_fg - T_gg)^2 = W^2/2 + (T_ff - T_gg)^2/2.
    """
    w = 2.0 * T_fg - (T_ff + T_gg)
    s = T_ff - T_gg
    tau = 0.5 * w * w + 0.5 * s * s
    psi = 0.5 * w + 0.5 * abs(s)
    direct = (T_fg - T_ff) ** 2 + (T_fg - T_gg) ** 2
    if not math.isclose(direct, tau, rel_tol=0.0, abs_tol=1e-12):
        raise ArithmeticError(f"tau identity violated: {direct!r} != {tau!r}")
    return w, tau, psi


def separation_measures(stats: TrainStats):
    return tau_psi_from_T(stats.T_ff, stats.T_gg, stats.T_fg)


def regime_of(T_ff: float, T_gg: float, T_fg: float) -> Optional[str]:
    """'a' when max(T_ff, T_gg) > T_fg, 'b' when T_fg > max(T_ff, T_gg), else None."""
    top = max(T_ff, T_gg)
    if top > T_fg:
        return "a"
    if T_fg > top:
        return "b"
    return None


def compute_train_stats_naive(ts: TrainingSet) -> TrainStats:
    """Reference triple loop over pairs and anchors, one rho evaluation at a time.

    Cost is O((m+n)^3 d); kept as the oracle for ``compute_train_stats``.
    """
    pool = ts.pool
    X, Y = ts.class_f, ts.class_g

    def within(rows, rho):
        k = len(rows)
        vals = [rho(rows[i], rows[j], pool) for i in range(k) for j in range(k) if i != j]
        return math.fsum(vals) / (k * (k - 1))

    def between(rho):
        vals = [rho(x, y, pool) for x in X for y in Y]
        return math.fsum(vals) / (len(X) * len(Y))

    T_ff = within(X, rho_bar_hat)
    T_gg = within(Y, rho_bar_hat)
    T_fg = between(rho_bar_hat)
    return TrainStats(
        t_ff=within(X, rho_hat),
        t_gg=within(Y, rho_hat),
        t_fg=between(rho_hat),
        T_ff=T_ff,
        T_gg=T_gg,
        T_fg=T_fg,
        w_bar_star=2.0 * T_fg - (T_ff + T_gg),
        s_fg=T_ff - T_gg,
    )
