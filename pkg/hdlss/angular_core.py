"""Angular-distance kernels.

``rho0`` is the angle at an anchor ``w`` between ``u - w`` and ``v - w``,
scaled to [0, 1]. ``rho_hat`` averages it over a pool of anchors (the pooled
training sample); ``rho_bar_hat`` does the same coordinate by coordinate, where
every one-dimensional angle is either 0 or pi and reduces to a sign test.

The scalar functions are the reference semantics. The ``*_matrix`` functions
evaluate the same quantities for every pair of rows of two matrices and are
what the classifiers run on.
"""
import math
import logging
from dataclasses import dataclass

import numpy as np

from hdlss.errors import DimensionMismatchError, InsufficientSampleError

logger = logging.getLogger(__name__)

# Upper bound on the number of cells in one broadcast block of the
# sign-count kernel (int32 cells, ~64 MB).
_BLOCK_CELLS = 16_000_000


def as_matrix(values, name: str = "values") -> np.ndarray:
    """Coerce to a finite 2-D float64 array (rows are observations)."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DimensionMismatchError(f"{name} must be a matrix, got {arr.ndim} dims")
    if arr.shape[1] < 1:
        raise DimensionMismatchError(f"{name} has no features")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinite entries")
    return arr


def as_vector(values, name: str = "vector") -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"{name} must be one-dimensional")
    if arr.size < 1:
        raise DimensionMismatchError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinite entries")
    return arr


@dataclass(frozen=True)
class AnchorPool:
    """The pooled sample X_1..X_m, Y_1..Y_n that anchors every angle."""

    x_anchors: np.ndarray
    y_anchors: np.ndarray

    def __post_init__(self):
        x = as_matrix(self.x_anchors, "x_anchors")
        y = as_matrix(self.y_anchors, "y_anchors")
        if x.shape[0] < 1 or y.shape[0] < 1:
            raise InsufficientSampleError("anchor pool needs at least one point per class")
        if x.shape[1] != y.shape[1]:
            raise DimensionMismatchError(
                f"anchor dimensions differ: {x.shape[1]} vs {y.shape[1]}"
            )
        object.__setattr__(self, "x_anchors", x)
        object.__setattr__(self, "y_anchors", y)

    @property
    def anchors(self) -> np.ndarray:
        return np.vstack([self.x_anchors, self.y_anchors])

    @property
    def dim(self) -> int:
        return self.x_anchors.shape[1]

    @property
    def size(self) -> int:
        return self.x_anchors.shape[0] + self.y_anchors.shape[0]


# ---------------------------
# Scalar reference kernels
# ---------------------------

def safe_acos(x: float) -> float:
    """arccos with the argument clamped to [-1, 1]."""
    return math.acos(min(1.0, max(-1.0, float(x))))


def rho0_vec(u, v, w) -> float:
    u = as_vector(u, "u")
    v = as_vector(v, "v")
    w = as_vector(w, "w")
    if not (u.shape == v.shape == w.shape):
        raise DimensionMismatchError(
            f"dimension mismatch: {u.size}, {v.size}, {w.size}"
        )
    if np.array_equal(u, w) or np.array_equal(v, w):
        return 0.0
    if np.array_equal(u, v):
        return 0.0

    a = u - w
    b = v - w
    denom = float(np.linalg.norm(a)) * float(np.linalg.norm(b))
    if denom == 0.0:
        # underflow without exact equality: degenerate branch
        return 0.0
    return safe_acos(float(np.dot(a, b)) / denom) / math.pi


def rho0_scalar(a: float, b: float, c: float) -> float:
    if a == c or b == c:
        return 0.0
    return 1.0 if (a < c) != (b < c) else 0.0


def rho_hat(u, v, pool: AnchorPool) -> float:
    u = as_vector(u, "u")
    v = as_vector(v, "v")
    if u.size != pool.dim or v.size != pool.dim:
        raise DimensionMismatchError(
            f"expected dimension {pool.dim}, got {u.size} and {v.size}"
        )
    total = 0.0
    for w in pool.x_anchors:
        total += rho0_vec(u, v, w)
    for w in pool.y_anchors:
        total += rho0_vec(u, v, w)
    return total / pool.size


def rho_bar_hat(u, v, pool: AnchorPool) -> float:
    u = as_vector(u, "u")
    v = as_vector(v, "v")
    if u.size != pool.dim or v.size != pool.dim:
        raise DimensionMismatchError(
            f"expected dimension {pool.dim}, got {u.size} and {v.size}"
        )
    W = pool.anchors
    # (u_k - w_k) and (v_k - w_k) strictly on opposite sides of zero
    du = u[None, :] - W
    dv = v[None, :] - W
    opposite = ((du < 0) & (dv > 0)) | ((du > 0) & (dv < 0))
    count = int(np.count_nonzero(opposite))
    return count / (pool.size * pool.dim)


# ---------------------------
# Pairwise matrix kernels
# ---------------------------

def _rank_bounds(points: np.ndarray, anchors: np.ndarray):
    """Per coordinate: #anchors strictly below and #anchors at or below each point."""
    n_points, d = points.shape
    below = np.empty((n_points, d), dtype=np.int32)
    at_or_below = np.empty((n_points, d), dtype=np.int32)
    sorted_anchors = np.sort(anchors, axis=0)
    for k in range(d):
        col = sorted_anchors[:, k]
        below[:, k] = np.searchsorted(col, points[:, k], side="left")
        at_or_below[:, k] = np.searchsorted(col, points[:, k], side="right")
    return below, at_or_below


def sign_count_matrix(A: np.ndarray, B: np.ndarray, anchors: np.ndarray) -> np.ndarray:
    """Total number of (coordinate, anchor) sign disagreements for each row pair.

    For coordinate k, the anchors separating a_k from b_k are exactly those lying
    strictly between them, so the count is #{w < max} - #{w <= min} (clipped at 0).
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    W = as_matrix(anchors, "anchors")
    d = W.shape[1]
    if A.shape[1] != d or B.shape[1] != d:
        raise DimensionMismatchError(
            f"expected dimension {d}, got {A.shape[1]} and {B.shape[1]}"
        )

    lo_a, hi_a = _rank_bounds(A, W)
    lo_b, hi_b = _rank_bounds(B, W)

    counts = np.zeros((A.shape[0], B.shape[0]), dtype=np.int64)
    step = max(1, _BLOCK_CELLS // max(1, B.shape[0] * d))
    for start in range(0, A.shape[0], step):
        stop = min(A.shape[0], start + step)
        # b above a: anchors in (a, b); a above b: anchors in (b, a)
        up = lo_b[None, :, :] - hi_a[start:stop, None, :]
        down = lo_a[start:stop, None, :] - hi_b[None, :, :]
        between = np.maximum(np.maximum(up, down), 0)
        counts[start:stop] = between.sum(axis=2, dtype=np.int64)
    return counts


def rho_bar_hat_matrix(A, B, anchors) -> np.ndarray:
    """rho_bar_hat(A_i, B_j) for all i, j against the given anchor pool."""
    W = as_matrix(anchors, "anchors")
    counts = sign_count_matrix(A, B, W)
    return counts / float(W.shape[0] * W.shape[1])


def _row_keys(M: np.ndarray) -> list:
    # +0.0 folds -0.0 into 0.0 so byte keys agree with == on floats
    return [row.tobytes() for row in (M + 0.0)]


def _equal_rows(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    index = {}
    for j, key in enumerate(_row_keys(B)):
        index.setdefault(key, []).append(j)
    mask = np.zeros((A.shape[0], B.shape[0]), dtype=bool)
    for i, key in enumerate(_row_keys(A)):
        for j in index.get(key, ()):
            mask[i, j] = True
    return mask


def rho_hat_matrix(A, B, anchors) -> np.ndarray:
    """rho_hat(A_i, B_j) for all i, j against the given anchor pool.

    Uses Gram expansions of (a - w)^T (b - w) after centering on the anchor mean
    (angles are translation invariant). Exact collisions with an anchor and
    identical rows are resolved with exact equality masks. One-dimensional data is
    routed to the sign-count kernel, where every angle is exactly 0 or pi.
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    W = as_matrix(anchors, "anchors")
    d = W.shape[1]
    if A.shape[1] != d or B.shape[1] != d:
        raise DimensionMismatchError(
            f"expected dimension {d}, got {A.shape[1]} and {B.shape[1]}"
        )
    if d == 1:
        return rho_bar_hat_matrix(A, B, W)

    center = W.mean(axis=0)
    Ac, Bc, Wc = A - center, B - center, W - center

    g_ab = Ac @ Bc.T
    g_aw = Ac @ Wc.T
    g_bw = Bc @ Wc.T
    g_ww = np.einsum("ij,ij->i", Wc, Wc)
    g_aa = np.einsum("ij,ij->i", Ac, Ac)
    g_bb = np.einsum("ij,ij->i", Bc, Bc)

    na2 = np.maximum(g_aa[:, None] - 2.0 * g_aw + g_ww[None, :], 0.0)
    nb2 = np.maximum(g_bb[:, None] - 2.0 * g_bw + g_ww[None, :], 0.0)
    a_hits = _equal_rows(A, W)
    b_hits = _equal_rows(B, W)
    same_ab = _equal_rows(A, B)

    n_w = W.shape[0]
    totals = np.zeros((A.shape[0], B.shape[0]), dtype=np.float64)
    step = max(1, _BLOCK_CELLS // max(1, B.shape[0] * n_w))
    for start in range(0, A.shape[0], step):
        stop = min(A.shape[0], start + step)
        inner = (
            g_ab[start:stop, :, None]
            - g_aw[start:stop, None, :]
            - g_bw[None, :, :]
            + g_ww[None, None, :]
        )
        denom = np.sqrt(na2[start:stop, None, :] * nb2[None, :, :])
        degenerate = (
            (denom == 0.0)
            | a_hits[start:stop, None, :]
            | b_hits[None, :, :]
        )
        with np.errstate(divide="ignore", invalid="ignore"):
            cos = np.where(degenerate, 1.0, inner / np.where(degenerate, 1.0, denom))
        angles = np.arccos(np.clip(cos, -1.0, 1.0))
        angles[degenerate] = 0.0
        totals[start:stop] = angles.sum(axis=2)

    result = totals / (math.pi * n_w)
    result[same_ab] = 0.0
    return result
