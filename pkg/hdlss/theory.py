"""Closed-form large-d limits of the angular statistics.

Under independent coordinates with finite moments, every rho0 evaluation
between points drawn from F or G converges to a constant that depends only on
the limiting squared mean difference per coordinate (``dmu2``) and the limiting
per-coordinate variances. These constants act as an analytic oracle for the
estimators in ``energy_stats``.
"""
import math
import logging
from dataclasses import dataclass

from hdlss.errors import TheoryError

logger = logging.getLogger(__name__)

# Cauchy marginals, pure or as a contaminant, have no finite moments
_HEAVY_TAILED_EXAMPLES = {3, 4, 5}


@dataclass(frozen=True)
class TheoryParams:
    dmu2: float
    sigma_f2: float
    sigma_g2: float
    m: int = 20
    n: int = 20

    def __post_init__(self):
        for name in ("dmu2", "sigma_f2", "sigma_g2"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise TheoryError(f"{name} must be finite, got {value!r}")
        if self.dmu2 < 0:
            raise TheoryError(f"dmu2 must be >= 0, got {self.dmu2}")
        if self.sigma_f2 <= 0 or self.sigma_g2 <= 0:
            raise TheoryError(
                f"variances must be positive, got {self.sigma_f2}, {self.sigma_g2}"
            )
        if self.m < 1 or self.n < 1:
            raise TheoryError(f"sample sizes must be positive, got m={self.m}, n={self.n}")

    def swapped(self) -> "TheoryParams":
        return TheoryParams(self.dmu2, self.sigma_g2, self.sigma_f2, self.n, self.m)


@dataclass(frozen=True)
class ThetaConstants:
    theta_ff: float
    theta_gg: float
    theta_fg: float
    theta_star: float


def _acos(x: float) -> float:
    return math.acos(min(1.0, max(-1.0, x)))


def theta_constants(p: TheoryParams) -> ThetaConstants:
    total = p.dmu2 + p.sigma_f2 + p.sigma_g2
    q_g = (p.dmu2 + p.sigma_g2) / total
    q_f = (p.dmu2 + p.sigma_f2) / total
    a_g, a_f = _acos(q_g), _acos(q_f)
    scale = math.pi * (p.m + p.n)

    theta_ff = (p.m * math.pi / 3.0 + p.n * a_g) / scale
    theta_gg = (p.m * a_f + p.n * math.pi / 3.0) / scale
    theta_fg = 0.5 - (p.m * a_g + p.n * a_f) / (2.0 * scale)
    # m and n cancel in 2*theta_fg - theta_ff - theta_gg
    theta_star = 2.0 / 3.0 - (a_g + a_f) / math.pi
    return ThetaConstants(theta_ff, theta_gg, theta_fg, theta_star)


def separation_is_zero(p: TheoryParams) -> bool:
    verdict = p.dmu2 == 0 and p.sigma_f2 == p.sigma_g2
    theta_star = theta_constants(p).theta_star
    if verdict != (abs(theta_star) <= 1e-12):
        # only reachable through near-degenerate parameters below 1e-12
        logger.warning(
            "separation verdict %s disagrees with theta*=%.3e", verdict, theta_star
        )
    return verdict


def limiting_rho0(I: str, J: str, K: str, p: TheoryParams) -> float:
    """Limit of rho0(U, V; Z) for U ~ I, V ~ J, Z ~ K, with I, J, K in {'F', 'G'}."""
    for label in (I, J, K):
        if label not in ("F", "G"):
            raise TheoryError(f"class label must be 'F' or 'G', got {label!r}")
    var = {"F": p.sigma_f2, "G": p.sigma_g2}

    def lam(a: str, b: str) -> float:
        return 0.0 if a == b else p.dmu2

    mu_ijk = lam(I, K) + var[K] if I == J else var[K]
    mu_ik = lam(I, K) + var[I] + var[K]
    mu_jk = lam(J, K) + var[J] + var[K]
    return _acos(mu_ijk / math.sqrt(mu_ik * mu_jk)) / math.pi


def pooled_limit(I: str, J: str, p: TheoryParams) -> float:
    """Limit of rho_hat(U, V) for U ~ I, V ~ J with m F-anchors and n G-anchors."""
    return (p.m * limiting_rho0(I, J, "F", p) + p.n * limiting_rho0(I, J, "G", p)) / (
        p.m + p.n
    )


def delta0_limits(p: TheoryParams):
    """Limits of l_G(Z) - l_F(Z) for Z ~ F and Z ~ G: (+theta*/2, -theta*/2)."""
    half = 0.5 * theta_constants(p).theta_star
    return half, -half


def example_theory_params(example_id: int, m: int = 20, n: int = 20) -> TheoryParams:
    if example_id in _HEAVY_TAILED_EXAMPLES:
        raise TheoryError(
            f"example {example_id} has heavy-tailed marginals without finite moments; "
            "pass explicit moments instead"
        )
    if example_id == 1:
        return TheoryParams(0.0, 1.0, 2.0, m, n)
    if example_id == 2:
        # t_3 has variance 3 / (3 - 2) = 3
        return TheoryParams(0.0, 3.0, 3.0, m, n)
    raise TheoryError(f"unknown example id {example_id}")
