"""Marginal distributions of the simulated examples, their samplers and densities.

Every example draws i.i.d. coordinates from one marginal per class. Random
streams come from Philox generators keyed by a SeedSequence over
(master seed, *keys), so any cell of an experiment can be regenerated on its own.
"""
import math
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from hdlss.errors import ConfigError

logger = logging.getLogger(__name__)

# role tags for substreams
ROLE_TRAIN_F = 0
ROLE_TRAIN_G = 1
ROLE_TEST_F = 2
ROLE_TEST_G = 3
ROLE_TIES = 4
ROLE_SPLIT = 5


def substream(master_seed: int, *keys: int) -> np.random.Generator:
    """Independent Philox generator for (master_seed, *keys).

    The key tuple is hashed by numpy's SeedSequence, so adding keys (dimensions,
    classifiers, repetitions) never shifts the stream of an existing cell.
    """
    entropy = [int(master_seed) & 0xFFFFFFFFFFFFFFFF] + [int(k) for k in keys]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def new_master_seed() -> int:
    return int(np.random.SeedSequence().generate_state(1, dtype=np.uint64)[0])


class MarginalSpec(ABC):
    """Base class for a one-dimensional marginal."""

    kind = "abstract"

    @abstractmethod
    def draw(self, rng: np.random.Generator, shape) -> np.ndarray:
        ...

    @abstractmethod
    def logpdf(self, x):
        ...

    @abstractmethod
    def cdf(self, x):
        ...

    @abstractmethod
    def describe(self) -> str:
        ...


@dataclass(frozen=True)
class Normal(MarginalSpec):
    mean: float
    var: float
    kind = "normal"

    def __post_init__(self):
        if not self.var > 0:
            raise ConfigError(f"normal variance must be positive, got {self.var}")

    def draw(self, rng, shape):
        return rng.normal(self.mean, math.sqrt(self.var), size=shape)

    def logpdf(self, x):
        return stats.norm.logpdf(x, loc=self.mean, scale=math.sqrt(self.var))

    def cdf(self, x):
        return stats.norm.cdf(x, loc=self.mean, scale=math.sqrt(self.var))

    def describe(self):
        return f"N({self.mean:g},{self.var:g})"


@dataclass(frozen=True)
class Cauchy(MarginalSpec):
    loc: float
    scale: float
    kind = "cauchy"

    def __post_init__(self):
        if not self.scale > 0:
            raise ConfigError(f"cauchy scale must be positive, got {self.scale}")

    def draw(self, rng, shape):
        u = rng.random(size=shape)
        return self.loc + self.scale * np.tan(np.pi * (u - 0.5))

    def logpdf(self, x):
        return stats.cauchy.logpdf(x, loc=self.loc, scale=self.scale)

    def cdf(self, x):
        return stats.cauchy.cdf(x, loc=self.loc, scale=self.scale)

    def describe(self):
        return f"C({self.loc:g},{self.scale:g})"


@dataclass(frozen=True)
class StudentT(MarginalSpec):
    df: float
    kind = "student_t"

    def __post_init__(self):
        if not self.df > 0:
            raise ConfigError(f"degrees of freedom must be positive, got {self.df}")

    def draw(self, rng, shape):
        z = rng.standard_normal(size=shape)
        chi2 = rng.chisquare(self.df, size=shape)
        return z / np.sqrt(chi2 / self.df)

    def logpdf(self, x):
        return stats.t.logpdf(x, self.df)

    def cdf(self, x):
        return stats.t.cdf(x, self.df)

    def describe(self):
        return f"t{self.df:g}"


@dataclass(frozen=True)
class Mixture(MarginalSpec):
    w1: float
    comp1: MarginalSpec
    w2: float
    comp2: MarginalSpec
    kind = "mixture"

    def __post_init__(self):
        if self.w1 < 0 or self.w2 < 0 or not math.isclose(self.w1 + self.w2, 1.0):
            raise ConfigError(f"mixture weights must be >= 0 and sum to 1: {self.w1}, {self.w2}")

    def draw(self, rng, shape):
        pick_first = rng.random(size=shape) < self.w1
        first = self.comp1.draw(rng, shape)
        second = self.comp2.draw(rng, shape)
        return np.where(pick_first, first, second)

    def logpdf(self, x):
        with np.errstate(divide="ignore"):
            log_w = np.log([self.w1, self.w2])
        parts = np.stack(
            np.broadcast_arrays(
                log_w[0] + self.comp1.logpdf(x), log_w[1] + self.comp2.logpdf(x)
            )
        )
        return logsumexp(parts, axis=0)

    def cdf(self, x):
        return self.w1 * self.comp1.cdf(x) + self.w2 * self.comp2.cdf(x)

    def describe(self):
        return f"{self.w1:g}{self.comp1.describe()}+{self.w2:g}{self.comp2.describe()}"


@dataclass(frozen=True)
class ExampleSpec:
    id: int
    f_marginal: MarginalSpec
    g_marginal: MarginalSpec

    def describe(self) -> str:
        return f"Example {self.id}: F={self.f_marginal.describe()}, G={self.g_marginal.describe()}"


_CONTAMINANT = Cauchy(4.0, 1.0)

# C(mu, s) is location mu, scale s (not squared)
_EXAMPLES = {
    1: (Normal(1.0, 1.0), Normal(1.0, 2.0)),
    2: (Normal(0.0, 3.0), StudentT(3.0)),
    3: (Cauchy(0.0, 1.0), Cauchy(1.0, 1.0)),
    4: (Cauchy(1.0, 1.0), Cauchy(1.0, 2.0)),
    5: (
        Mixture(0.9, Normal(1.0, 1.0), 0.1, _CONTAMINANT),
        Mixture(0.9, Normal(1.0, 2.0), 0.1, _CONTAMINANT),
    ),
}


def example_spec(example_id: int) -> ExampleSpec:
    try:
        f, g = _EXAMPLES[int(example_id)]
    except (KeyError, ValueError, TypeError):
        raise ConfigError(f"example id must be one of 1..5, got {example_id!r}") from None
    return ExampleSpec(int(example_id), f, g)


def sample(spec: MarginalSpec, d: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """count x d matrix of i.i.d. draws."""
    if not isinstance(spec, MarginalSpec):
        raise ConfigError(f"not a marginal spec: {spec!r}")
    if d < 1 or count < 1:
        raise ConfigError(f"need d >= 1 and count >= 1, got d={d}, count={count}")
    return np.asarray(spec.draw(rng, (count, d)), dtype=np.float64)


def log_density(spec: MarginalSpec, x):
    out = spec.logpdf(np.asarray(x, dtype=np.float64))
    return float(out) if np.ndim(out) == 0 else out


def joint_log_density(spec: MarginalSpec, Z) -> np.ndarray:
    """Sum of coordinate log-densities for every row of Z."""
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    return np.sum(spec.logpdf(Z), axis=1)
