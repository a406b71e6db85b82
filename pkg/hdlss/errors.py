"""Exception types raised by the hdlss package.

Everything derives from ``ValueError`` so callers that only catch the
builtin keep working.
"""


class HdlssError(ValueError):
    """Base class for all library errors."""


class InsufficientSampleError(HdlssError):
    """A class has too few observations for the requested estimator."""


class DimensionMismatchError(HdlssError):
    """Vectors or matrices disagree on the feature dimension."""


class DataFormatError(HdlssError):
    """A dataset file could not be parsed."""


class ModelFormatError(HdlssError):
    """A persisted model or result document is unreadable or inconsistent."""


class ConfigError(HdlssError):
    """Invalid experiment or command configuration."""


class TheoryError(HdlssError):
    """Asymptotic constants requested outside their domain."""
