"""Exception types raised across the package."""


class ShufflegradError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(ShufflegradError, ValueError):
    """A vector or matrix argument has the wrong shape."""


class IndexOutOfRange(ShufflegradError, IndexError):
    """A data-point index is outside {0, ..., m-1}."""


class InvalidParameter(ShufflegradError, ValueError):
    """A configuration value violates its documented constraints."""


class SingularCurvature(ShufflegradError, ValueError):
    """The quadratic term is numerically singular; no unique minimizer."""


class DataExhausted(ShufflegradError, RuntimeError):
    """A single-shuffle sampler was asked for more than m draws."""


class BatchesExhausted(ShufflegradError, RuntimeError):
    """The distributed simulation ran out of batches before finishing."""


class DivergenceError(ShufflegradError, RuntimeError):
    """An iterate became non-finite or exceeded the runtime safety bound."""


class DataFormatError(ShufflegradError, ValueError):
    """A dataset file could not be parsed or violates invariants."""
