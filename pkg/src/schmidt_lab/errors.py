"""Exception types shared across the package."""


class SchmidtLabError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(SchmidtLabError, ValueError):
    """Shape mismatch, non-square operator, or configured dimension cap exceeded."""


class NumericalError(SchmidtLabError, RuntimeError):
    """A factorization or reconstruction failed its verification residual."""


class StructureError(SchmidtLabError, RuntimeError):
    """A structured-family precondition (normality, commutation) is violated.

    This is a detection signal, not a crash: callers that probe whether a
    family admits joint structure catch it and turn it into a verdict.
    """


class ProtocolError(SchmidtLabError, RuntimeError):
    """A protocol transcript is internally inconsistent."""
