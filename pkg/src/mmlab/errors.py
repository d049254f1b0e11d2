"""Exception types raised across the package."""


class InvalidHorizonError(ValueError):
    """Raised when an evaluation time lies after the horizon."""


class UnsupportedPenaltyError(ValueError):
    pass


class AffineHypothesisError(ValueError):
    """The mid-price model does not fit the affine-mean / time-only-volatility class."""


class TruncationError(RuntimeError):
    """A truncated ODE solution lost positivity; widen ``q_max`` or refine the grid."""


class OutOfTruncationError(IndexError):
    pass


class InsufficientSampleError(ValueError):
    pass


class ConfigError(ValueError):
    """Bad run configuration. ``line`` is 1-based when the problem maps to a line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)
