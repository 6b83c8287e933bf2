"""Exception types shared across the package."""


class GtdError(Exception):
    """Base class for errors raised by gtdkit."""


class ParseError(GtdError):
    """Expression or file syntax error, with a source position."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class DomainError(GtdError):
    """Evaluation requested outside the mathematical or thermodynamic domain."""


class DegenerateMetricError(GtdError):
    """The metric determinant is below the degeneracy threshold at this point."""

    def __init__(self, message: str, det: float | None = None, threshold: float | None = None):
        self.det = det
        self.threshold = threshold
        super().__init__(message)
