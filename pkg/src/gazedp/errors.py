"""Exception hierarchy shared across the package."""


class GazeDPError(Exception):
    """Base class for all gazedp errors."""


class ValidationError(GazeDPError, ValueError):
    """An argument or input object violates a documented precondition."""


class GridMismatchError(ValidationError):
    """Two grid-shaped objects do not share the same grid."""


class GaussianDeltaError(ValidationError):
    """delta = 0 cannot be served by the Gaussian calibration.

    The Gaussian noise bound contains ln(r/delta); callers wanting a pure
    (epsilon, 0) guarantee should calibrate the Laplacian mechanism instead.
    """


class ZeroVarianceError(GazeDPError):
    """Correlation is undefined because an input has zero variance."""


class InsufficientTrialsError(ValidationError):
    """Too few Monte Carlo trials to resolve the requested delta."""


class ParseError(GazeDPError):
    """A file could not be parsed; carries the offending location."""

    def __init__(self, message: str, path: str | None = None,
                 line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}: "
        if line is not None:
            where += f"line {line}: "
        super().__init__(where + message)
