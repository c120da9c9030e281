"""
Custom exceptions and warning categories for the ellipgen library.

Provides a hierarchy of domain-specific exceptions that are decoupled from
the command-line surface. Translation to process exit codes happens in
app.main.
"""

from typing import Optional

from typing_extensions import Self


class EllipGenError(Exception):
    """
    Base exception for all ellipgen errors.

    Attributes:
        message: Human-readable error description.
        exit_code: Process exit code used by the CLI for this error.
    """

    exit_code: int = 1

    def __init__(self: Self, message: str):
        self.message = message
        super().__init__(self.message)


class ConfigurationError(EllipGenError, ValueError):
    """
    Raised when a configuration object violates its invariants.

    Examples: non-positive bandwidth, N_max < 1, unknown initialization.
    """


class ZeroGeneratorError(EllipGenError):
    """Raised when a generator carries no mass (a moment integral vanishes)."""

    def __init__(self: Self, message: str = "Generator integrates to zero"):
        super().__init__(message)


class GridTooShortError(EllipGenError):
    """
    Raised when a rescaling needs generator values beyond the tabulated
    range while the generator still carries mass near its grid end.
    """


class NormalizationError(EllipGenError):
    """
    Raised when a generator cannot be brought within tolerance of both
    identification constraints.

    Attributes:
        residuals: Deviations of the two constraints.
    """

    def __init__(self: Self, message: str, residuals: tuple[float, float]):
        super().__init__(message)
        self.residuals = residuals


class OutOfDomainError(EllipGenError):
    """Raised for arguments outside an operation's domain, e.g. u not in (0, 1)."""


class SingularSigmaError(EllipGenError):
    """Raised when a correlation matrix handed to an estimator is not invertible."""


class SingularBlockError(EllipGenError):
    """Raised when the observed block of a dispersion matrix is not invertible."""


class FactorizationError(EllipGenError):
    """Raised when a dispersion matrix cannot be Cholesky-factorized."""


class DegenerateColumnError(EllipGenError):
    """
    Raised when a data column is constant on its observed entries.

    Attributes:
        column: Zero-based index of the offending column.
    """

    def __init__(self: Self, column: int):
        super().__init__(f"Column {column} is constant on its observed entries")
        self.column = column


class InsufficientPairsError(EllipGenError):
    """
    Raised when a column pair has fewer than two pairwise-complete rows.

    Attributes:
        columns: The offending column pair.
    """

    def __init__(self: Self, columns: tuple[int, int], count: int):
        super().__init__(
            f"Columns {columns[0]} and {columns[1]} share only {count} complete rows"
        )
        self.columns = columns


class InadmissibleThetaError(EllipGenError):
    """Raised when a parameter tuple lies outside its family's admissible set."""


class GridMismatchError(EllipGenError):
    """Raised when tabulated functions that must share a grid do not."""


class TooManyMissingError(EllipGenError):
    """Raised when more rows are requested to carry missing values than exist."""


class InfeasibleSigmaError(EllipGenError):
    """Raised when a structured correlation matrix is not positive definite."""


class DataParseError(EllipGenError):
    """
    Raised when an input file cannot be parsed.

    Attributes:
        row: One-based data row of the offending cell, if known.
        column: Column name of the offending cell, if known.
    """

    def __init__(
        self: Self,
        message: str,
        row: Optional[int] = None,
        column: Optional[str] = None
    ):
        super().__init__(message)
        self.row = row
        self.column = column


class DataInvariantError(EllipGenError):
    """
    Raised when parsed data violates the DataMatrix invariants.

    Examples: a fully missing row, a column with fewer than two observations.
    """


# =============================================================================
# Warning categories
# =============================================================================

class EllipGenWarning(UserWarning):
    """Base category for recoverable numerical events."""


class TailMassWarning(EllipGenWarning):
    """A truncated integral leaves noticeable mass near the end of the grid."""


class ClampWarning(EllipGenWarning):
    """Quantile arguments fell outside the tabulated cdf range and were clamped."""


class BoundaryWarning(EllipGenWarning):
    """An estimator returned its boundary limit instead of a kernel value."""


class ProjectionWarning(EllipGenWarning):
    """The PSD projection hit its round cap before converging."""
