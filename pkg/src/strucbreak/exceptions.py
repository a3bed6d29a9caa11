"""Exception hierarchy.

Three broad families, used by the CLI to pick exit codes: configuration
errors (bad parameters), data errors (bad input files/values), and
numerical errors (rank/singularity failures at run time).
"""


class StrucbreakError(Exception):
    """Base class for all package errors."""


class ConfigError(StrucbreakError):
    """Invalid or inconsistent configuration."""


class DataError(StrucbreakError):
    """Invalid input data."""


class NumericalError(StrucbreakError):
    """Numerical failure during computation."""


class NonFiniteInputError(DataError):
    """Input contains NaN or infinite entries."""


class RankDeficientError(NumericalError):
    """Design matrix is numerically rank deficient."""

    def __init__(self, message, smallest_singular_value=None):
        super().__init__(message)
        self.smallest_singular_value = smallest_singular_value


class SampleTooShortError(DataError):
    """Series too short for the requested lag order and split."""


class BreakGridInfeasibleError(ConfigError):
    """A candidate break fraction leaves a regime with too few rows."""

    def __init__(self, message, gamma=None):
        super().__init__(message)
        self.gamma = gamma


class InvalidTrimError(ConfigError):
    """Trimming fraction or grid step out of range."""


class SingularVarianceError(NumericalError):
    """The Wald variance matrix B(gamma) is not numerically positive definite."""

    def __init__(self, message, gamma=None):
        super().__init__(message)
        self.gamma = gamma


class SingularOmegaError(NumericalError):
    """The full-sample variance matrix is numerically singular."""


class CatalogUnknownError(ConfigError):
    """Unknown simulation design name or out-of-range catalog parameter."""


class FunctionalMismatchError(ConfigError):
    """Null distribution was simulated for a different functional or trimming."""


class NoCrossingError(NumericalError):
    """Power curve never reaches the target level on the scanned grid."""


class ColumnMissingError(DataError):
    """Referenced CSV column does not exist."""


class NonNumericCellError(DataError):
    """A referenced CSV cell is missing or not numeric."""

    def __init__(self, row, column):
        super().__init__(f"non-numeric or missing value at row {row}, column {column!r}")
        self.row = row
        self.column = column
