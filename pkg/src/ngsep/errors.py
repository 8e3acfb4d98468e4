"""Exception hierarchy shared by all modules."""


class NgsepError(Exception):
    """Base class for package-specific errors."""


class DataFormatError(NgsepError):
    """Malformed input file (CSV or PGM)."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)


class DegenerateDataError(NgsepError):
    """Input data violates a rank or variance requirement."""


class RankDeficiencyError(DegenerateDataError):
    """Matrix is numerically rank deficient."""


class DegenerateSampleError(DegenerateDataError):
    """Sample has zero variance."""


class SymmetryViolationError(NgsepError, ValueError):
    """Matrix required to be symmetric is not."""


class NormViolationError(NgsepError, ValueError):
    """Vector required to have unit norm does not."""


class NumericFailureError(NgsepError):
    """An iterative numeric routine failed to reach its tolerance."""


class IdentifiabilityError(NgsepError):
    """Requested quantity is undefined for the given cumulants."""
