"""Exception hierarchy shared across the package.

Two broad failure families matter to callers (and to the CLI's exit
codes): problems with the data itself (``DataError``) and problems in
numerical routines (``NumericalError``).
"""


class ClimTrendError(Exception):
    """Base class for all package-specific errors."""


class DataError(ClimTrendError):
    """Malformed, inconsistent, or insufficient input data."""


class YearGapError(DataError):
    """A year-indexed table is missing one or more interior years."""

    def __init__(self, year: int, path=None):
        self.year = int(year)
        self.path = path
        where = f" in {path}" if path else ""
        super().__init__(f"missing year {year}{where}: annual series must be contiguous")


class CoverageError(DataError):
    """A series or forcing table does not cover the requested years."""


class NumericalError(ClimTrendError):
    """A numerical routine failed or produced an unusable result."""


class DegenerateDesignError(NumericalError):
    """Regression design is numerically rank-deficient or ill-conditioned."""


class OptimizationError(NumericalError):
    """An optimizer failed outright; carries the best point found, if any."""

    def __init__(self, message, best=None):
        self.best = best
        super().__init__(message)


class UnusableSampleError(ClimTrendError):
    """A bootstrap sample has too many failed replicates to summarize."""
