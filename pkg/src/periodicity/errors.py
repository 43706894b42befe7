"""Exception hierarchy.

Every data-dependent failure raised by the package derives from
:class:`PeriodicityError`, so callers (and the CLI) can separate bad data
from programming errors with a single ``except`` clause.
"""

from __future__ import annotations


class PeriodicityError(Exception):
    """Base class for all structured errors raised by this package."""

    @property
    def code(self) -> str:
        return type(self).__name__


class InvalidSpec(PeriodicityError, ValueError):
    pass


# timeseries core
class EmptySeries(PeriodicityError, ValueError):
    pass


class NonMonotonic(PeriodicityError, ValueError):
    pass


class SpanTooShort(PeriodicityError, ValueError):
    pass


# spectrum
class EmptyInput(PeriodicityError, ValueError):
    pass


class TooFewSamples(PeriodicityError, ValueError):
    pass


class UnevenSampling(PeriodicityError, ValueError):
    """Window is not evenly sampled; use the Lomb-Scargle estimator instead."""


class NonPositiveFrequency(PeriodicityError, ValueError):
    pass


class EmptySpectrum(PeriodicityError, ValueError):
    pass


# intensity engine / cohort
class EmptyTrace(PeriodicityError, ValueError):
    pass


class StrideMismatch(PeriodicityError, ValueError):
    pass


class EmptyIntersection(PeriodicityError, ValueError):
    pass


class TooFewSubjects(PeriodicityError, ValueError):
    pass


# preprocess
class InvalidRange(PeriodicityError, ValueError):
    pass


class GridMismatch(PeriodicityError, ValueError):
    pass


class InvalidCutoffs(PeriodicityError, ValueError):
    pass


class RateMismatch(PeriodicityError, ValueError):
    pass


# io
class ParseError(PeriodicityError, ValueError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class MissingColumn(ParseError):
    pass


class TooFewRows(PeriodicityError, ValueError):
    pass


class IoError(PeriodicityError, OSError):
    pass
