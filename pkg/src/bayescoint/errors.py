"""Exception hierarchy.

Two families matter to callers: :class:`DataError` (bad input, CLI exit
code 2) and :class:`NumericalError` (a computation broke down, exit code 3).
"""

from __future__ import annotations


class CointegrationError(Exception):
    """Base class for all package errors."""


class DataError(CointegrationError, ValueError):
    pass


class DimensionError(DataError):
    pass


class InsufficientData(DataError):
    pass


class DomainError(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + loc)
        self.line = line
        self.column = column


class MissingDataError(ParseError):
    pass


class NumericalError(CointegrationError, ArithmeticError):
    def __init__(self, message: str, node: float | None = None):
        super().__init__(message)
        self.node = node


class DegenerateError(NumericalError):
    pass


class DegenerateFit(NumericalError):
    pass


class CollinearRegressors(NumericalError):
    pass


class SingularCovariance(NumericalError):
    def __init__(self, message: str, pivot: float | None = None):
        super().__init__(message)
        self.pivot = pivot


class LimitDiverged(NumericalError):
    pass


class GridTooNarrow(NumericalError):
    pass


class ChainFailed(NumericalError):
    pass


class GenerationStalled(NumericalError):
    pass
