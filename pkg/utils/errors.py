from __future__ import annotations

from enum import IntEnum
from typing import Iterable, Optional


class ExitCode(IntEnum):
    OK = 0
    USAGE = 1
    DATA = 2
    NUMERICAL = 3


class ImpreciseLogitError(Exception):
    """Base class for every error the library raises on purpose."""
    exit_code: ExitCode = ExitCode.DATA


class InvalidArgumentError(ImpreciseLogitError, ValueError):
    """An option or argument value is outside its allowed range."""
    exit_code = ExitCode.USAGE


class DataError(ImpreciseLogitError, ValueError):
    exit_code = ExitCode.DATA


class InvalidIntervalError(DataError):
    def __init__(self, lo: float, hi: float, where: Optional[str] = None):
        self.lo = lo
        self.hi = hi
        location = f" at {where}" if where else ""
        super().__init__(f"Invalid interval [{lo!r}, {hi!r}]{location}: lower bound exceeds upper bound.")


class CsvFormatError(DataError):
    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        self.row = row
        self.column = column
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column '{column}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(prefix + message)


class DimensionMismatchError(DataError):
    def __init__(self, expected: int, actual: int, what: str = "feature vector"):
        self.expected = expected
        self.actual = actual
        super().__init__(f"Dimension mismatch for {what}: expected {expected}, got {actual}.")


class UncertainDataError(DataError):
    """Raised when an operation needs precise data but rows carry intervals or unknown labels."""

    def __init__(self, message: str, rows: Iterable[int] = ()):
        self.rows = sorted(set(rows))
        shown = ", ".join(str(r) for r in self.rows[:20])
        more = f" (+{len(self.rows) - 20} more)" if len(self.rows) > 20 else ""
        super().__init__(f"{message} Offending rows: [{shown}]{more}." if self.rows else message)


class EmptyDatasetError(DataError):
    pass


class LatticeTooLargeError(DataError):
    def __init__(self, label_bits: int, cell_bits: int, max_label_combos: int, max_feature_corners: int):
        self.label_bits = label_bits
        self.cell_bits = cell_bits
        super().__init__(
            f"Brute-force lattice too large: 2^{label_bits} label completions "
            f"(limit {max_label_combos}) x 2^{cell_bits} feature corners "
            f"(limit {max_feature_corners}). Use fit_imprecise instead."
        )


class NumericalError(ImpreciseLogitError, ArithmeticError):
    exit_code = ExitCode.NUMERICAL
