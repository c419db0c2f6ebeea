"""
Exception hierarchy shared by every layer.

The CLI maps `GceError` subclasses to a non-zero exit status with a one-line
message; library callers can catch the specific subclass they care about.
"""

from typing import Any, List, Optional, Sequence


class GceError(Exception):
    """Base class for all domain errors raised by this package."""


class SchemaError(GceError):
    """A feature schema is malformed or inconsistent with the data."""


class DataError(GceError):
    """A data row could not be ingested."""

    def __init__(self, message: str, *, row_number: Optional[int] = None):
        self.row_number = row_number
        if row_number is not None:
            message = f"row {row_number}: {message}"
        super().__init__(message)


class ConfigError(GceError):
    """One or more configuration problems, reported together."""

    def __init__(self, problems: Sequence[str]):
        self.problems: List[str] = list(problems)
        super().__init__("; ".join(self.problems) or "invalid configuration")


class ModelError(GceError):
    """A classifier could not be trained, loaded or applied."""


class BudgetExceededError(GceError):
    """An exact enumeration would exceed its subset budget."""

    def __init__(self, count: int, budget: int):
        self.count = count
        self.budget = budget
        super().__init__(f"enumeration needs {count} subsets, budget is {budget}")


class IncomparableRecordsError(GceError):
    """Evaluation records that cannot be compared with each other."""

    def __init__(self, message: str, records: Sequence[Any] = ()):
        self.records = list(records)
        super().__init__(message)


class FixtureMismatchError(GceError):
    """A replayed fixture disagrees with its stored expectations."""

    def __init__(self, cells: Sequence[str]):
        self.cells = list(cells)
        super().__init__("fixture mismatch: " + "; ".join(self.cells))


class FoldError(GceError):
    """A fold of a run failed; wraps the underlying error with the fold id."""

    def __init__(self, fold: int, cause: BaseException):
        self.fold = fold
        self.cause = cause
        super().__init__(f"fold {fold}: {cause}")
