"""Exception hierarchy shared across the pipeline."""


class BalanceLabError(Exception):
    """Base class for all errors raised by this package."""


class CsvParseError(BalanceLabError):
    """Malformed CSV input; carries the 1-based row number when known."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class EmptyDataError(BalanceLabError):
    """Input contained no data rows."""


class SchemaError(BalanceLabError):
    """Invalid table schema (duplicate or empty column names)."""


class SpecValidationError(BalanceLabError):
    """Analysis spec is inconsistent with the dataset.

    ``errors`` is a list of (field, message) pairs so callers can report
    every problem at once.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{f}: {m}" for f, m in self.errors))


class MultiGroupError(BalanceLabError):
    """Treatment column has more than two distinct non-missing values."""


class DegenerateColumnError(BalanceLabError):
    """A column became unusable (single level, vanished reference, ...)."""


class EmptyGroupError(BalanceLabError):
    """An operation would leave a treatment group with no rows."""


class DegenerateDensityError(BalanceLabError):
    """All values identical; no density curve can be estimated."""


class CollinearityError(BalanceLabError):
    """Design matrix is rank deficient; names the offending columns."""

    def __init__(self, message, columns):
        self.columns = list(columns)
        super().__init__(f"{message}: " + ", ".join(self.columns))


class InfeasibleCellError(BalanceLabError):
    """A sensitivity-grid cell asks for an unattainable (es, rho) pair."""


class InfeasibleTargetError(BalanceLabError):
    """Balancing target lies outside the achievable set."""

    def __init__(self, message, worst_constraint=None):
        super().__init__(message)
        self.worst_constraint = worst_constraint


class StageError(BalanceLabError):
    """Operation called out of order; names the stage it requires."""

    def __init__(self, message, required_stage):
        super().__init__(message)
        self.required_stage = required_stage


class JobCancelled(BalanceLabError):
    """A long-running job was cancelled cooperatively."""
