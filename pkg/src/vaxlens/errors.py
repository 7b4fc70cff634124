"""Exception hierarchy.

Two broad families matter to the CLI exit-code mapping: data-side problems
(bad schema documents, bad CSV cells, impossible filters) and numeric-side
problems (invalid hyperparameters, unfittable models, shape mismatches).
"""

from __future__ import annotations


class VaxlensError(Exception):
    """Base class for all errors raised by this package."""


# --- data-side (CLI exit code 3) -------------------------------------------


class SchemaError(VaxlensError):
    """Malformed schema document. Carries the offending 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DataError(VaxlensError):
    """A CSV cell or column violates the schema (unseen level, non-finite value)."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)


class QueryError(VaxlensError):
    """Cohort filter referenced an unknown feature or level."""


class SplitError(VaxlensError):
    """Stratified split impossible (a class has too few rows)."""


class CohortError(VaxlensError):
    """Cohort too small to explain."""


# --- numeric-side (CLI exit code 4) -----------------------------------------


class ConfigError(VaxlensError):
    """Invalid configuration value (hyperparameter out of range, bad mode)."""


class FitError(VaxlensError):
    """Model cannot be fitted on the given data (e.g. single-class target)."""


class ShapeError(VaxlensError):
    """Matrix width does not match what a fitted object expects."""


class FoldError(VaxlensError):
    """Cross-validation folds cannot be formed (class count below fold count)."""


class EvalError(VaxlensError):
    """Evaluation requested on degenerate input (e.g. empty label vector)."""
