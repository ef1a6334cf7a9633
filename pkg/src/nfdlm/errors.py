"""Exception types shared across the toolkit.

The CLI maps these onto process exit codes: usage problems exit 1,
DataError exits 2, NumericError exits 3.
"""


class DataError(ValueError):
    """Malformed, missing, or inconsistent input data."""


class NumericError(RuntimeError):
    """Numeric failure during computation, e.g. a NaN training loss."""
