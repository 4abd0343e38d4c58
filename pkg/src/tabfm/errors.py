"""Exception types shared across the package.

The CLI maps these onto exit codes: DataError -> 3, NumericError -> 4,
ConfigError (defined in cli) -> 2.
"""


class DataError(ValueError):
    """Malformed input data or a violated data precondition."""


class NumericError(RuntimeError):
    """Numeric failure: non-finite gradients, degenerate fits, and the like."""
