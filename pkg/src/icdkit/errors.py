"""Exception hierarchy shared across the toolkit.

The CLI maps these onto process exit codes: UsageError -> 1,
DataError -> 2, NumericError -> 3.
"""


class IcdkitError(Exception):
    pass


class UsageError(IcdkitError):
    pass


class DataError(IcdkitError):
    pass


class ParseError(DataError):
    """Malformed input file; message names the offending line."""


class NumericError(IcdkitError):
    """Non-finite values encountered where finite ones are required."""
