"""Exception types shared across the package.

Each maps to one CLI exit code: usage 1, data 2, numeric 3.
"""


class DqmError(Exception):
    exit_code = 1


class UsageError(DqmError, ValueError):
    """Bad arguments or violated preconditions."""

    exit_code = 1


class DataError(DqmError, ValueError):
    """Malformed or inconsistent input data (CSV rows, checkpoint files)."""

    exit_code = 2


class NumericError(DqmError, ArithmeticError):
    """Numerical failure such as a gimbal or polar singularity.

    ``index`` is the trajectory sample index at which the failure occurred,
    when known.
    """

    exit_code = 3

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index
