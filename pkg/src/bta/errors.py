"""Exception types raised by the sampler and the file loaders."""


class BTAError(Exception):
    """Base class for every error raised by this package."""


class SupportViolation(BTAError, ValueError):
    """A GEV observation falls outside the support ``h(y) > 0``.

    Kernels catch this and treat the proposal as having zero density.
    """


class ShapeTooSmall(BTAError, ValueError):
    """The GEV shape is inside the excluded band ``|xi| < XI_MIN``."""


class NumericalSingularity(BTAError, ArithmeticError):
    """A ridge precision matrix could not be Cholesky factorised."""


class DegenerateScale(BTAError, ValueError):
    """A rescaling factor is too close to zero (or has the wrong sign)."""


class DataError(BTAError):
    """Malformed panel or spec file.  ``row`` and ``column`` locate the cell."""

    def __init__(self, message, *, row=None, column=None, path=None):
        self.row = row
        self.column = column
        self.path = path
        where = []
        if path is not None:
            where.append(str(path))
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
