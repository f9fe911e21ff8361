"""Exception types shared across the package."""


class RoughPathsError(Exception):
    pass


class ShapeError(RoughPathsError, ValueError):
    """Raised when array dimensions are inconsistent."""


class GridError(RoughPathsError, ValueError):
    """Raised for invalid time grids, indices or partitions."""


class DataError(RoughPathsError, ValueError):
    """Raised when external data (CSV/JSON) cannot be parsed or validated."""


class ChenDefectError(RoughPathsError, ValueError):
    """Raised when a raw level-2 field fails the consistency check."""


class NumericalBlowup(RoughPathsError, ArithmeticError):
    """Raised when a solver encounters a non-finite state.

    Carries the first offending time and state so the failure is actionable.
    """

    def __init__(self, message, t=None, state=None, index=None):
        super().__init__(message)
        self.t = t
        self.state = state
        self.index = index
