"""Exception types shared across the package.

The CLI maps these onto exit codes: invalid input -> 2, capacity -> 3,
anything numerical -> 4.
"""


class InvalidArgument(ValueError):
    pass


class CapacityError(RuntimeError):
    """Problem size exceeds the dense-diagonalization limit."""


class NumericalError(RuntimeError):
    pass


class SymmetryViolation(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


class FitFailure(NumericalError):
    pass


class UndefinedResult(NumericalError):
    pass


class EmptyWindow(NumericalError):
    pass
