"""Exception hierarchy shared by every module of the package."""


class RKHMError(Exception):
    """Base class for all errors raised by :mod:`rkhm`."""


class ContractError(RKHMError, ValueError):
    """Arguments violate an operation's contract (shape, dimension, type)."""


class DomainError(RKHMError, ValueError):
    """A numeric argument lies outside the domain of the operation."""


class SpecValidationError(RKHMError, ValueError):
    """A kernel specification is malformed or violates its invariants."""


class PreconditionError(ContractError):
    """A solver was asked to run on a system it cannot exploit."""


class SingularSystemError(RKHMError, ArithmeticError):
    """Gaussian elimination met a pivot below the singularity threshold.

    Attributes
    ----------
    pivot : float
        Magnitude of the offending pivot.
    index : int
        Elimination step (row) at which it occurred.
    frequency : int or None
        Frequency index, when raised by the FFT-diagonalized solver.
    """

    def __init__(self, message, pivot, index, frequency=None):
        super().__init__(message)
        self.pivot = pivot
        self.index = index
        self.frequency = frequency


class ConvergenceError(RKHMError, ArithmeticError):
    """An iterative solver exhausted its iteration budget."""

    def __init__(self, message, residual, iterations):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
