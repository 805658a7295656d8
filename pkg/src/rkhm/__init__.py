"""Kernel machines with C*-algebra-valued kernels.

Regression in reproducing kernel Hilbert C*-modules over the group algebra
of Z/pZ (circulant matrices) and over dense p x p matrices: algebra
arithmetic, kernel families, block Gram solvers with FFT fast paths,
generalization-bound evaluators and a synthetic regression pipeline.
"""
from .algebra import CirculantElement, DenseOperator
from .exceptions import (ContractError, ConvergenceError, DomainError, PreconditionError,
                         RKHMError, SingularSystemError, SpecValidationError)
from .images import ImageSample, ShiftMap

__version__ = "0.1.0"

__all__ = [
    "CirculantElement", "DenseOperator", "ImageSample", "ShiftMap",
    "RKHMError", "ContractError", "DomainError", "SpecValidationError",
    "PreconditionError", "SingularSystemError", "ConvergenceError",
]
