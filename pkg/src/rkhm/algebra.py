"""The two concrete C*-algebras: the group algebra of Z/pZ and C^{p x p}.

:class:`CirculantElement` stores a function on Z/pZ by its values
``coeffs[z] = x(z)``; the product is cyclic convolution and the element is
identified with ``circ(coeffs)``, the circulant matrix whose first row is
``coeffs``.  :class:`DenseOperator` is a plain p x p complex matrix.  Both
are immutable and support ``+``, ``-``, scalar ``*``, the algebra product
``@`` and the involution ``.adjoint()``.  Mixing the two promotes the
circulant operand through :func:`circ_to_dense`.
"""
import threading
from numbers import Number

import numpy as np
import scipy.linalg

from . import fft
from .exceptions import ContractError, DomainError

DEFAULT_TOL = 1e-8

_cache_lock = threading.Lock()


def _frozen(a):
    a = np.array(a, dtype=complex)
    if not np.all(np.isfinite(a)):
        raise ContractError("algebra elements must have finite entries")
    a.setflags(write=False)
    return a


class _Element:
    __slots__ = ()
    __array_priority__ = 100

    def __add__(self, other):
        a, b = _coerce(self, other)
        return a._new(a._data + b._data)

    def __sub__(self, other):
        a, b = _coerce(self, other)
        return a._new(a._data - b._data)

    def __neg__(self):
        return self._new(-self._data)

    def __mul__(self, scalar):
        if isinstance(scalar, Number):
            return self._new(self._data * scalar)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if isinstance(scalar, Number):
            return self._new(self._data / scalar)
        return NotImplemented

    def __matmul__(self, other):
        a, b = _coerce(self, other)
        if isinstance(a, CirculantElement):
            return circ_mul(a, b)
        return dense_mul(a, b)

    @property
    def H(self):
        return self.adjoint()

    def __eq__(self, other):
        return type(self) is type(other) and np.array_equal(self._data, other._data)

    def __hash__(self):
        return hash((type(self).__name__, self._data.tobytes()))


class CirculantElement(_Element):
    """Element of C*(Z/pZ), stored as the first row of its circulant matrix.

    Parameters
    ----------
    coeffs : array_like, shape (p,)
        Values ``x(0), ..., x(p-1)``.
    """

    __slots__ = ("_data", "_spectrum")

    def __init__(self, coeffs):
        data = _frozen(np.atleast_1d(coeffs))
        if data.ndim != 1 or data.size < 1:
            raise ContractError("coeffs must be a nonempty 1-D sequence")
        self._data = data
        self._spectrum = None

    def _new(self, data):
        return CirculantElement(data)

    @property
    def coeffs(self):
        return self._data

    @property
    def p(self):
        return self._data.shape[0]

    @property
    def spectrum(self):
        """Eigenvalues ``Lambda_x`` (cached; racers write identical bits)."""
        if self._spectrum is None:
            spec = fft.dft(self._data)
            spec.setflags(write=False)
            with _cache_lock:
                if self._spectrum is None:
                    self._spectrum = spec
        return self._spectrum

    @classmethod
    def from_spectrum(cls, spectrum):
        return cls(fft.idft(spectrum))

    @classmethod
    def identity(cls, p):
        e = np.zeros(p, dtype=complex)
        e[0] = 1.0
        return cls(e)

    @classmethod
    def zeros(cls, p):
        return cls(np.zeros(p, dtype=complex))

    def adjoint(self):
        return circ_involution(self)

    def to_dense(self):
        return circ_to_dense(self)

    def matrix(self):
        return circ_to_dense(self).entries

    def norm(self):
        return circ_norm(self)

    def trace(self):
        return self.p * self._data[0]

    def __repr__(self):
        return f"CirculantElement({np.array2string(self._data, precision=4)})"


class DenseOperator(_Element):
    """Element of C^{p x p}.

    Parameters
    ----------
    entries : array_like, shape (p, p)
    """

    __slots__ = ("_data",)

    def __init__(self, entries):
        data = _frozen(np.atleast_2d(entries))
        if data.ndim != 2 or data.shape[0] != data.shape[1] or data.shape[0] < 1:
            raise ContractError(f"DenseOperator needs a square matrix, got shape {data.shape}")
        self._data = data

    def _new(self, data):
        return DenseOperator(data)

    @property
    def entries(self):
        return self._data

    @property
    def p(self):
        return self._data.shape[0]

    @classmethod
    def identity(cls, p):
        return cls(np.eye(p))

    @classmethod
    def zeros(cls, p):
        return cls(np.zeros((p, p)))

    def adjoint(self):
        return dense_adjoint(self)

    def to_dense(self):
        return self

    def matrix(self):
        return self._data

    def norm(self):
        return operator_norm(self)

    def trace(self):
        return dense_trace(self)

    def __repr__(self):
        return f"DenseOperator(\n{np.array2string(self._data, precision=4)})"


AlgebraValue = (CirculantElement, DenseOperator)


def _check_p(a, b):
    if a.p != b.p:
        raise ContractError(f"dimension mismatch: p={a.p} vs p={b.p}")


def _coerce(a, b):
    if not isinstance(b, AlgebraValue):
        raise ContractError(f"expected an algebra element, got {type(b).__name__}")
    _check_p(a, b)
    if type(a) is type(b):
        return a, b
    return a.to_dense(), b.to_dense()


def as_dense(a):
    """Promote any algebra value (or square array) to a :class:`DenseOperator`."""
    if isinstance(a, AlgebraValue):
        return a.to_dense()
    return DenseOperator(a)


def identity_like(a):
    return type(a).identity(a.p)


def zeros_like(a):
    return type(a).zeros(a.p)


# -- group algebra of Z/pZ ---------------------------------------------------

def circ_mul(x, y):
    """Cyclic convolution ``(x.y)(z) = sum_w x(z-w) y(w)``."""
    _check_p(x, y)
    if x.p == 1:
        return CirculantElement(x.coeffs * y.coeffs)
    return CirculantElement.from_spectrum(x.spectrum * y.spectrum)


def circ_involution(x):
    """``x*(z) = conj(x(-z))``."""
    idx = (-np.arange(x.p)) % x.p
    return CirculantElement(np.conj(x.coeffs[idx]))


def dft_spectrum(x):
    """Spectrum ``sum_z x(z) omega**(z n)`` for ``n = 0..p-1``."""
    return x.spectrum


def circ_norm(x):
    return float(np.max(np.abs(x.spectrum)))


def circ_to_dense(x):
    """``circ(x)``: row ``i`` is ``coeffs`` cyclically shifted right by ``i``."""
    p = x.p
    idx = (np.arange(p)[None, :] - np.arange(p)[:, None]) % p
    return DenseOperator(x.coeffs[idx])


# -- dense operators -----------------------------------------------------------

def dense_mul(a, b):
    _check_p(a, b)
    return DenseOperator(a.entries @ b.entries)


def dense_adjoint(a):
    return DenseOperator(a.entries.conj().T)


def dense_trace(a):
    return complex(np.trace(a.entries))


def operator_norm(a):
    """Largest singular value."""
    return float(np.linalg.norm(a.entries, 2))


def norm(a):
    return a.norm()


def trace(a):
    return complex(a.trace())


# -- order structure and spectral calculus ---------------------------------

def _scale(a):
    return max(1.0, norm(a))


def is_positive(a, tol=DEFAULT_TOL):
    """Whether ``a`` is positive (``a = b* b``) up to a relative tolerance."""
    thresh = tol * _scale(a)
    if isinstance(a, CirculantElement):
        s = a.spectrum
        return bool(np.all(np.abs(s.imag) <= thresh) and np.all(s.real >= -thresh))
    m = a.entries
    if np.linalg.norm(m - m.conj().T, 2) > thresh:
        return False
    w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    return bool(w[0] >= -thresh)


def partial_order_leq(a, b, tol=DEFAULT_TOL):
    """``a <=_A b``, i.e. ``b - a`` is positive."""
    if not isinstance(a, AlgebraValue) or not isinstance(b, AlgebraValue):
        raise ContractError("partial_order_leq compares algebra elements")
    _check_p(a, b)
    return is_positive(b - a, tol)


def hermitian_eig(a):
    """Eigendecomposition of the Hermitian part of a dense operator."""
    m = as_dense(a).entries
    return np.linalg.eigh(0.5 * (m + m.conj().T))


def positive_sqrt(a, tol=DEFAULT_TOL):
    """Unique positive square root; tiny negative eigenvalues clamp to zero."""
    if not is_positive(a, tol):
        raise DomainError("positive_sqrt requires a positive element")
    if isinstance(a, CirculantElement):
        root = np.sqrt(np.clip(a.spectrum.real, 0.0, None))
        return CirculantElement.from_spectrum(root)
    w, v = hermitian_eig(a)
    return DenseOperator((v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T)


def abs_A(a):
    """Algebra-valued absolute value ``(a* a)^(1/2)``."""
    return positive_sqrt(a.adjoint() @ a)


def expm(a):
    """Matrix exponential (scaling and squaring, Pade 13)."""
    if isinstance(a, CirculantElement):
        return CirculantElement.from_spectrum(np.exp(a.spectrum))
    return DenseOperator(scipy.linalg.expm(a.entries))


def qr_decompose(x):
    """QR factorization with a real nonnegative diagonal in ``R``.

    Householder reflections (LAPACK ``geqrf``) followed by a diagonal phase
    correction, which makes the factorization unique for nonsingular ``x``
    and deterministic for singular ``x``.

    Returns
    -------
    Q : DenseOperator
        Unitary factor.
    R : DenseOperator
        Upper triangular factor with ``R[i, i] >= 0``.
    """
    m = as_dense(x).entries
    q, r = np.linalg.qr(m)
    d = np.diag(r)
    mag = np.abs(d)
    phase = np.where(mag > 0, d / np.where(mag > 0, mag, 1.0), 1.0)
    q = q * phase[None, :]
    r = np.conj(phase)[:, None] * r
    r[np.diag_indices_from(r)] = np.abs(np.diag(r))
    return DenseOperator(q), DenseOperator(np.triu(r))


def random_circulant(p, rng, real=False):
    v = rng.standard_normal(p)
    if not real:
        v = v + 1j * rng.standard_normal(p)
    return CirculantElement(v)


def random_dense(p, rng, real=False):
    m = rng.standard_normal((p, p))
    if not real:
        m = m + 1j * rng.standard_normal((p, p))
    return DenseOperator(m)
