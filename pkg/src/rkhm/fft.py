"""Discrete Fourier transforms with the plus-sign convention.

The forward transform used throughout the package is

    X[n] = sum_z x[z] * omega**(z*n),   omega = exp(+2*pi*1j/p),

which is the eigenvalue map of a circulant matrix whose first row is ``x``.
Power-of-two lengths go through an iterative radix-2 Cooley-Tukey kernel;
every other length is routed through Bluestein's chirp-z reformulation so
the cost stays O(p log p).  :func:`dft_direct` is the O(p^2) reference.

All transforms act on the last axis and accept arbitrary leading batch
dimensions.  An optional ``counter`` (anything with a ``count_fft`` method,
see :class:`rkhm.solver.FlopCounter`) receives the number of transforms and
complex multiply-adds performed.
"""
from functools import lru_cache

import numpy as np


def is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


@lru_cache(maxsize=64)
def _bit_reversal(n):
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    rev.setflags(write=False)
    return rev


@lru_cache(maxsize=128)
def _twiddles(size, sign):
    tw = np.exp(sign * 2j * np.pi * np.arange(size // 2) / size)
    tw.setflags(write=False)
    return tw


def _radix2(a, sign):
    n = a.shape[-1]
    lead = a.shape[:-1]
    out = a[..., _bit_reversal(n)]
    size = 2
    while size <= n:
        half = size // 2
        blocks = out.reshape(lead + (n // size, size))
        even = blocks[..., :half]
        odd = blocks[..., half:] * _twiddles(size, sign)
        out = np.concatenate([even + odd, even - odd], axis=-1).reshape(lead + (n,))
        size *= 2
    return out


def radix2_cost(n):
    """Complex multiply-adds of one radix-2 transform of length ``n``."""
    return n * (n.bit_length() - 1)


@lru_cache(maxsize=64)
def _bluestein_plan(n, sign):
    m = 1
    while m < 2 * n - 1:
        m *= 2
    k = np.arange(n)
    # k^2 mod 2n keeps the chirp argument small for large n
    chirp = np.exp(sign * 1j * np.pi * ((k * k) % (2 * n)) / n)
    kernel = np.zeros(m, dtype=complex)
    kernel[:n] = np.conj(chirp)
    kernel[m - n + 1:] = np.conj(chirp[1:])[::-1]
    kernel_hat = _radix2(kernel, +1)
    chirp.setflags(write=False)
    kernel_hat.setflags(write=False)
    return m, chirp, kernel_hat


def bluestein_cost(n):
    m = 1
    while m < 2 * n - 1:
        m *= 2
    # two length-m transforms plus the chirp pre/post multiplies and the
    # pointwise product; the kernel spectrum is planned once and not charged
    return 2 * radix2_cost(m) + m + 2 * n


def transform_cost(n):
    if n == 1:
        return 0
    return radix2_cost(n) if is_power_of_two(n) else bluestein_cost(n)


def _bluestein(a, sign):
    n = a.shape[-1]
    m, chirp, kernel_hat = _bluestein_plan(n, sign)
    padded = np.zeros(a.shape[:-1] + (m,), dtype=complex)
    padded[..., :n] = a * chirp
    conv = _radix2(_radix2(padded, +1) * kernel_hat, -1) / m
    return conv[..., :n] * chirp


def _transform(x, sign, counter):
    a = np.asarray(x, dtype=complex)
    n = a.shape[-1]
    if n == 0:
        raise ValueError("cannot transform an empty sequence")
    batch = int(np.prod(a.shape[:-1], dtype=np.int64))
    if counter is not None:
        counter.count_fft(batch, batch * transform_cost(n))
    if n == 1:
        return a.copy()
    if is_power_of_two(n):
        return _radix2(a, sign)
    return _bluestein(a, sign)


def dft(x, counter=None):
    """Forward plus-sign DFT along the last axis."""
    return _transform(x, +1, counter)


def idft(spectrum, counter=None):
    """Inverse of :func:`dft`: ``x[z] = (1/p) sum_n X[n] omega**(-z*n)``."""
    s = np.asarray(spectrum, dtype=complex)
    return _transform(s, -1, counter) / s.shape[-1]


def dft_direct(x):
    """O(p^2) evaluation of the forward transform, kept as a reference."""
    a = np.asarray(x, dtype=complex)
    p = a.shape[-1]
    z = np.arange(p)
    omega = np.exp(2j * np.pi * np.outer(z, z) / p)
    return a @ omega


def dft_matrix(p):
    """Unitary DFT matrix with entries ``omega**(i*j) / sqrt(p)``."""
    z = np.arange(p)
    return np.exp(2j * np.pi * np.outer(z, z) / p) / np.sqrt(p)
