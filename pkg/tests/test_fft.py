import numpy as np
import pytest

from rkhm import fft
from rkhm.solver import FlopCounter


def convolve_direct(x, y):
    p = len(x)
    return np.array([sum(x[(z - w) % p] * y[w] for w in range(p)) for z in range(p)])


@pytest.mark.parametrize("p", [1, 2, 3, 4, 5, 7, 8, 12, 16, 31, 32, 100])
def test_fast_transform_matches_direct_sum(p, rng):
    x = rng.standard_normal((3, p)) + 1j * rng.standard_normal((3, p))
    np.testing.assert_allclose(fft.dft(x), fft.dft_direct(x), atol=1e-10 * p)


@pytest.mark.parametrize("p", [2, 3, 6, 8, 13])
def test_inverse_round_trip(p, rng):
    x = rng.standard_normal(p) + 1j * rng.standard_normal(p)
    np.testing.assert_allclose(fft.idft(fft.dft(x)), x, atol=1e-12)


def test_plus_sign_convention():
    omega = np.exp(2j * np.pi / 3)
    np.testing.assert_allclose(fft.dft([0, 1, 0]), [1, omega, omega ** 2], atol=1e-14)
    np.testing.assert_allclose(fft.dft(np.ones(4)), [4, 0, 0, 0], atol=1e-14)
    np.testing.assert_allclose(fft.dft([1, 0, 0, 0]), np.ones(4), atol=1e-14)


@pytest.mark.parametrize("p", [5, 8])
def test_convolution_theorem(p, rng):
    x, y = rng.standard_normal((2, p))
    np.testing.assert_allclose(fft.idft(fft.dft(x) * fft.dft(y)), convolve_direct(x, y), atol=1e-12)


def test_dft_matrix_is_unitary():
    f = fft.dft_matrix(6)
    np.testing.assert_allclose(f.conj().T @ f, np.eye(6), atol=1e-13)


def test_counter_is_charged_per_transform():
    c = FlopCounter()
    fft.dft(np.ones((5, 16)), counter=c)
    assert c.fft_calls == 5
    assert c.complex_mul_adds == 5 * 16 * 4
    c2 = FlopCounter()
    fft.dft(np.ones((2, 12)), counter=c2)
    assert c2.fft_calls == 2
    assert c2.complex_mul_adds == 2 * fft.bluestein_cost(12)
