import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rkhm.algebra import (
    CirculantElement, DenseOperator, abs_A, circ_involution, circ_mul, circ_norm,
    circ_to_dense, dense_adjoint, dense_mul, dense_trace, dft_spectrum, is_positive,
    operator_norm, partial_order_leq, positive_sqrt, qr_decompose, random_circulant,
    random_dense, expm,
)
from rkhm.exceptions import ContractError, DomainError
from rkhm.fft import dft_matrix

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.sampled_from([1, 2, 3, 4, 5, 8, 12])


def convolve_direct(x, y):
    p = len(x)
    return np.array([sum(x[(z - w) % p] * y[w] for w in range(p)) for z in range(p)])


# -- circ_mul ----------------------------------------------------------------

def test_circ_mul_identity():
    e0 = CirculantElement([1, 0, 0])
    x = CirculantElement([4, 5, 6])
    np.testing.assert_allclose((e0 @ x).coeffs, [4, 5, 6], atol=1e-14)


def test_circ_mul_shift():
    out = circ_mul(CirculantElement([1, 2, 3]), CirculantElement([0, 1, 0]))
    np.testing.assert_allclose(out.coeffs, convolve_direct([1, 2, 3], [0, 1, 0]), atol=1e-14)
    np.testing.assert_allclose(out.coeffs, [3, 1, 2], atol=1e-14)


def test_circ_mul_p2():
    out = circ_mul(CirculantElement([1, 1]), CirculantElement([1, 1]))
    np.testing.assert_allclose(out.coeffs, [2, 2], atol=1e-14)


def test_circ_mul_dimension_mismatch():
    with pytest.raises(ContractError):
        circ_mul(CirculantElement([1, 2]), CirculantElement([1, 2, 3]))


# -- involution, norm, spectrum -------------------------------------------------

def test_involution_examples():
    np.testing.assert_array_equal(circ_involution(CirculantElement([2.0, 5.0, 5.0])).coeffs, [2, 5, 5])
    np.testing.assert_array_equal(circ_involution(CirculantElement([1, 2, 3])).coeffs, [1, 3, 2])
    np.testing.assert_array_equal(circ_involution(CirculantElement([1j, 0])).coeffs, [-1j, 0])


@given(seeds, dims)
def test_involution_twice_is_exact(seed, p):
    x = random_circulant(p, np.random.default_rng(seed))
    assert circ_involution(circ_involution(x)) == x


def test_norm_examples():
    assert circ_norm(CirculantElement([1, 0, 0, 0])) == pytest.approx(1.0)
    assert circ_norm(CirculantElement.zeros(5)) == 0.0
    assert circ_norm(CirculantElement([1, 1, 1])) == pytest.approx(3.0)


def test_spectrum_examples():
    omega = np.exp(2j * np.pi / 3)
    np.testing.assert_allclose(dft_spectrum(CirculantElement([1, 0, 0, 0])), np.ones(4), atol=1e-14)
    np.testing.assert_allclose(dft_spectrum(CirculantElement(np.ones(4))), [4, 0, 0, 0], atol=1e-14)
    np.testing.assert_allclose(dft_spectrum(CirculantElement([0, 1, 0])), [1, omega, omega ** 2], atol=1e-14)


def test_spectrum_is_cached_and_read_only():
    x = CirculantElement([1.0, 2.0, 3.0])
    s = x.spectrum
    assert x.spectrum is s
    with pytest.raises(ValueError):
        s[0] = 0


def test_elements_are_immutable():
    x = CirculantElement([1.0, 2.0])
    with pytest.raises(ValueError):
        x.coeffs[0] = 5
    with pytest.raises(ContractError):
        CirculantElement([np.nan, 1.0])


# -- circ_to_dense ---------------------------------------------------------------

def test_circ_to_dense_examples():
    np.testing.assert_array_equal(circ_to_dense(CirculantElement([3, 7])).entries, [[3, 7], [7, 3]])
    np.testing.assert_array_equal(circ_to_dense(CirculantElement.identity(4)).entries, np.eye(4))
    m = circ_to_dense(CirculantElement([1, 2, 3])).entries
    np.testing.assert_array_equal(m, [[1, 2, 3], [3, 1, 2], [2, 3, 1]])


def test_circ_to_dense_homomorphism_p5(rng):
    x, y = random_circulant(5, rng), random_circulant(5, rng)
    lhs = circ_to_dense(circ_mul(x, y)).entries
    rhs = circ_to_dense(x).entries @ circ_to_dense(y).entries
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1, np.max(np.abs(rhs)))


@settings(max_examples=60)
@given(seeds, dims)
def test_isomorphism_properties(seed, p):
    rng = np.random.default_rng(seed)
    x, y = random_circulant(p, rng), random_circulant(p, rng)
    np.testing.assert_allclose(circ_to_dense(x @ y).entries, (circ_to_dense(x) @ circ_to_dense(y)).entries,
                               atol=1e-10 * (1 + circ_norm(x) * circ_norm(y)))
    np.testing.assert_allclose(circ_to_dense(x.adjoint()).entries, circ_to_dense(x).adjoint().entries, atol=1e-14)
    assert abs(circ_norm(x) - operator_norm(circ_to_dense(x))) <= 1e-10 * max(1, circ_norm(x))


@settings(max_examples=40)
@given(seeds, dims)
def test_diagonalization(seed, p):
    x = random_circulant(p, np.random.default_rng(seed))
    f = dft_matrix(p)
    recon = f @ np.diag(x.spectrum) @ f.conj().T
    np.testing.assert_allclose(recon, circ_to_dense(x).entries, atol=1e-10 * max(1, circ_norm(x)))


# -- dense operators --------------------------------------------------------------

def test_dense_examples(rng):
    a = random_dense(3, rng)
    np.testing.assert_allclose(dense_mul(a, DenseOperator.identity(3)).entries, a.entries)
    assert operator_norm(DenseOperator(np.diag([1, -3, 2]))) == pytest.approx(3.0)
    assert dense_trace(DenseOperator([[1, 2], [3, 4j]])) == 1 + 4j
    with pytest.raises(ContractError):
        dense_mul(a, DenseOperator.identity(2))


@settings(max_examples=50)
@given(seeds, dims, st.booleans())
def test_cstar_identity_and_submultiplicativity(seed, p, circulant):
    rng = np.random.default_rng(seed)
    make = random_circulant if circulant else random_dense
    a, b = make(p, rng), make(p, rng)
    assert abs((a.adjoint() @ a).norm() - a.norm() ** 2) <= 1e-8 * a.norm() ** 2
    assert (a @ b).norm() <= a.norm() * b.norm() + 1e-10


@settings(max_examples=50)
@given(seeds, dims, st.booleans())
def test_involution_laws(seed, p, circulant):
    rng = np.random.default_rng(seed)
    make = random_circulant if circulant else random_dense
    a, b = make(p, rng), make(p, rng)
    lhs = (a @ b).adjoint().matrix()
    rhs = (b.adjoint() @ a.adjoint()).matrix()
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1, np.max(np.abs(rhs)))
    assert a.adjoint().adjoint() == a


def test_mixed_variants_promote(rng):
    x = random_circulant(3, rng)
    d = random_dense(3, rng)
    out = x @ d
    assert isinstance(out, DenseOperator)
    np.testing.assert_allclose(out.entries, circ_to_dense(x).entries @ d.entries)
    assert isinstance(x + d, DenseOperator)


# -- positivity and order -----------------------------------------------------------

def test_is_positive_examples(rng):
    assert is_positive(DenseOperator.identity(3))
    assert not is_positive(-DenseOperator.identity(3))
    b = random_dense(4, rng)
    assert is_positive(b.adjoint() @ b, tol=1e-10)
    c = random_circulant(4, rng)
    assert is_positive(c.adjoint() @ c, tol=1e-10)
    assert not is_positive(-CirculantElement.identity(4))
    assert not is_positive(DenseOperator([[1, 1], [0, 1]]))


def test_partial_order_examples(rng):
    a = random_dense(3, rng)
    assert partial_order_leq(a, a)
    b = random_dense(3, rng)
    assert partial_order_leq(DenseOperator.zeros(3), b.adjoint() @ b)
    assert not partial_order_leq(DenseOperator(np.diag([2, 0])), DenseOperator(np.diag([1, 1])))
    with pytest.raises(ContractError):
        partial_order_leq(a, DenseOperator.identity(2))


@settings(max_examples=40)
@given(seeds, dims)
def test_trace_monotone_under_order(seed, p):
    rng = np.random.default_rng(seed)
    a = random_dense(p, rng)
    a = a + a.adjoint()
    d = random_dense(p, rng)
    b = a + d.adjoint() @ d
    assert partial_order_leq(a, b)
    assert a.trace().real <= b.trace().real + 1e-10


@settings(max_examples=40)
@given(seeds, dims)
def test_trace_bounded_by_trace_of_abs(seed, p):
    a = random_dense(p, np.random.default_rng(seed), real=True)
    assert a.trace().real <= abs_A(a).trace().real + 1e-8


# -- square root and absolute value ---------------------------------------------------

def test_positive_sqrt_examples(rng):
    np.testing.assert_allclose(positive_sqrt(DenseOperator.identity(3)).entries, np.eye(3), atol=1e-14)
    np.testing.assert_allclose(positive_sqrt(DenseOperator(np.diag([4, 9]))).entries, np.diag([2, 3]), atol=1e-14)
    with pytest.raises(DomainError):
        positive_sqrt(-DenseOperator.identity(2))


@settings(max_examples=40)
@given(seeds, dims, st.booleans())
def test_positive_sqrt_squares_back(seed, p, circulant):
    rng = np.random.default_rng(seed)
    b = (random_circulant if circulant else random_dense)(p, rng)
    a = b.adjoint() @ b
    r = positive_sqrt(a)
    assert is_positive(r)
    assert (r @ r - a).norm() <= 1e-8 * max(1, a.norm())


def test_abs_examples(rng):
    q, _ = np.linalg.qr(random_dense(4, rng).entries)
    np.testing.assert_allclose(abs_A(DenseOperator(q)).entries, np.eye(4), atol=1e-12)
    np.testing.assert_allclose(abs_A(DenseOperator(np.diag([-2, 3]))).entries, np.diag([2, 3]), atol=1e-14)
    np.testing.assert_allclose(abs_A(DenseOperator.zeros(2)).entries, 0)


def test_expm_circulant_matches_dense(rng):
    x = random_circulant(5, rng) * 0.3
    np.testing.assert_allclose(circ_to_dense(expm(x)).entries, expm(circ_to_dense(x)).entries, atol=1e-12)


# -- QR ----------------------------------------------------------------------------------

def test_qr_examples(rng):
    q, r = qr_decompose(DenseOperator.identity(3))
    np.testing.assert_allclose(q.entries, np.eye(3))
    np.testing.assert_allclose(r.entries, np.eye(3))
    q, r = qr_decompose(DenseOperator([[-2.0]]))
    assert q.entries[0, 0] == pytest.approx(-1)
    assert r.entries[0, 0] == pytest.approx(2)


@settings(max_examples=40)
@given(seeds, dims, st.booleans())
def test_qr_contract(seed, p, real):
    x = random_dense(p, np.random.default_rng(seed), real=real)
    q, r = qr_decompose(x)
    np.testing.assert_allclose(q.entries.conj().T @ q.entries, np.eye(p), atol=1e-10)
    np.testing.assert_allclose(q.entries @ r.entries, x.entries, atol=1e-10 * max(1, x.norm()))
    np.testing.assert_array_equal(np.tril(r.entries, -1), 0)
    d = np.diag(r.entries)
    assert np.all(d.imag == 0) and np.all(d.real >= 0)
    if real:
        assert np.all(q.entries.imag == 0)


def test_qr_singular_is_deterministic():
    x = DenseOperator([[1.0, 2.0], [2.0, 4.0]])
    q1, r1 = qr_decompose(x)
    q2, r2 = qr_decompose(x)
    assert q1 == q2 and r1 == r2
    np.testing.assert_allclose(q1.entries @ r1.entries, x.entries, atol=1e-12)
