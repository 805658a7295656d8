"""Gram assembly, the regularized representer system and prediction.

The fitted function is ``f(x) = sum_j k(x, x_j) c_j`` with coefficients
solving ``(G + lam I) c = y`` for the block Gram matrix ``G``.  Three
solvers are provided:

* :func:`fit_direct_dense` flattens ``G`` to an ``np x np`` complex matrix
  and runs pivoted Gaussian elimination (cost ~ n^3 p^3).
* :func:`fit_circulant_fast` diagonalizes every circulant block with the
  FFT and solves ``p`` independent ``n x n`` systems (cost ~ n^2 p log p +
  n^3 p).
* :func:`fit_block_cg` runs conjugate gradients with a structure-aware
  matrix-vector product (cost per iteration ~ n^2 p for circulant blocks).

Every solver charges its complex multiply-adds to a :class:`FlopCounter`.
Counts are a deterministic function of the problem shape, so they stand in
for wall-clock time in scaling studies.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import os
import threading

import numpy as np

from . import fft
from .algebra import AlgebraValue, CirculantElement, DenseOperator, is_positive
from .exceptions import ContractError, ConvergenceError, PreconditionError, SingularSystemError
from .kernels import eval_kernel

ALL_CIRCULANT = "AllCirculant"
DENSE = "Dense"
PIVOT_RTOL = 1e-12


def worker_count():
    """Worker threads for embarrassingly parallel loops (``RKHM_THREADS``, default 1)."""
    raw = os.environ.get("RKHM_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass
class FlopCounter:
    """Tally of complex multiply-adds, transforms and solve sizes.

    ``per_iteration`` holds the count charged by each CG iteration; ``residual``
    is the final relative residual of the solve that used the counter.
    """

    complex_mul_adds: int = 0
    fft_calls: int = 0
    solve_dim_history: list = field(default_factory=list)
    per_iteration: list = field(default_factory=list)
    residual: float = float("nan")
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def add(self, mul_adds):
        if mul_adds < 0:
            raise ContractError("flop counts are nonnegative")
        with self._lock:
            self.complex_mul_adds += int(mul_adds)

    def count_fft(self, n_transforms, mul_adds):
        with self._lock:
            self.fft_calls += int(n_transforms)
            self.complex_mul_adds += int(mul_adds)

    def record_solve(self, dim, batch=1):
        with self._lock:
            self.solve_dim_history.append((int(dim), int(batch)))

    def to_dict(self):
        return {"complex_mul_adds": self.complex_mul_adds, "fft_calls": self.fft_calls,
                "solve_dim_history": [list(d) for d in self.solve_dim_history],
                "per_iteration": list(self.per_iteration), "residual": self.residual}


class GramMatrix:
    """Block Gram matrix ``G[i][j] = k(x_i, x_j)``.

    Parameters
    ----------
    blocks : list of list of AlgebraValue
        ``n x n`` blocks sharing one ``p``.
    """

    def __init__(self, blocks):
        blocks = [list(row) for row in blocks]
        n = len(blocks)
        if n == 0 or any(len(row) != n for row in blocks):
            raise ContractError("Gram blocks must form a nonempty square array")
        if not all(isinstance(b, AlgebraValue) for row in blocks for b in row):
            raise ContractError("Gram blocks must be algebra elements")
        ps = {b.p for row in blocks for b in row}
        if len(ps) != 1:
            raise ContractError("Gram blocks must share one p")
        self.blocks = blocks
        self.n = n
        self.p = ps.pop()
        circ = all(isinstance(b, CirculantElement) for row in blocks for b in row)
        self.structure = ALL_CIRCULANT if circ else DENSE
        self._flat = None
        self._coeff_stack = None

    def block(self, i, j):
        return self.blocks[i][j]

    def flat(self):
        """``np x np`` matrix with block ``(i, j)`` at rows ``[ip, (i+1)p)``, columns ``[jp, (j+1)p)``."""
        if self._flat is None:
            n, p = self.n, self.p
            m = np.array([[b.matrix() for b in row] for row in self.blocks])
            flat = m.transpose(0, 2, 1, 3).reshape(n * p, n * p)
            flat.setflags(write=False)
            self._flat = flat
        return self._flat

    def coeff_stack(self):
        """Circulant first rows as an ``(n, n, p)`` array."""
        if self.structure != ALL_CIRCULANT:
            raise PreconditionError("Gram matrix has non-circulant blocks")
        if self._coeff_stack is None:
            s = np.array([[b.coeffs for b in row] for row in self.blocks])
            s.setflags(write=False)
            self._coeff_stack = s
        return self._coeff_stack

    def hermitian_deviation(self):
        f = self.flat()
        return float(np.max(np.abs(f - f.conj().T)))

    def min_eigenvalue(self):
        f = self.flat()
        return float(np.linalg.eigvalsh(0.5 * (f + f.conj().T))[0])


def assemble_gram(spec, inputs):
    """Evaluate the upper triangle of the Gram matrix and reflect it."""
    inputs = list(inputs)
    n = len(inputs)
    if n == 0:
        raise ContractError("inputs must be nonempty")
    pairs = [(i, j) for i in range(n) for j in range(i, n)]

    def one(ij):
        return eval_kernel(spec, inputs[ij[0]], inputs[ij[1]])

    workers = worker_count()
    if workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(workers) as pool:
            values = list(pool.map(one, pairs))
    else:
        values = [one(ij) for ij in pairs]
    blocks = [[None] * n for _ in range(n)]
    for (i, j), v in zip(pairs, values):
        blocks[i][j] = v
        if i != j:
            blocks[j][i] = v.adjoint()
    return GramMatrix(blocks)


# -- elimination -------------------------------------------------------------------

def _lu_factor(a, counter, frequencies=False):
    """Batched LU factorization with partial pivoting, in place on a copy.

    ``a`` has shape ``(batch, N, N)``.  The singularity threshold is relative
    to the largest entry over the whole batch.  Returns the packed factors
    and the row permutation of each batch member.
    """
    a = np.array(a, dtype=complex)
    batch, N, _ = a.shape
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    thresh = PIVOT_RTOL * scale
    rows = np.arange(batch)
    perm = np.tile(np.arange(N), (batch, 1))
    for k in range(N):
        piv = k + np.argmax(np.abs(a[:, k:, k]), axis=1)
        mag = np.abs(a[rows, piv, k])
        bad = np.flatnonzero(~(mag >= thresh) | (mag == 0))
        if bad.size:
            f = int(bad[0])
            where = f" at frequency {f}" if frequencies else ""
            raise SingularSystemError(
                f"singular system{where}: pivot {mag[f]:.3e} at step {k} below {thresh:.3e}",
                pivot=float(mag[f]), index=k, frequency=f if frequencies else None)
        swap = piv != k
        if np.any(swap):
            sel, pr = rows[swap], piv[swap]
            a_k, a_p = a[sel, k].copy(), a[sel, pr].copy()
            a[sel, k], a[sel, pr] = a_p, a_k
            perm[sel, k], perm[sel, pr] = perm[sel, pr], perm[sel, k].copy()
        r = N - k - 1
        if r:
            a[:, k + 1:, k] /= a[:, k, k][:, None]
            a[:, k + 1:, k + 1:] -= a[:, k + 1:, k, None] * a[:, k, None, k + 1:]
            counter.add(batch * r * (r + 1))
    return a, perm


def _lu_solve(lu, perm, b, counter):
    batch, N, _ = lu.shape
    K = b.shape[-1]
    y = np.take_along_axis(np.asarray(b, dtype=complex), perm[:, :, None], axis=1)
    for i in range(1, N):
        y[:, i] -= np.einsum("bj,bjk->bk", lu[:, i, :i], y[:, :i])
    x = np.empty_like(y)
    for i in range(N - 1, -1, -1):
        acc = y[:, i] - np.einsum("bj,bjk->bk", lu[:, i, i + 1:], x[:, i + 1:])
        x[:, i] = acc / lu[:, i, i][:, None]
    counter.add(batch * K * (N * (N - 1) + N))
    return x


def _gauss_solve(a, b, counter, frequencies=False):
    """Solve ``a x = b`` batchwise by pivoted elimination and back substitution.

    ``a`` has shape ``(batch, N, N)`` and ``b`` shape ``(batch, N, K)``.
    """
    a = np.asarray(a, dtype=complex)
    lu, perm = _lu_factor(a, counter, frequencies)
    x = _lu_solve(lu, perm, b, counter)
    counter.record_solve(a.shape[1], a.shape[0])
    return x


# -- solvers ----------------------------------------------------------------------

def _check_targets(gram, ys):
    ys = list(ys)
    if len(ys) != gram.n:
        raise ContractError(f"expected {gram.n} targets, got {len(ys)}")
    if not all(isinstance(y, AlgebraValue) and y.p == gram.p for y in ys):
        raise ContractError(f"targets must be algebra elements with p={gram.p}")
    return ys


def _check_lambda(lam):
    lam = float(lam)
    if not np.isfinite(lam) or lam < 0:
        raise ContractError("lambda must be a finite nonnegative number")
    return lam


def _flat_targets(ys):
    return np.concatenate([y.matrix() for y in ys], axis=0)


def _relative(num, den):
    return float(num / den) if den > 0 else float(num)


def fit_direct_dense(gram, ys, lam):
    """Solve the flattened ``np x np`` system by pivoted elimination.

    Returns
    -------
    coeffs : list of DenseOperator
    counter : FlopCounter
        ``counter.residual`` holds ``||(G + lam I) c - y|| / ||y||``.
    """
    ys = _check_targets(gram, ys)
    lam = _check_lambda(lam)
    counter = FlopCounter()
    n, p = gram.n, gram.p
    system = gram.flat() + lam * np.eye(n * p)
    rhs = _flat_targets(ys)
    sol = _gauss_solve(system[None], rhs[None], counter)[0]
    # verification only, not charged to the counter
    counter.residual = _relative(np.linalg.norm(system @ sol - rhs), np.linalg.norm(rhs))
    coeffs = [DenseOperator(sol[i * p:(i + 1) * p]) for i in range(n)]
    return coeffs, counter


def fit_circulant_fast(gram, ys, lam):
    """Solve frequency by frequency after diagonalizing every block.

    Returns
    -------
    coeffs : list of CirculantElement
    counter : FlopCounter
    """
    if gram.structure != ALL_CIRCULANT:
        raise PreconditionError("fit_circulant_fast needs an all-circulant Gram matrix")
    ys = _check_targets(gram, ys)
    if not all(isinstance(y, CirculantElement) for y in ys):
        raise PreconditionError("fit_circulant_fast needs circulant targets")
    lam = _check_lambda(lam)
    counter = FlopCounter()
    n, p = gram.n, gram.p
    g_hat = fft.dft(gram.coeff_stack(), counter)            # (n, n, p)
    y_hat = fft.dft(np.array([y.coeffs for y in ys]), counter)  # (n, p)
    system = np.moveaxis(g_hat, -1, 0) + lam * np.eye(n)    # (p, n, n)
    rhs = y_hat.T[:, :, None]                                # (p, n, 1)
    c_hat = _gauss_solve(system, rhs, counter, frequencies=True)
    resid = np.einsum("fij,fjk->fik", system, c_hat) - rhs
    counter.residual = _relative(np.linalg.norm(resid), np.linalg.norm(rhs))
    coeffs = fft.idft(c_hat[:, :, 0].T, counter)
    return [CirculantElement(c) for c in coeffs], counter


class _CirculantOperator:
    """``G + lam I`` acting on spectra of shape ``(n, p)``."""

    def __init__(self, gram, lam, counter):
        self.g_hat = fft.dft(gram.coeff_stack(), counter)
        self.lam = lam
        self.n, self.p = gram.n, gram.p
        self.size = self.n * self.p
        self.matvec_cost = self.n * self.n * self.p + self.size

    def apply(self, v):
        return np.einsum("ijf,jf->if", self.g_hat, v) + self.lam * v

    def block_jacobi(self):
        diag = np.einsum("iif->if", self.g_hat).real + self.lam
        return lambda r: r / diag, self.size


class _DenseOperator:
    """``G + lam I`` acting on flattened ``(np, p)`` blocks."""

    def __init__(self, gram, lam):
        self.mat = gram.flat() + lam * np.eye(gram.n * gram.p)
        self.n, self.p = gram.n, gram.p
        self.size = self.n * self.p * self.p
        self.matvec_cost = (self.n * self.p) ** 2 * self.p

    def apply(self, v):
        return self.mat @ v

    def block_jacobi(self):
        n, p = self.n, self.p
        inv = np.array([np.linalg.inv(self.mat[i * p:(i + 1) * p, i * p:(i + 1) * p]) for i in range(n)])

        def apply(r):
            return np.einsum("iab,ibk->iak", inv, r.reshape(n, p, p)).reshape(n * p, p)
        return apply, n * p ** 3


def _dot(u, v):
    return complex(np.vdot(u, v))


def fit_block_cg(gram, ys, lam, tol=1e-10, max_iter=1000, precondition=False):
    """Conjugate gradients on ``(G + lam I) c = y``.

    Circulant systems iterate on spectra, where by Parseval the Euclidean
    inner product equals the Frobenius inner product of the circulant
    matrices, so the iterates coincide with the flattened-matrix CG.
    ``precondition=True`` enables a block-Jacobi preconditioner.

    Returns
    -------
    coeffs : list of AlgebraValue
    counter : FlopCounter
        ``per_iteration`` holds the count charged by each iteration.
    iterations : int
    """
    ys = _check_targets(gram, ys)
    lam = _check_lambda(lam)
    if not tol > 0:
        raise ContractError("tol must be positive")
    if int(max_iter) < 1:
        raise ContractError("max_iter must be >= 1")
    counter = FlopCounter()
    n, p = gram.n, gram.p
    circulant = gram.structure == ALL_CIRCULANT and all(isinstance(y, CirculantElement) for y in ys)
    if circulant:
        op = _CirculantOperator(gram, lam, counter)
        b = fft.dft(np.array([y.coeffs for y in ys]), counter)
    else:
        op = _DenseOperator(gram, lam)
        b = _flat_targets(ys)
    if precondition:
        precond, setup_cost = op.block_jacobi()
        counter.add(setup_cost)
    else:
        precond = None
    x = np.zeros_like(b, dtype=complex)
    r = b.copy()
    b_norm = float(np.linalg.norm(b))
    z = precond(r) if precond else r
    d = z.copy()
    rz = _dot(r, z)
    resid = _relative(np.linalg.norm(r), b_norm)
    iterations = 0
    while resid > tol:
        if iterations >= max_iter:
            raise ConvergenceError(
                f"CG did not reach tol={tol:g} in {max_iter} iterations (residual {resid:.3e})",
                residual=resid, iterations=iterations)
        before = counter.complex_mul_adds
        q = op.apply(d)
        alpha = rz / _dot(d, q)
        x = x + alpha * d
        r = r - alpha * q
        z = precond(r) if precond else r
        rz_new = _dot(r, z)
        d = z + (rz_new / rz) * d
        rz = rz_new
        # matvec, two inner products, three vector updates
        counter.add(op.matvec_cost + 5 * op.size + (op.size if precond else 0))
        counter.per_iteration.append(counter.complex_mul_adds - before)
        resid = _relative(np.linalg.norm(r), b_norm)
        iterations += 1
    counter.residual = resid
    counter.record_solve(op.size, 1)
    if circulant:
        coeffs = [CirculantElement(c) for c in fft.idft(x, counter)]
    else:
        coeffs = [DenseOperator(x[i * p:(i + 1) * p]) for i in range(n)]
    return coeffs, counter, iterations


# -- models -------------------------------------------------------------------------

@dataclass(eq=False)
class Model:
    """A fitted function ``f(x) = sum_j k(x, x_j) c_j``."""

    spec: object
    inputs: list
    coeffs: list
    lam: float
    solver_used: str
    residual: float
    counter: FlopCounter = None
    iterations: int = None

    def __post_init__(self):
        if len(self.inputs) != len(self.coeffs):
            raise ContractError("a model needs one coefficient per training input")

    @property
    def n(self):
        return len(self.coeffs)

    def predict(self, x):
        return predict(self, x)


SOLVERS = ("dense", "circulant", "cg")


def fit(spec, inputs, ys, lam, solver="auto", tol=1e-10, max_iter=1000, gram=None, precondition=False):
    """Assemble the Gram matrix and solve with the requested strategy.

    ``solver="auto"`` picks the FFT path when every block and target is
    circulant, and dense elimination otherwise.
    """
    inputs = list(inputs)
    ys = list(ys)
    if gram is None:
        gram = assemble_gram(spec, inputs)
    if solver == "auto":
        circ = gram.structure == ALL_CIRCULANT and all(isinstance(y, CirculantElement) for y in ys)
        solver = "circulant" if circ else "dense"
    iterations = None
    if solver == "dense":
        coeffs, counter = fit_direct_dense(gram, ys, lam)
    elif solver == "circulant":
        coeffs, counter = fit_circulant_fast(gram, ys, lam)
    elif solver == "cg":
        coeffs, counter, iterations = fit_block_cg(gram, ys, lam, tol, max_iter, precondition)
    else:
        raise ContractError(f"unknown solver {solver!r}; choose from {SOLVERS}")
    return Model(spec, inputs, coeffs, float(lam), solver, counter.residual, counter, iterations)


def predict(model, x):
    """``sum_j k(x, x_j) c_j``."""
    total = None
    for xj, cj in zip(model.inputs, model.coeffs):
        term = eval_kernel(model.spec, x, xj) @ cj
        total = term if total is None else total + term
    return total


def predict_many(model, xs):
    return [predict(model, x) for x in xs]


def _apply_gram(gram, coeffs):
    out = []
    for i in range(gram.n):
        acc = None
        for j in range(gram.n):
            t = gram.block(i, j) @ coeffs[j]
            acc = t if acc is None else acc + t
        out.append(acc)
    return out


def quadratic_form(gram, a, b=None):
    """``sum_ij a_i* G_ij b_j``, the module inner product of two expansions."""
    b = a if b is None else b
    gb = _apply_gram(gram, b)
    total = None
    for ai, gi in zip(a, gb):
        t = ai.adjoint() @ gi
        total = t if total is None else total + t
    return total


def inner_product(spec, xs_u, a, xs_v, b):
    """``<u, v>`` for ``u = sum_i phi(x_i) a_i`` and ``v = sum_j phi(y_j) b_j``."""
    total = None
    for xi, ai in zip(xs_u, a):
        for yj, bj in zip(xs_v, b):
            t = ai.adjoint() @ eval_kernel(spec, xi, yj) @ bj
            total = t if total is None else total + t
    return total


def model_norm_B(model, gram=None):
    """``||(c* G c)^(1/2)||`` for the fitted coefficients."""
    gram = assemble_gram(model.spec, model.inputs) if gram is None else gram
    form = quadratic_form(gram, model.coeffs)
    return float(np.sqrt(max(form.norm(), 0.0)))


def objective(spec, inputs, ys, coeffs, lam, gram=None):
    """Data term ``sum_i |f(x_i) - y_i|^2``, regularizer ``lam c* G c`` and their traces."""
    gram = assemble_gram(spec, inputs) if gram is None else gram
    ys = _check_targets(gram, ys)
    if len(coeffs) != gram.n:
        raise ContractError("coeffs must have one entry per input")
    fitted = _apply_gram(gram, coeffs)
    data = None
    for f, y in zip(fitted, ys):
        e = f - y
        t = e.adjoint() @ e
        data = t if data is None else data + t
    reg = lam * quadratic_form(gram, coeffs)
    total = float((data.trace() + reg.trace()).real)
    return {"data_term": data, "reg_term": reg, "trace_total": total}


def is_positive_gram(gram, tol=1e-8):
    """Flattened Gram is Hermitian PSD up to ``tol`` relative to its norm."""
    return is_positive(DenseOperator(gram.flat()), tol)
