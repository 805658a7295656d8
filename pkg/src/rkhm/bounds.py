"""Rademacher-complexity and generalization bounds for RKHM regression.

The closed forms are functions of a handful of constants:

* ``B`` radius of the norm ball ``||f||_k <= B``,
* ``C`` second moment of the operator norm of the random sign matrices,
* ``D`` bound on ``||k(x, x)||``,
* ``E`` bound on ``||y||``,
* ``p`` matrix size, ``n`` sample count and confidence ``delta``.

:func:`empirical_rademacher_mc` estimates the algebra-valued empirical
Rademacher complexity over a finite family of fitted models.  A supremum in
the Loewner order need not exist for a finite family, so the draw-wise
maximizer is the candidate with the largest trace.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .algebra import DenseOperator, abs_A, as_dense
from .exceptions import ContractError, DomainError
from .solver import predict


def _positive(name, value, allow_zero=False):
    value = float(value)
    ok = value >= 0 if allow_zero else value > 0
    if not (np.isfinite(value) and ok):
        raise DomainError(f"{name} must be {'nonnegative' if allow_zero else 'positive'}, got {value}")
    return value


@dataclass
class BoundInputs:
    B: float
    C: float
    D: float
    E: float
    p: int
    n: int
    delta: float
    diag_norms: list = field(default_factory=list)

    def __post_init__(self):
        for name in ("B", "C", "D"):
            setattr(self, name, _positive(name, getattr(self, name)))
        self.E = _positive("E", self.E, allow_zero=True)
        if int(self.p) != self.p or self.p < 1 or int(self.n) != self.n or self.n < 1:
            raise DomainError("p and n must be positive integers")
        self.p, self.n = int(self.p), int(self.n)
        if not 0 < self.delta < 1:
            raise DomainError(f"delta must lie in (0, 1), got {self.delta}")
        self.diag_norms = [float(v) for v in self.diag_norms]
        if any(v > self.D + 1e-10 for v in self.diag_norms):
            raise DomainError("every diagonal norm must be at most D")


def rademacher_bound(B, C, diag_norms, n):
    """``(B sqrt(C) / n) * sqrt(sum_i ||k(x_i, x_i)||)``, the multiple of ``I``."""
    B = _positive("B", B)
    C = _positive("C", C)
    diag_norms = [float(v) for v in diag_norms]
    if n < 1 or len(diag_norms) != n:
        raise DomainError("n must equal the number of diagonal norms and be >= 1")
    if any(not v > 0 for v in diag_norms):
        raise DomainError("diagonal norms must be positive")
    return B * math.sqrt(C) / n * math.sqrt(sum(diag_norms))


def lipschitz_constant(B, D, E):
    """``2 sqrt(2) (B sqrt(D) + E)``."""
    B = _positive("B", B, allow_zero=True)
    D = _positive("D", D, allow_zero=True)
    E = _positive("E", E, allow_zero=True)
    return 2 * math.sqrt(2) * (B * math.sqrt(D) + E)


def generalization_bound(inputs):
    """``2 L B sqrt(D) p / sqrt(n) + 3 sqrt(2 D) p sqrt(log(2/delta) / n)``.

    Parameters
    ----------
    inputs : BoundInputs
    """
    b = inputs
    L = lipschitz_constant(b.B, b.D, b.E)
    first = 2 * L * b.B * math.sqrt(b.D) * b.p / math.sqrt(b.n)
    second = 3 * math.sqrt(2 * b.D) * b.p * math.sqrt(math.log(2 / b.delta) / b.n)
    return first + second


def rademacher_matrices(rng, count, p):
    """``count`` matrices of independent signs."""
    return rng.choice(np.array([-1.0, 1.0]), size=(count, p, p))


def second_moment(p, num_draws=2000, seed=0):
    """Empirical ``E ||sigma||^2`` for a ``p x p`` sign matrix."""
    rng = np.random.default_rng(seed)
    s = rademacher_matrices(rng, num_draws, p)
    return float(np.mean(np.linalg.norm(s, 2, axis=(1, 2)) ** 2))


def empirical_rademacher_mc(candidate_fns, points, num_draws=200, seed=0, return_stderr=False):
    """Monte-Carlo estimate of ``E sup_f |1/n sum_i f(x_i)* sigma_i|``.

    Parameters
    ----------
    candidate_fns : list
        Fitted models, or callables mapping a point to an algebra value.
    points : list
        The sample ``x_1..x_n``.
    num_draws : int
        Number of sign draws.
    return_stderr : bool
        Also return the standard error of the estimate's trace.

    Returns
    -------
    DenseOperator, and the trace standard error when requested.
    """
    candidate_fns = list(candidate_fns)
    points = list(points)
    if not candidate_fns:
        raise ContractError("candidate family must be nonempty")
    if not points:
        raise ContractError("points must be nonempty")
    if num_draws < 1:
        raise ContractError("num_draws must be >= 1")
    n = len(points)
    values = []
    for f in candidate_fns:
        fx = [predict(f, x) if hasattr(f, "coeffs") else f(x) for x in points]
        values.append(np.array([as_dense(v).entries for v in fx]))
    values = np.array(values)                       # (m, n, p, p)
    p = values.shape[-1]
    rng = np.random.default_rng(seed)
    total = np.zeros((p, p), dtype=complex)
    traces = np.empty(num_draws)
    for t in range(num_draws):
        sigma = rademacher_matrices(rng, n, p)
        corr = np.einsum("mnji,njk->mik", values.conj(), sigma) / n
        best, best_tr = None, -np.inf
        for c in corr:
            a = abs_A(DenseOperator(c))
            tr = a.trace().real
            if tr > best_tr:
                best, best_tr = a, tr
        total += best.entries
        traces[t] = best_tr
    estimate = DenseOperator(total / num_draws)
    if return_stderr:
        err = float(np.std(traces, ddof=1) / math.sqrt(num_draws)) if num_draws > 1 else 0.0
        return estimate, err
    return estimate


def ball_candidates(model, count, seed=0, gram=None):
    """``model`` plus ``count - 1`` random expansions on its inputs scaled to its norm.

    Every candidate ``f = sum_j phi(x_j) c_j`` has ``||f||_k`` equal to the
    fitted model's, so the family lies in the ball of radius ``B``.
    """
    from .algebra import CirculantElement, random_circulant, random_dense
    from .solver import Model, assemble_gram, model_norm_B
    gram = assemble_gram(model.spec, model.inputs) if gram is None else gram
    B = model_norm_B(model, gram)
    rng = np.random.default_rng(seed)
    circ = all(isinstance(c, CirculantElement) for c in model.coeffs)
    out = [model]
    for _ in range(count - 1):
        draw = random_circulant if circ else random_dense
        coeffs = [draw(gram.p, rng) for _ in range(model.n)]
        cand = Model(model.spec, model.inputs, coeffs, model.lam, "random", 0.0)
        norm = model_norm_B(cand, gram)
        scale = B / norm if norm > 0 else 0.0
        out.append(Model(model.spec, model.inputs, [c * scale for c in coeffs], model.lam, "random", 0.0))
    return out
