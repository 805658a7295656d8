"""Synthetic regression experiment and solver scaling benchmark.

Data: inputs ``x ~ U[0, 1]^2``, noisy copies ``x~ = x + xi`` with
``xi ~ N(0, 0.1^2 I)``, and targets ``y = g(x~)`` where
``g(v) = (sin(v1 + v2), sin(v1 + v2) + sin((v1 + v2) / 2))``.  Test targets
are noise-free.  Random numbers come from the counter-based Philox
generator; Gaussian noise uses the Box-Muller transform of its uniforms,
so a seed produces the same data on every platform.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math
import time

import numpy as np

from . import fft
from .algebra import CirculantElement
from .exceptions import ContractError, SingularSystemError
from .kernels import PolynomialKernel
from .presets import METHODS, build_kernel, decode_output, embed_circulant, get_preset
from .solver import (GramMatrix, assemble_gram, fit, fit_block_cg, fit_circulant_fast,
                     fit_direct_dense, worker_count)

DEFAULT_C_GRID = (0.01, 0.1, 0.5, 1.0, 2.0, 5.0)
DEFAULT_LAMBDA_GRID = (1e-4, 1e-3, 1e-2, 1e-1, 1.0)
DEFAULT_FOLDS = 5
NOISE_SD = 0.1
N_TEST = 100


def philox(seed):
    return np.random.Generator(np.random.Philox(int(seed)))


def box_muller(rng, shape):
    """Standard normals from pairs of uniforms."""
    size = int(np.prod(shape))
    m = (size + 1) // 2
    u1 = 1.0 - rng.random(m)        # in (0, 1], keeps the log finite
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
    return z[:size].reshape(shape)


def target_function(v):
    v = np.asarray(v, dtype=float)
    s = v[..., 0] + v[..., 1]
    return np.stack([np.sin(s), np.sin(s) + np.sin(0.5 * s)], axis=-1)


@dataclass
class SyntheticDataset:
    seed: int
    n: int
    train_x: np.ndarray
    train_x_noisy: np.ndarray
    train_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, SyntheticDataset):
            return NotImplemented
        return self.seed == other.seed and self.n == other.n and all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("train_x", "train_x_noisy", "train_y", "test_x", "test_y"))


def gen_synthetic(n, seed, n_test=N_TEST, noise=NOISE_SD):
    """Draw a training set of size ``n`` and a noise-free test set."""
    if int(n) != n or n < 1:
        raise ContractError("n must be a positive integer")
    n = int(n)
    rng = philox(seed)
    train_x = rng.random((n, 2))
    xi = noise * box_muller(rng, (n, 2))
    test_x = rng.random((n_test, 2))
    noisy = train_x + xi
    return SyntheticDataset(int(seed), n, train_x, noisy, target_function(noisy),
                            test_x, target_function(test_x))


def mean_error(pred, Y):
    """Average Euclidean norm of the row differences."""
    pred = np.asarray(pred, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if pred.shape != Y.shape:
        raise ContractError(f"prediction shape {pred.shape} does not match target shape {Y.shape}")
    return float(np.mean(np.linalg.norm(pred - Y, axis=1)))


def mean_test_error(model, dataset):
    """Mean test error of a fitted estimator (anything with ``predict``)."""
    return mean_error(model.predict(dataset.test_x), dataset.test_y)


# -- cross-validation -------------------------------------------------------------------

def _subgram(gram, idx):
    return GramMatrix([[gram.block(i, j) for j in idx] for i in idx])


def _predict_from_gram(gram, rows, cols, coeffs, decode):
    out = []
    for i in rows:
        acc = None
        for j, c in zip(cols, coeffs):
            t = gram.block(i, j) @ c
            acc = t if acc is None else acc + t
        out.append(decode(acc))
    return np.array(out)


def fold_indices(n, folds):
    if int(folds) != folds or folds < 2 or folds > n:
        raise ContractError(f"folds must be an integer in [2, n={n}], got {folds}")
    assign = np.arange(n) % int(folds)
    return [(np.flatnonzero(assign != f), np.flatnonzero(assign == f)) for f in range(int(folds))]


def cross_validate(method, dataset, c_grid=DEFAULT_C_GRID, lambda_grid=DEFAULT_LAMBDA_GRID,
                   folds=DEFAULT_FOLDS, return_table=False):
    """Grid search over ``(c, lam)`` with ``k``-fold splits by index modulo ``folds``.

    The Gram matrix of the full training set is built once per ``c`` and
    sliced per fold.  Ties go to the smaller ``lam``, then the smaller ``c``.
    """
    c_grid, lambda_grid = list(c_grid), list(lambda_grid)
    if not c_grid or not lambda_grid:
        raise ContractError("grids must be nonempty")
    preset = get_preset(METHODS.get(method, method))
    X, Y = dataset.train_x, dataset.train_y
    splits = fold_indices(len(X), folds)
    inputs = [preset.embed_input(x) for x in X]
    targets = [preset.embed_target(y) for y in Y]
    table = []
    for c in c_grid:
        gram = assemble_gram(build_kernel(preset, X.shape[1], c=c), inputs)
        subs = [(tr, va, _subgram(gram, tr)) for tr, va in splits]
        for lam in lambda_grid:
            errs = []
            for tr, va, sub in subs:
                try:
                    coeffs = fit(None, [inputs[i] for i in tr], [targets[i] for i in tr], lam,
                                 gram=sub).coeffs
                except SingularSystemError:
                    errs.append(math.inf)
                    continue
                pred = _predict_from_gram(gram, va, tr, coeffs, preset.decode)
                errs.append(mean_error(pred, Y[va]))
            table.append((float(np.mean(errs)), float(lam), float(c)))
    best = min(table, key=lambda t: (t[0], t[1], t[2]))
    if return_table:
        return best[2], best[1], table
    return best[2], best[1]


# -- table runs ----------------------------------------------------------------------------

@dataclass
class ExperimentReport:
    method: str
    n: int
    seeds: list
    best_c: list
    best_lambda: list
    per_seed_errors: list
    mean_test_error: float = field(init=False)
    std_over_seeds: float = field(init=False)

    def __post_init__(self):
        errs = np.asarray(self.per_seed_errors, dtype=float)
        self.mean_test_error = float(errs.mean())
        self.std_over_seeds = float(errs.std(ddof=1)) if errs.size > 1 else 0.0

    def to_dict(self):
        return {"method": self.method, "n": self.n, "seeds": list(self.seeds),
                "best_c": list(self.best_c), "best_lambda": list(self.best_lambda),
                "per_seed_errors": list(self.per_seed_errors),
                "mean_test_error": self.mean_test_error, "std_over_seeds": self.std_over_seeds}


def fit_method(method, dataset, c, lam, solver="auto"):
    """Refit ``method`` with fixed hyperparameters on the full training set."""
    from .estimator import RKHMRegressor
    est = RKHMRegressor(kernel=METHODS.get(method, method), c=c, lam=lam, solver=solver)
    return est.fit(dataset.train_x, dataset.train_y)


def run_seed(method, n, seed, c_grid=DEFAULT_C_GRID, lambda_grid=DEFAULT_LAMBDA_GRID, folds=DEFAULT_FOLDS):
    """Generate, cross-validate, refit and score one ``(method, seed)`` cell."""
    data = gen_synthetic(n, seed)
    c, lam = cross_validate(method, data, c_grid, lambda_grid, folds)
    model = fit_method(method, data, c, lam)
    return c, lam, mean_test_error(model, data)


def _run_cells(cells, fn):
    workers = worker_count()
    if workers > 1 and len(cells) > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lambda a: fn(*a), cells))
    return [fn(*a) for a in cells]


def run_table1(methods=("rkhm_qr_poly",), n=30, seeds=(0, 1, 2, 3, 4), c_grid=DEFAULT_C_GRID,
               lambda_grid=DEFAULT_LAMBDA_GRID, folds=DEFAULT_FOLDS):
    """Mean test error ± standard deviation over seeds for each method."""
    methods, seeds = list(methods), [int(s) for s in seeds]
    if not methods:
        raise ContractError("methods must be nonempty")
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ContractError(f"unknown methods {unknown}; known: {sorted(METHODS)}")
    cells = [(m, n, s, c_grid, lambda_grid, folds) for m in methods for s in seeds]
    results = _run_cells(cells, run_seed)
    reports = []
    for k, m in enumerate(methods):
        rows = results[k * len(seeds):(k + 1) * len(seeds)]
        reports.append(ExperimentReport(m, n, seeds, [r[0] for r in rows], [r[1] for r in rows],
                                        [r[2] for r in rows]))
    return reports


def learning_curve(method, n_list, seeds, **cv):
    """Per-seed test errors for each training size."""
    return {int(n): run_table1([method], n, seeds, **cv)[0].per_seed_errors for n in n_list}


# -- solver benchmark -------------------------------------------------------------------

def random_circulant_problem(n, p, seed):
    """A well-conditioned circulant-kernel regression problem.

    Inputs and targets have coefficients of size ``1/sqrt(p)``; the kernel is
    a degree-2 polynomial kernel with parameters near the identity.
    """
    rng = np.random.default_rng([int(n), int(p), int(seed)])
    scale = 1.0 / math.sqrt(p)

    def ele():
        return CirculantElement(scale * (rng.standard_normal(p) + 1j * rng.standard_normal(p)))

    params = [CirculantElement.identity(p) + 0.3 * ele() for _ in range(3)]
    spec = PolynomialKernel([params])
    inputs = [ele() for _ in range(n)]
    ys = [ele() for _ in range(n)]
    return spec, inputs, ys


def circulant_cost_model(n, p):
    return n * p * p * math.log2(p) + n ** 3 * p


def dense_cost_model(n, p):
    return (n * p) ** 3


def cg_iteration_model(n, p):
    return n * n * p


def _stack(coeffs):
    return np.concatenate([c.matrix() for c in coeffs], axis=0)


def _rel(a, b):
    den = max(np.linalg.norm(a), np.linalg.norm(b))
    return float(np.linalg.norm(a - b) / den) if den > 0 else 0.0


def _slopes(records, key):
    pts = [(r["n"], r["p"], r[key]) for r in records if r.get(key)]
    ns = {n for n, _, _ in pts}
    ps = {p for _, p, _ in pts}
    if len(ns) < 2 and len(ps) < 2:
        return None
    cols = [np.ones(len(pts))]
    names = []
    if len(ns) > 1:
        cols.append(np.log([n for n, _, _ in pts]))
        names.append("n")
    if len(ps) > 1:
        cols.append(np.log([p for _, p, _ in pts]))
        names.append("p")
    coef, *_ = np.linalg.lstsq(np.column_stack(cols), np.log([v for _, _, v in pts]), rcond=None)
    return dict(zip(names, map(float, coef[1:])))


def run_benchmark(n_list, p_list, solvers=("dense", "circulant", "cg"), seed=0, lam=0.1, tol=1e-10,
                  max_iter=10000):
    """Flop counts, timings and cross-solver agreement over an ``(n, p)`` sweep."""
    n_list, p_list, solvers = list(n_list), list(p_list), list(solvers)
    if not n_list or not p_list or not solvers:
        raise ContractError("sweeps and solver list must be nonempty")
    bad = [s for s in solvers if s not in ("dense", "circulant", "cg")]
    if bad:
        raise ContractError(f"unknown solvers {bad}")
    records = []
    for n in n_list:
        for p in p_list:
            spec, inputs, ys = random_circulant_problem(n, p, seed)
            gram = assemble_gram(spec, inputs)
            rec = {"n": n, "p": p, "seed": seed}
            sols = {}
            for s in solvers:
                t0 = time.perf_counter()
                if s == "dense":
                    coeffs, counter = fit_direct_dense(gram, ys, lam)
                elif s == "circulant":
                    coeffs, counter = fit_circulant_fast(gram, ys, lam)
                else:
                    coeffs, counter, iters = fit_block_cg(gram, ys, lam, tol, max_iter)
                    rec["cg_iterations"] = iters
                    rec["cg_per_iteration"] = counter.per_iteration[0] if counter.per_iteration else 0
                rec[f"{s}_seconds"] = time.perf_counter() - t0
                rec[f"{s}_flops"] = counter.complex_mul_adds
                rec[f"{s}_fft_calls"] = counter.fft_calls
                rec[f"{s}_residual"] = counter.residual
                sols[s] = _stack(coeffs)
            names = list(sols)
            rec["max_relative_disagreement"] = max(
                (_rel(sols[a], sols[b]) for i, a in enumerate(names) for b in names[i + 1:]), default=0.0)
            records.append(rec)
    slopes = {s: _slopes(records, f"{s}_flops") for s in solvers}
    if "cg" in solvers:
        slopes["cg_per_iteration"] = _slopes(records, "cg_per_iteration")
    return {"instances": records, "slopes": slopes, "lambda": lam, "tol": tol,
            "transform_cost": {str(p): fft.transform_cost(p) for p in p_list}}
