"""Numerical property suite shared by ``rkhm selftest`` and the test suite.

Each check returns a :class:`Check` with a pass flag, the number of cases
it ran and the worst witness values.  Checks marked ``slow`` run the full
synthetic experiment and are skipped by ``rkhm selftest`` unless ``--all``
is given.
"""
from dataclasses import dataclass, field
import math
import time

import numpy as np

from . import algebra as A
from . import bounds, experiments, fft
from . import kernels as K
from .images import ImageSample, ShiftMap, box_grid, modulus_and_phase, origin_index
from .solver import assemble_gram, fit_block_cg, fit_circulant_fast, fit_direct_dense, inner_product


@dataclass
class Check:
    name: str
    family: str
    passed: bool
    count: int
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        items = ", ".join(f"{k}={_fmt(v)}" for k, v in self.detail.items())
        return f"[{status}] {self.name} ({self.family}, {self.count} cases, {self.seconds:.1f}s): {items}"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _rel(a, b):
    den = max(np.linalg.norm(a), np.linalg.norm(b))
    return float(np.linalg.norm(a - b) / den) if den > 0 else 0.0


def _stack(coeffs):
    return np.concatenate([c.matrix() for c in coeffs], axis=0)


# -- solvers ----------------------------------------------------------------------------

def check_solver_equivalence(seeds=range(20), ns=(2, 4, 8), ps=(4, 8)):
    worst_fast, worst_cg, count = 0.0, 0.0, 0
    for seed in seeds:
        for n in ns:
            for p in ps:
                spec, inputs, ys = experiments.random_circulant_problem(n, p, seed)
                gram = assemble_gram(spec, inputs)
                dense = _stack(fit_direct_dense(gram, ys, 0.1)[0])
                fast = _stack(fit_circulant_fast(gram, ys, 0.1)[0])
                cg = _stack(fit_block_cg(gram, ys, 0.1, tol=1e-10, max_iter=10000)[0])
                worst_fast = max(worst_fast, _rel(fast, dense))
                worst_cg = max(worst_cg, _rel(cg, dense), _rel(cg, fast))
                count += 1
    return Check("solver_oracle_equivalence", "solvers", worst_fast <= 1e-8 and worst_cg <= 1e-6, count,
                 {"max_fast_vs_dense": worst_fast, "max_cg_vs_direct": worst_cg})


# -- algebra ------------------------------------------------------------------------------

def check_isomorphism(ps=(2, 3, 4, 8, 12), pairs=200, seed=0):
    rng = np.random.default_rng(seed)
    worst = {"product": 0.0, "involution": 0.0, "norm": 0.0}
    for p in ps:
        for _ in range(pairs):
            x, y = A.random_circulant(p, rng), A.random_circulant(p, rng)
            mx, my = x.matrix(), y.matrix()
            scale = max(1.0, np.linalg.norm(mx, 2) * np.linalg.norm(my, 2))
            worst["product"] = max(worst["product"], np.abs((x @ y).matrix() - mx @ my).max() / scale)
            worst["involution"] = max(worst["involution"],
                                      np.abs(x.adjoint().matrix() - mx.conj().T).max() / max(1.0, x.norm()))
            worst["norm"] = max(worst["norm"], abs(x.norm() - np.linalg.norm(mx, 2)) / max(1.0, x.norm()))
    return Check("algebra_isomorphism", "algebra", max(worst.values()) <= 1e-10, len(ps) * pairs,
                 {k: float(v) for k, v in worst.items()})


def check_diagonalization(ps=(2, 3, 4, 8, 12), per_p=100, seed=1):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p in ps:
        f = fft.dft_matrix(p)
        for _ in range(per_p):
            x = A.random_circulant(p, rng)
            rec = f @ np.diag(x.spectrum) @ f.conj().T
            worst = max(worst, np.abs(rec - x.matrix()).max() / max(1.0, x.norm()))
    return Check("diagonalization", "algebra", worst <= 1e-10, len(ps) * per_p, {"max_reconstruction": float(worst)})


# -- kernels -------------------------------------------------------------------------------

def kernel_zoo(p=3, seed=0):
    """One instance of every kernel family with a generator of input points."""
    rng = np.random.default_rng(seed)

    def rc(s=1.0):
        return A.random_circulant(p, rng) * s

    def rd(s=1.0):
        return A.random_dense(p, rng) * s

    grid1 = box_grid(p)
    grid2 = box_grid(2, 2)

    def img(size):
        return lambda: ImageSample(rng.standard_normal(size) + 1j * rng.standard_normal(size))

    eye = A.DenseOperator.identity(p)
    pos = A.DenseOperator(np.diag(rng.uniform(0.5, 2.0, p)))
    zoo = {
        "linear": (K.LinearKernel([rc(), rc()], [rc(), rc()]), lambda: [rc(), rc()]),
        "linear_dense": (K.LinearKernel([rd()], [rd()]), lambda: [rd()]),
        "polynomial": (K.PolynomialKernel([[rc(), rc(), rc()]]), lambda: [rc()]),
        "polynomial_dense": (K.PolynomialKernel([[rd(0.5), rd(0.5), rd(0.5), rd(0.5)]]), lambda: [rd()]),
        "gaussian_atomic": (K.GaussianAtomicKernel([K.GaussianAtom(eye, [rd(0.3)], [rd(0.3)]),
                                                    K.GaussianAtom(pos, [rd(0.3)], [rd(0.3)])]), lambda: [rd()]),
        "cnn_nested": (K.CnnNestedKernel([rc(0.5), rc(0.5)], [rc(), rc()], [[(1, 1.0), (2, 0.5)], [(1, 0.7), (3, 0.1)]]),
                       lambda: rc()),
        "conv_scalar": (K.ConvScalarKernel(1.3, 0.8, grid1), img(p)),
        "conv_circulant": (K.ConvCirculantKernel(1.3, 0.8, grid1), img(p)),
        "conv_grid": (K.ConvGridKernel(1.3, 0.8, grid2, psi="cyclic"), img(4)),
        "conv_general": (K.ConvGeneralKernel(1.3, 0.8, grid2, psi="cyclic", a1=A.random_dense(4, rng),
                                             a2=A.random_dense(4, rng), a3=A.random_dense(4, rng),
                                             a4=A.random_dense(4, rng)), img(4)),
        "qr_poly": (K.QrPolyKernel(0.5, 3), lambda: rd()),
        "separable_gaussian_T": (K.SeparableKernel("gaussian", 1.0, A.DenseOperator(np.ones((p, p)))),
                                 lambda: rng.random(p)),
        "separable_laplacian_I": (K.SeparableKernel("laplacian", 1.0, eye), lambda: rng.random(p)),
        "separable_polynomial_I": (K.SeparableKernel("polynomial", -0.5, eye), lambda: rng.random(p)),
        "nonseparable_gaussian": (K.NonSeparableKernel("gaussian", 1.0), lambda: rng.random(p)),
        "nonseparable_laplacian": (K.NonSeparableKernel("laplacian", 1.0), lambda: rng.random(p)),
        "nonseparable_polynomial": (K.NonSeparableKernel("polynomial", -0.5), lambda: rng.random(p)),
    }
    return zoo


def check_positive_definiteness(n_points=4, trials=50, seed=0):
    worst, failures, herm = math.inf, [], 0.0
    zoo = kernel_zoo(seed=seed)
    for name, (spec, gen) in zoo.items():
        pts = [gen() for _ in range(n_points)]
        rep = K.check_positive_definite(spec, pts, trials=trials, tol=1e-8, rng=seed)
        worst = min(worst, rep.min_quadratic_eigenvalue, rep.gram_min_eigenvalue)
        herm = max(herm, rep.hermitian_deviation)
        if not rep.passed:
            failures.append(name)
    return Check("positive_definiteness", "kernels", not failures, len(zoo) * trials,
                 {"min_relative_eigenvalue": float(worst), "max_hermitian_deviation": float(herm),
                  "failing": failures or "none"})


def _random_image(rng, p, zero_prob=0.2):
    v = rng.standard_normal(p) + 1j * rng.standard_normal(p)
    v[rng.random(p) < zero_prob] = 0
    return ImageSample(v)


def check_circulant_lift(ps=(3, 5, 8), pairs=50, seed=0):
    rng = np.random.default_rng(seed)
    worst_avg, worst_row = 0.0, 0.0
    for p in ps:
        spec = K.ConvCirculantKernel(rng.uniform(0.5, 2), rng.uniform(0.5, 2), box_grid(p))
        for _ in range(pairs):
            x, y = _random_image(rng, p), _random_image(rng, p)
            m = spec(x, y).matrix()
            s = K.eval_conv_scalar(spec, x, y)
            scale = max(1.0, abs(s))
            worst_avg = max(worst_avg, abs(m.sum() / p - s) / scale)
            worst_row = max(worst_row, np.abs(m.sum(axis=1) - s).max() / scale)
    return Check("circulant_lift_identities", "kernels", max(worst_avg, worst_row) <= 1e-10, len(ps) * pairs,
                 {"max_average_identity": float(worst_avg), "max_row_sum_identity": float(worst_row)})


def check_grid_origin(pairs=50, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    grids = [box_grid(5), box_grid(2, 3)]
    for t in range(pairs):
        g = grids[t % 2]
        spec = K.ConvGridKernel(rng.uniform(0.5, 2), rng.uniform(0.5, 2), g, psi="cyclic")
        x, y = _random_image(rng, g.shape[0]), _random_image(rng, g.shape[0])
        val = K.eval_conv_grid(spec, x, y)[origin_index(g)]
        worst = max(worst, abs(val - K.eval_conv_scalar(spec, x, y)))
    return Check("grid_kernel_origin", "kernels", worst <= 1e-12, pairs, {"max_abs_difference": float(worst)})


def conv_general_monte_carlo(spec, x, y, draws=10 ** 6, seed=0, chunk=50_000):
    """Sample mean and standard error of the integrand of the operator-valued convolutional kernel.

    ``omega ~ N(0, beta^-2 I_m)`` and ``eta ~ N(0, sigma^-2 I_2)`` (the phase
    ``x~`` is read as a point of R^2).
    """
    rng = np.random.default_rng(seed)
    grid = spec.grid.astype(float)
    t = spec.psi.table
    a1, a2, a3, a4 = (m.entries for m in (spec.a1, spec.a2, spec.a3, spec.a4))
    mx, px = modulus_and_phase(x.values)
    my, py = modulus_and_phase(y.values)
    p, m = grid.shape
    total = np.zeros((p, p), dtype=complex)
    total_sq_re = np.zeros((p, p))
    total_sq_im = np.zeros((p, p))
    done = 0
    while done < draws:
        b = min(chunk, draws - done)
        omega = rng.standard_normal((b, m)) / spec.beta
        eta = rng.standard_normal((b, 2)) / spec.sigma

        def features(mod, phase):
            v = np.zeros((b, p, p), dtype=complex)
            for z in range(p):
                idx = t[z]
                shift = np.exp(-1j * omega @ grid[idx].T)                       # (b, p)
                ph = phase[idx]
                turn = np.exp(-1j * (eta[:, :1] * ph.real + eta[:, 1:] * ph.imag))  # (b, p)
                inner = a2 @ (mod[idx][:, None] * a1)
                v += a4 @ (turn[:, :, None] * (a3 @ (shift[:, :, None] * inner)))
            return v

        vx, vy = features(mx, px), features(my, py)
        sample = np.einsum("bji,bjk->bik", vx.conj(), vy)
        total += sample.sum(axis=0)
        total_sq_re += (sample.real ** 2).sum(axis=0)
        total_sq_im += (sample.imag ** 2).sum(axis=0)
        done += b
    mean = total / draws
    var_re = total_sq_re / draws - mean.real ** 2
    var_im = total_sq_im / draws - mean.imag ** 2
    se = np.sqrt(np.clip(var_re, 0, None) / draws) + 1j * np.sqrt(np.clip(var_im, 0, None) / draws)
    return mean, se


def check_general_reduction(pairs=50, draws=10 ** 6, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    g = box_grid(2, 2)
    for _ in range(pairs):
        beta, sigma = rng.uniform(0.5, 2), rng.uniform(0.5, 2)
        gen = K.ConvGeneralKernel(beta, sigma, g, psi="cyclic")
        grid_k = K.ConvGridKernel(beta, sigma, g, psi="cyclic")
        x, y = _random_image(rng, 4), _random_image(rng, 4)
        d = np.diag(gen(x, y).matrix())
        worst = max(worst, np.abs(d - K.eval_conv_grid(grid_k, x, y)).max())
    g3 = box_grid(3)
    spec = K.ConvGeneralKernel(1.2, 0.9, g3, psi="cyclic",
                               **{f"a{i}": A.random_dense(3, rng) * 0.7 for i in range(1, 5)})
    x, y = _random_image(rng, 3, 0.0), _random_image(rng, 3, 0.0)
    closed = spec(x, y).matrix()
    mean, se = conv_general_monte_carlo(spec, x, y, draws=draws, seed=seed)
    z_re = np.abs(closed.real - mean.real) / np.maximum(se.real, 1e-300)
    z_im = np.abs(closed.imag - mean.imag) / np.maximum(se.imag, 1e-300)
    z = float(max(z_re.max(), z_im.max()))
    return Check("general_kernel_reduction", "kernels", worst <= 1e-8 and z <= 3.0, pairs + 1,
                 {"max_diagonal_difference": float(worst), "max_mc_z_score": z, "draws": draws})


# -- module and order inequalities ------------------------------------------------------

def _random_psd(p, rng):
    m = rng.standard_normal((p, p)) + 1j * rng.standard_normal((p, p))
    return m @ m.conj().T / p


def check_jensen(trials=100, seed=0):
    rng = np.random.default_rng(seed)
    worst = math.inf
    for _ in range(trials):
        p, m = int(rng.integers(2, 6)), int(rng.integers(2, 200))
        cs = [_random_psd(p, rng) for _ in range(m)]
        roots = [A.positive_sqrt(A.DenseOperator(c)).entries for c in cs]
        lhs = np.mean(roots, axis=0)
        rhs = A.positive_sqrt(A.DenseOperator(np.mean(cs, axis=0))).entries
        diff = rhs - lhs
        scale = max(1.0, np.linalg.norm(rhs, 2))
        worst = min(worst, np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))[0] / scale)
    return Check("jensen_inequality", "bounds", worst >= -1e-9, trials, {"min_relative_eigenvalue": float(worst)})


def check_cauchy_schwarz(trials=100, seed=0):
    rng = np.random.default_rng(seed)
    zoo = kernel_zoo(seed=seed)
    names = ["linear_dense", "polynomial", "gaussian_atomic", "qr_poly", "conv_general", "cnn_nested"]
    worst = math.inf
    for t in range(trials):
        spec, gen = zoo[names[t % len(names)]]
        nu, nv = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        xs, ys = [gen() for _ in range(nu)], [gen() for _ in range(nv)]
        circ = isinstance(spec(xs[0], xs[0]), A.CirculantElement)
        p = spec(xs[0], xs[0]).p
        draw = (lambda: A.random_circulant(p, rng)) if circ else (lambda: A.random_dense(p, rng))
        a, b = [draw() for _ in range(nu)], [draw() for _ in range(nv)]
        uu = inner_product(spec, xs, a, xs, a)
        vv = inner_product(spec, ys, b, ys, b)
        uv = inner_product(spec, xs, a, ys, b)
        deficit = (uu.norm() * vv - uv.adjoint() @ uv).matrix()
        scale = max(1.0, uu.norm() * vv.norm())
        worst = min(worst, np.linalg.eigvalsh(0.5 * (deficit + deficit.conj().T))[0] / scale)
    return Check("cauchy_schwarz", "bounds", worst >= -1e-8, trials, {"min_relative_eigenvalue": float(worst)})


# -- bounds -------------------------------------------------------------------------------

def check_bound_arithmetic():
    b = bounds.BoundInputs(B=1, C=1, D=1, E=1, p=1, n=100, delta=2 / math.e)
    v100 = bounds.generalization_bound(b)
    b400 = bounds.BoundInputs(B=1, C=1, D=1, E=1, p=1, n=400, delta=2 / math.e)
    v400 = bounds.generalization_bound(b400)
    ok = abs(v100 - 1.55563) <= 1e-4 and abs(v400 - v100 / 2) <= 1e-12 * v100
    return Check("bound_arithmetic", "bounds", ok, 2, {"bound_n100": v100, "bound_n400": v400,
                                                       "halving_error": abs(v400 - v100 / 2)})


# -- complexity ---------------------------------------------------------------------------

def check_complexity(ns=(4, 8, 16), ps=(8, 16, 32), calibrate=(4, 8)):
    sweep = experiments.run_benchmark(list(ns), list(ps))["instances"]
    again = experiments.run_benchmark([calibrate[0]], [calibrate[1]])["instances"][0]
    by = {(r["n"], r["p"]): r for r in sweep}
    cal = by[calibrate] if calibrate in by else experiments.run_benchmark([calibrate[0]], [calibrate[1]])["instances"][0]
    n0, p0 = calibrate
    k1 = cal["circulant_flops"] / experiments.circulant_cost_model(n0, p0)
    k2 = cal["dense_flops"] / experiments.dense_cost_model(n0, p0)
    k3 = cal["cg_per_iteration"] / experiments.cg_iteration_model(n0, p0)
    circ_ratio, dense_ratio, cg_lo, cg_hi, agree = 0.0, math.inf, math.inf, 0.0, 0.0
    for (n, p), r in by.items():
        circ_ratio = max(circ_ratio, r["circulant_flops"] / experiments.circulant_cost_model(n, p) / k1)
        dense_ratio = min(dense_ratio, r["dense_flops"] / experiments.dense_cost_model(n, p) / k2)
        q = r["cg_per_iteration"] / experiments.cg_iteration_model(n, p) / k3
        cg_lo, cg_hi = min(cg_lo, q), max(cg_hi, q)
        agree = max(agree, r["max_relative_disagreement"])
    deterministic = all(again[k] == cal[k] for k in ("dense_flops", "circulant_flops", "cg_flops", "cg_per_iteration"))
    ok = circ_ratio <= 2 and dense_ratio >= 0.5 and cg_lo >= 0.5 and cg_hi <= 2 and deterministic and agree <= 1e-6
    return Check("complexity_accounting", "solvers", ok, len(by),
                 {"kappa1": k1, "kappa2": k2, "max_circulant_over_kappa1": circ_ratio,
                  "min_dense_over_kappa2": dense_ratio, "cg_per_iter_ratio_range": [cg_lo, cg_hi],
                  "deterministic": deterministic, "max_disagreement": agree})


# -- synthetic experiment -----------------------------------------------------------------

ALL_METHODS = tuple(experiments.METHODS)


def check_table1(n=30, seeds=(0, 1, 2, 3, 4)):
    reports = {r.method: r for r in experiments.run_table1(ALL_METHODS, n, seeds)}
    rkhm = reports["rkhm_qr_poly"].mean_test_error
    baselines = {m: r.mean_test_error for m, r in reports.items() if m != "rkhm_qr_poly"}
    beaten = sorted(m for m, v in baselines.items() if rkhm < v)
    curve = experiments.learning_curve("rkhm_qr_poly", [10, 50], seeds)
    med10, med50 = float(np.median(curve[10])), float(np.median(curve[50]))
    ok = rkhm <= 0.50 and bool(beaten) and med50 < med10
    detail = {"rkhm_mean": rkhm, "rkhm_std": reports["rkhm_qr_poly"].std_over_seeds,
              "baselines_beaten": beaten or "none", "median_n10": med10, "median_n50": med50}
    detail.update({f"{m}_mean": v for m, v in baselines.items()})
    return Check("synthetic_reproduction", "experiments", ok, len(reports) * len(seeds), detail)


def generalization_gap(seed, n=30, delta=0.1, method="rkhm_qr_poly"):
    """Trace of (mean test loss - mean train loss) and the bound with measured constants."""
    from .solver import model_norm_B
    data = experiments.gen_synthetic(n, seed)
    c, lam = experiments.cross_validate(method, data)
    est = experiments.fit_method(method, data, c, lam)
    pre, model, spec = est.adapter_, est.model_, est.spec_

    def losses(X, Y):
        out = []
        for x, y in zip(X, Y):
            e = (est.predict_algebra(x) - pre.embed_target(y)).matrix()
            out.append(float(np.trace(e.conj().T @ e).real))
        return float(np.mean(out))

    gap = losses(data.test_x, data.test_y) - losses(data.train_x, data.train_y)
    B = model_norm_B(model, est.gram_)
    xs = [pre.embed_input(x) for x in np.vstack([data.train_x, data.test_x])]
    D = max(spec(x, x).norm() for x in xs)
    E = max(pre.embed_target(y).norm() for y in np.vstack([data.train_y, data.test_y]))
    p = data.train_x.shape[1]
    bound = bounds.generalization_bound(bounds.BoundInputs(B, 1.0, D, E, p, n, delta))
    return gap, bound, {"B": B, "D": D, "E": E}


def check_generalization(seeds=(0, 1, 2, 3, 4), n=30, delta=0.1):
    passes, gaps, bs = 0, [], []
    for s in seeds:
        gap, bound, _ = generalization_gap(s, n, delta)
        gaps.append(gap)
        bs.append(bound)
        passes += gap <= bound
    return Check("generalization_bound_sanity", "bounds", passes >= 4, len(seeds),
                 {"pass_rate": f"{passes}/{len(seeds)}", "gaps": gaps, "bounds": bs})


CHECKS = [
    ("solver_oracle_equivalence", check_solver_equivalence, False),
    ("algebra_isomorphism", check_isomorphism, False),
    ("diagonalization", check_diagonalization, False),
    ("positive_definiteness", check_positive_definiteness, False),
    ("circulant_lift_identities", check_circulant_lift, False),
    ("grid_kernel_origin", check_grid_origin, False),
    ("general_kernel_reduction", check_general_reduction, False),
    ("jensen_inequality", check_jensen, False),
    ("cauchy_schwarz", check_cauchy_schwarz, False),
    ("bound_arithmetic", check_bound_arithmetic, False),
    ("complexity_accounting", check_complexity, False),
    ("synthetic_reproduction", check_table1, True),
    ("generalization_bound_sanity", check_generalization, True),
]


def run_check(name):
    for n, fn, _ in CHECKS:
        if n == name:
            t0 = time.perf_counter()
            res = fn()
            res.seconds = time.perf_counter() - t0
            return res
    raise KeyError(name)


def run_all(include_slow=False, names=None):
    out = []
    for name, _, slow in CHECKS:
        if names is not None and name not in names:
            continue
        if slow and not include_slow and names is None:
            continue
        out.append(run_check(name))
    return out
