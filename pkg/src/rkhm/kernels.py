"""C*-algebra-valued positive definite kernels.

Every kernel is a small dataclass carrying its parameters; ``k(x, y)`` (or
``k.evaluate(x, y)``) returns an algebra value.  Families:

* :class:`LinearKernel`, :class:`PolynomialKernel`, :class:`GaussianAtomicKernel`
  act on tuples of ``d`` algebra elements.
* :class:`CnnNestedKernel` acts on circulant elements and nests activations
  with nonnegative power-series coefficients.
* :class:`ConvScalarKernel`, :class:`ConvCirculantKernel`,
  :class:`ConvGridKernel`, :class:`ConvGeneralKernel` act on images.
* :class:`QrPolyKernel` acts on dense operators through their QR factors.
* :class:`SeparableKernel` and :class:`NonSeparableKernel` are the
  operator-valued baselines built from scalar kernels on real vectors.

The two Gaussian integrals in the circulant and general convolutional
kernels are evaluated in closed form with the measures normalized to
probability measures, so each one contributes exactly
``exp(-|u - u'|^2 / (2 s^2))``.
"""
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np

from . import algebra
from .algebra import AlgebraValue, CirculantElement, DenseOperator, as_dense, is_positive
from .codec import decode_value, encode_value
from .exceptions import ContractError, SpecValidationError
from .images import ImageSample, ShiftMap, as_grid, modulus_and_phase

SCALAR_KERNELS = ("gaussian", "laplacian", "polynomial")


def _check_params(values, what):
    values = list(values)
    if not values:
        raise SpecValidationError(f"{what} must be nonempty")
    for v in values:
        if not isinstance(v, AlgebraValue):
            raise SpecValidationError(f"{what} must contain algebra elements")
    ps = {v.p for v in values}
    if len(ps) != 1:
        raise SpecValidationError(f"all parameters must share one p, got {sorted(ps)}")
    return values, ps.pop()


def _as_tuple(x, d, p):
    if isinstance(x, AlgebraValue):
        x = [x]
    x = list(x)
    if len(x) != d or not all(isinstance(e, AlgebraValue) for e in x):
        raise ContractError(f"expected {d} algebra elements as input")
    if any(e.p != p for e in x):
        raise ContractError(f"input elements must have p={p}")
    return x


class Kernel:
    """Common interface; subclasses implement :meth:`evaluate`."""

    variant: ClassVar[str] = ""

    def __call__(self, x, y):
        return self.evaluate(x, y)

    def evaluate(self, x, y):
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError


# -- Def 3.1 families ----------------------------------------------------------

@dataclass(eq=False)
class LinearKernel(Kernel):
    """``k(x, y) = sum_i a1_i* x_i* a2_i* a2_i y_i a1_i``."""

    a1: list
    a2: list
    variant: ClassVar[str] = "linear"

    def __post_init__(self):
        self.a1, p1 = _check_params(self.a1, "a1")
        self.a2, p2 = _check_params(self.a2, "a2")
        if len(self.a1) != len(self.a2) or p1 != p2:
            raise SpecValidationError("a1 and a2 must have matching length and p")
        self.p = p1

    @property
    def d(self):
        return len(self.a1)

    def evaluate(self, x, y):
        return eval_linear(self, x, y)

    def to_dict(self):
        return {"variant": self.variant, "d": self.d,
                "a1": [encode_value(a) for a in self.a1], "a2": [encode_value(a) for a in self.a2]}


@dataclass(eq=False)
class PolynomialKernel(Kernel):
    """Degree-``q`` kernel with parameters ``a[i][j]``, ``j = 0..q``."""

    a: list
    variant: ClassVar[str] = "polynomial"

    def __post_init__(self):
        rows = [list(r) for r in self.a]
        if not rows or len({len(r) for r in rows}) != 1 or len(rows[0]) < 2:
            raise SpecValidationError("a must be a d x (q+1) array with q >= 1")
        _, self.p = _check_params([v for r in rows for v in r], "a")
        self.a = rows

    @property
    def d(self):
        return len(self.a)

    @property
    def q(self):
        return len(self.a[0]) - 1

    def evaluate(self, x, y):
        return eval_polynomial(self, x, y)

    def to_dict(self):
        return {"variant": self.variant, "d": self.d, "q": self.q,
                "a": [[encode_value(v) for v in row] for row in self.a]}


@dataclass(eq=False)
class GaussianAtom:
    weight: DenseOperator
    a1: list
    a2: list


@dataclass(eq=False)
class GaussianAtomicKernel(Kernel):
    """Gaussian kernel against a finite atomic positive-operator-valued measure."""

    atoms: list
    variant: ClassVar[str] = "gaussian_atomic"

    def __post_init__(self):
        if not self.atoms:
            raise SpecValidationError("at least one atom is required")
        ds, ps = set(), set()
        for atom in self.atoms:
            atom.weight = as_dense(atom.weight)
            if not is_positive(atom.weight, 1e-10):
                raise SpecValidationError("atom weights must be positive operators")
            atom.a1 = [as_dense(v) for v in atom.a1]
            atom.a2 = [as_dense(v) for v in atom.a2]
            if len(atom.a1) != len(atom.a2):
                raise SpecValidationError("a1 and a2 must have the same length")
            ds.add(len(atom.a1))
            ps.update(v.p for v in [atom.weight, *atom.a1, *atom.a2])
        if len(ds) != 1 or len(ps) != 1:
            raise SpecValidationError("atoms must share d and p")
        self.d, self.p = ds.pop(), ps.pop()

    def evaluate(self, x, y):
        return eval_gaussian_atomic(self, x, y)

    def to_dict(self):
        return {"variant": self.variant, "d": self.d, "atoms": [
            {"weight": encode_value(a.weight), "a1": [encode_value(v) for v in a.a1],
             "a2": [encode_value(v) for v in a.a2]} for a in self.atoms]}


def eval_linear(spec, x, y):
    x = _as_tuple(x, spec.d, spec.p)
    y = _as_tuple(y, spec.d, spec.p)
    total = None
    for a1, a2, xi, yi in zip(spec.a1, spec.a2, x, y):
        term = a1.H @ xi.H @ a2.H @ a2 @ yi @ a1
        total = term if total is None else total + term
    return total


def eval_polynomial(spec, x, y):
    x = _as_tuple(x, spec.d, spec.p)
    y = _as_tuple(y, spec.d, spec.p)
    q = spec.q
    total = None
    for a, xi, yi in zip(spec.a, x, y):
        left = a[0].H @ xi.H
        for j in range(1, q):
            left = left @ a[j].H @ xi.H
        # right factor runs the parameters in reverse: y a_q, y a_{q-1}, ..., y a_1
        right = yi @ a[q - 1]
        for j in range(q - 2, -1, -1):
            right = right @ yi @ a[j]
        term = left @ a[q].H @ a[q] @ right
        total = term if total is None else total + term
    return total


def eval_gaussian_atomic(spec, x, y):
    x = [as_dense(e) for e in _as_tuple(x, spec.d, spec.p)]
    y = [as_dense(e) for e in _as_tuple(y, spec.d, spec.p)]
    total = None
    for atom in spec.atoms:
        ex = _atom_exponential(atom, x)
        ey = _atom_exponential(atom, y)
        term = ex.H @ atom.weight @ ey
        total = term if total is None else total + term
    return total


def _atom_exponential(atom, x):
    gen = None
    for a1, a2, xi in zip(atom.a1, atom.a2, x):
        t = a2 @ xi @ a1
        gen = t if gen is None else gen + t
    return algebra.expm(1j * gen)


# -- CNN-like nested kernel ---------------------------------------------------------

def _as_activation(terms):
    out = []
    for deg, coef in terms:
        if int(deg) != deg or deg < 1:
            raise SpecValidationError("activation degrees must be integers >= 1")
        if not np.isfinite(coef) or coef < 0:
            raise SpecValidationError("activation coefficients must be nonnegative")
        out.append((int(deg), float(coef)))
    if not out:
        raise SpecValidationError("an activation needs at least one term")
    return out


@dataclass(eq=False)
class CnnNestedKernel(Kernel):
    """Nested circulant kernel
    ``s_L(b_L* b_L + s_{L-1}(... s_1(b_1* b_1 + x* a_1* a_1 y) a_2* a_2 ...) a_L* a_L)``.

    ``activations[j]`` is a list of ``(degree, coefficient)`` pairs describing
    the polynomial ``s_j(t) = sum coefficient * t**degree``.
    """

    a: list
    b: list
    activations: list
    variant: ClassVar[str] = "cnn_nested"

    def __post_init__(self):
        self.a, p = _check_params(self.a, "a")
        self.b, pb = _check_params(self.b, "b")
        if not all(isinstance(v, CirculantElement) for v in self.a + self.b):
            raise SpecValidationError("nested kernel parameters must be circulant")
        if not (len(self.a) == len(self.b) == len(self.activations)) or p != pb:
            raise SpecValidationError("a, b and activations must all have length L and share p")
        self.activations = [_as_activation(t) for t in self.activations]
        self.p = p

    @property
    def L(self):
        return len(self.a)

    def evaluate(self, x, y):
        return eval_cnn_nested(self, x, y)

    def to_dict(self):
        return {"variant": self.variant, "L": self.L,
                "a": [encode_value(v) for v in self.a], "b": [encode_value(v) for v in self.b],
                "activations": [[[d, c] for d, c in act] for act in self.activations]}


def _apply_activation(terms, s):
    return sum(c * s ** d for d, c in terms)


def eval_cnn_nested(spec, x, y):
    for v in (x, y):
        if not isinstance(v, CirculantElement) or v.p != spec.p:
            raise ContractError(f"nested kernel inputs must be circulant elements with p={spec.p}")
    # all factors are circulant, so the recursion runs pointwise on spectra
    a2 = [np.abs(v.spectrum) ** 2 for v in spec.a]
    b2 = [np.abs(v.spectrum) ** 2 for v in spec.b]
    k = _apply_activation(spec.activations[0], b2[0] + np.conj(x.spectrum) * a2[0] * y.spectrum)
    for j in range(1, spec.L):
        k = _apply_activation(spec.activations[j], b2[j] + k * a2[j])
    return CirculantElement.from_spectrum(k)


# -- convolutional kernels on images ---------------------------------------------------

def _image_values(x, grid):
    if isinstance(x, ImageSample):
        if x.grid is not None and not np.array_equal(x.grid, grid):
            raise ContractError("image grid does not match the kernel grid")
        v = x.values
    else:
        v = np.asarray(x, dtype=complex).reshape(-1)
    if v.size != grid.shape[0]:
        raise ContractError(f"image has {v.size} values, grid has {grid.shape[0]} points")
    return v


@dataclass(eq=False)
class _ConvBase(Kernel):
    beta: float
    sigma: float
    grid: np.ndarray

    def __post_init__(self):
        if not (self.beta > 0 and self.sigma > 0):
            raise SpecValidationError("beta and sigma must be positive")
        self.beta = float(self.beta)
        self.sigma = float(self.sigma)
        self.grid = as_grid(self.grid)
        diff = self.grid[:, None, :] - self.grid[None, :, :]
        self._spatial = np.exp(-np.sum(diff.astype(float) ** 2, axis=-1) / (2 * self.beta ** 2))

    @property
    def p(self):
        return self.grid.shape[0]

    def pair_weights(self, x, y):
        """Matrix ``W[z, z'] = |x(z)||y(z')| e^{-|z-z'|^2/2b^2} e^{-|x~(z)-y~(z')|^2/2s^2}``."""
        mx, px = modulus_and_phase(_image_values(x, self.grid))
        my, py = modulus_and_phase(_image_values(y, self.grid))
        angular = np.exp(-np.abs(px[:, None] - py[None, :]) ** 2 / (2 * self.sigma ** 2))
        return mx[:, None] * my[None, :] * self._spatial * angular

    def _base_dict(self):
        return {"variant": self.variant, "beta": self.beta, "sigma": self.sigma, "grid": self.grid.tolist()}


@dataclass(eq=False)
class ConvScalarKernel(_ConvBase):
    """Complex-valued convolutional kernel summing over all pixel pairs."""

    variant: ClassVar[str] = "conv_scalar"

    def evaluate(self, x, y):
        return DenseOperator([[eval_conv_scalar(self, x, y)]])

    def to_dict(self):
        return self._base_dict()


@dataclass(eq=False)
class ConvCirculantKernel(_ConvBase):
    """Circulant lift of the convolutional kernel (values in C*(Z/pZ))."""

    variant: ClassVar[str] = "conv_circulant"

    def evaluate(self, x, y):
        return eval_conv_circulant(self, x, y)

    def to_dict(self):
        return self._base_dict()


def _shift_map(psi, grid):
    if isinstance(psi, str):
        if psi != "cyclic":
            raise SpecValidationError(f"unknown shift map {psi!r}")
        psi = ShiftMap.cyclic(grid)
    elif callable(psi) and not isinstance(psi, ShiftMap):
        psi = ShiftMap.from_callable(grid, psi)
    elif not isinstance(psi, ShiftMap):
        psi = ShiftMap(np.asarray(psi))
    psi.validate_for(grid)
    return psi


def _encode_psi(psi):
    return "cyclic" if psi.name == "cyclic" else psi.table.tolist()


@dataclass(eq=False)
class ConvGridKernel(_ConvBase):
    """Function-valued convolutional kernel shifted by ``psi``.

    :meth:`evaluate` embeds the function on the grid as a diagonal operator;
    :func:`eval_conv_grid` returns the raw values.
    """

    psi: object = "cyclic"
    variant: ClassVar[str] = "conv_grid"

    def __post_init__(self):
        super().__post_init__()
        self.psi = _shift_map(self.psi, self.grid)

    def evaluate(self, x, y):
        return DenseOperator(np.diag(eval_conv_grid(self, x, y)))

    def to_dict(self):
        return {**self._base_dict(), "psi": _encode_psi(self.psi)}


@dataclass(eq=False)
class ConvGeneralKernel(_ConvBase):
    """Operator-valued convolutional kernel with parameters ``a1..a4``."""

    psi: object = "cyclic"
    a1: DenseOperator = None
    a2: DenseOperator = None
    a3: DenseOperator = None
    a4: DenseOperator = None
    variant: ClassVar[str] = "conv_general"

    def __post_init__(self):
        super().__post_init__()
        self.psi = _shift_map(self.psi, self.grid)
        for name in ("a1", "a2", "a3", "a4"):
            v = getattr(self, name)
            v = DenseOperator.identity(self.p) if v is None else as_dense(v)
            if v.p != self.p:
                raise SpecValidationError(f"{name} must be {self.p} x {self.p}")
            setattr(self, name, v)

    def evaluate(self, x, y):
        return eval_conv_general(self, x, y)

    def to_dict(self):
        return {**self._base_dict(), "psi": _encode_psi(self.psi),
                **{n: encode_value(getattr(self, n)) for n in ("a1", "a2", "a3", "a4")}}


def eval_conv_scalar(spec, x, y):
    return float(spec.pair_weights(x, y).sum())


def eval_conv_circulant(spec, x, y):
    """Closed-form circulant lift.

    With 1-based indices taken cyclically, entry ``(i, j)`` is
    ``sum_l W[p-i+2+l, p-j+2+l]``; it depends only on ``j - i``, so the result
    is returned as the circulant element whose first row holds those sums.
    """
    w = spec.pair_weights(x, y)
    p = spec.p
    a = np.arange(p)
    # entry (i, j) = sum_a W[a, (a + i - j) mod p]  ->  first row v[k] = sum_a W[a, (a - k) mod p]
    first_row = np.array([w[a, (a - k) % p].sum() for k in range(p)])
    return CirculantElement(first_row)


def eval_conv_grid(spec, x, y):
    w = spec.pair_weights(x, y)
    t = spec.psi.table
    return np.array([w[np.ix_(t[:, c], t[:, c])].sum() for c in range(spec.p)])


def eval_conv_general(spec, x, y):
    mx, px = modulus_and_phase(_image_values(x, spec.grid))
    my, py = modulus_and_phase(_image_values(y, spec.grid))
    s = spec.psi.table                      # s[z, l] = index of psi(z, z_l)
    idx_l = s[:, None, :, None]
    idx_r = s[None, :, None, :]
    spatial = spec._spatial[idx_l, idx_r]   # (z, z', r, s)
    angular = np.exp(-np.abs(px[idx_l] - py[idx_r]) ** 2 / (2 * spec.sigma ** 2))
    a1, a2, a3, a4 = (m.entries for m in (spec.a1, spec.a2, spec.a3, spec.a4))
    middle = a4.conj().T @ a4
    inner = a3.conj().T @ (middle * angular) @ a3
    q = spatial * inner
    q = a2.conj().T @ q @ a2
    weighted = mx[s][:, None, :, None] * q * my[s][None, :, None, :]
    total = weighted.sum(axis=(0, 1))
    return DenseOperator(a1.conj().T @ total @ a1)


# -- QR-based polynomial kernel ---------------------------------------------------------

@dataclass(eq=False)
class QrPolyKernel(Kernel):
    """``k(x, y) = sum_{i=1}^{degree} R_x* (I - c Q_x*)^i (I - c Q_y)^i R_y``."""

    c: float
    degree: int = 3
    _features: dict = field(default_factory=dict, repr=False)
    variant: ClassVar[str] = "qr_poly"

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 1:
            raise SpecValidationError("degree must be an integer >= 1")
        self.degree = int(self.degree)
        self.c = float(self.c)

    def features(self, x):
        if not isinstance(x, AlgebraValue):
            raise ContractError("QR kernel inputs must be algebra elements")
        key = x.to_dense()
        cached = self._features.get(key)
        if cached is None:
            q, r = algebra.qr_decompose(key)
            step = np.eye(key.p) - self.c * q.entries
            feats, power = [], np.eye(key.p)
            for _ in range(self.degree):
                power = power @ step
                feats.append(power @ r.entries)
            cached = np.stack(feats)
            if len(self._features) < 4096:
                self._features[key] = cached
        return cached

    def evaluate(self, x, y):
        return eval_qr_poly(self, x, y)

    def to_dict(self):
        return {"variant": self.variant, "c": self.c, "degree": self.degree}


def eval_qr_poly(spec, x, y):
    fx, fy = spec.features(x), spec.features(y)
    if fx.shape != fy.shape:
        raise ContractError("QR kernel inputs must share p")
    return DenseOperator(np.einsum("kji,kjl->il", fx.conj(), fy))


# -- operator-valued baselines -------------------------------------------------------

def scalar_kernel(name, c, x, y):
    """Scalar kernels on real vectors (or scalars)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if name == "gaussian":
        return float(np.exp(-c * np.sum((x - y) ** 2)))
    if name == "laplacian":
        return float(np.exp(-c * np.sqrt(np.sum((x - y) ** 2))))
    if name == "polynomial":
        t = 1.0 - c * float(np.sum(x * y))
        return t + t ** 2 + t ** 3
    raise SpecValidationError(f"unknown scalar kernel {name!r}")


def _check_scalar_name(name):
    if name not in SCALAR_KERNELS:
        raise SpecValidationError(f"scalar_kernel must be one of {SCALAR_KERNELS}")


@dataclass(eq=False)
class SeparableKernel(Kernel):
    """``k(x, y) = k~(x, y) T`` for a positive semidefinite mixer ``T``."""

    scalar_kernel: str
    c: float
    mixer: DenseOperator
    variant: ClassVar[str] = "separable"

    def __post_init__(self):
        _check_scalar_name(self.scalar_kernel)
        self.c = float(self.c)
        self.mixer = as_dense(self.mixer)
        if not is_positive(self.mixer):
            raise SpecValidationError("mixer T must be positive semidefinite")

    @property
    def p(self):
        return self.mixer.p

    def evaluate(self, x, y):
        return eval_baseline(self, x, y)

    def to_dict(self):
        return {"variant": self.variant, "scalar_kernel": self.scalar_kernel, "c": self.c,
                "mixer": encode_value(self.mixer)}


@dataclass(eq=False)
class NonSeparableKernel(Kernel):
    """``k(x, y)[i, j] = k~(x_i, y_j)`` with the one-dimensional scalar kernel."""

    scalar_kernel: str
    c: float
    variant: ClassVar[str] = "nonseparable"

    def __post_init__(self):
        _check_scalar_name(self.scalar_kernel)
        self.c = float(self.c)

    def evaluate(self, x, y):
        return eval_baseline(self, x, y)

    def to_dict(self):
        return {"variant": self.variant, "scalar_kernel": self.scalar_kernel, "c": self.c}


def _real_vector(v):
    arr = np.asarray(v)
    if arr.ndim != 1 or not np.isrealobj(arr):
        raise ContractError("baseline kernels take real vectors")
    return arr.astype(float)


def eval_baseline(spec, x, y):
    x, y = _real_vector(x), _real_vector(y)
    if x.shape != y.shape:
        raise ContractError("input vectors must have the same length")
    if isinstance(spec, SeparableKernel):
        return scalar_kernel(spec.scalar_kernel, spec.c, x, y) * spec.mixer
    m = np.array([[scalar_kernel(spec.scalar_kernel, spec.c, xi, yj) for yj in y] for xi in x])
    return DenseOperator(m)


# -- dispatch, validation, serialization ---------------------------------------------

def eval_kernel(spec, x, y):
    """Evaluate ``spec`` at ``(x, y)``; dispatches on the kernel family."""
    return spec.evaluate(x, y)


@dataclass
class PDReport:
    min_quadratic_eigenvalue: float
    gram_min_eigenvalue: float
    hermitian_deviation: float
    passed: bool

    def to_dict(self):
        return {"min_quadratic_eigenvalue": self.min_quadratic_eigenvalue,
                "gram_min_eigenvalue": self.gram_min_eigenvalue,
                "hermitian_deviation": self.hermitian_deviation, "pass": self.passed}


def check_positive_definite(spec, points, trials=50, tol=1e-8, rng=None):
    """Empirical positive-definiteness check on a finite point set.

    Evaluates every block ``k(x_i, x_j)`` (no reflection), measures the
    Hermitian deviation ``max |k(x_i, x_j) - k(x_j, x_i)*|``, the smallest
    eigenvalue of the flattened Gram matrix, and the smallest eigenvalue of
    ``sum_ij c_i* k(x_i, x_j) c_j`` over ``trials`` random coefficient tuples.
    All three are relative to ``max(1, norm)``.
    """
    if trials < 1:
        raise ContractError("trials must be >= 1")
    rng = np.random.default_rng(rng)
    n = len(points)
    blocks = [[eval_kernel(spec, points[i], points[j]) for j in range(n)] for i in range(n)]
    circulant = all(isinstance(b, CirculantElement) for row in blocks for b in row)
    mats = np.array([[b.matrix() for b in row] for row in blocks])
    p = mats.shape[-1]
    flat = mats.transpose(0, 2, 1, 3).reshape(n * p, n * p)
    scale = max(1.0, float(np.linalg.norm(flat, 2)))
    herm = float(np.max(np.abs(flat - flat.conj().T))) / scale
    gram_min = float(np.linalg.eigvalsh(0.5 * (flat + flat.conj().T))[0]) / scale
    worst = np.inf
    for _ in range(trials):
        if circulant:
            cs = [algebra.random_circulant(p, rng).matrix() for _ in range(n)]
        else:
            cs = [algebra.random_dense(p, rng).matrix() for _ in range(n)]
        cvec = np.concatenate(cs, axis=0)
        form = cvec.conj().T @ flat @ cvec
        fscale = max(1.0, float(np.linalg.norm(form, 2)))
        herm = max(herm, float(np.max(np.abs(form - form.conj().T))) / fscale)
        worst = min(worst, float(np.linalg.eigvalsh(0.5 * (form + form.conj().T))[0]) / fscale)
    passed = worst >= -tol and gram_min >= -tol and herm <= tol
    return PDReport(worst, gram_min, herm, bool(passed))


def _dec_list(vals):
    return [decode_value(v) for v in vals]


def kernel_from_dict(obj):
    """Inverse of ``Kernel.to_dict``."""
    v = obj.get("variant")
    if v == "linear":
        return LinearKernel(_dec_list(obj["a1"]), _dec_list(obj["a2"]))
    if v == "polynomial":
        return PolynomialKernel([_dec_list(r) for r in obj["a"]])
    if v == "gaussian_atomic":
        return GaussianAtomicKernel([GaussianAtom(decode_value(a["weight"]), _dec_list(a["a1"]),
                                                  _dec_list(a["a2"])) for a in obj["atoms"]])
    if v == "cnn_nested":
        return CnnNestedKernel(_dec_list(obj["a"]), _dec_list(obj["b"]),
                               [[tuple(t) for t in act] for act in obj["activations"]])
    if v == "conv_scalar":
        return ConvScalarKernel(obj["beta"], obj["sigma"], obj["grid"])
    if v == "conv_circulant":
        return ConvCirculantKernel(obj["beta"], obj["sigma"], obj["grid"])
    if v == "conv_grid":
        return ConvGridKernel(obj["beta"], obj["sigma"], obj["grid"], psi=obj.get("psi", "cyclic"))
    if v == "conv_general":
        return ConvGeneralKernel(obj["beta"], obj["sigma"], obj["grid"], psi=obj.get("psi", "cyclic"),
                                 **{n: decode_value(obj[n]) for n in ("a1", "a2", "a3", "a4")})
    if v == "qr_poly":
        return QrPolyKernel(obj["c"], obj.get("degree", 3))
    if v == "separable":
        return SeparableKernel(obj["scalar_kernel"], obj["c"], decode_value(obj["mixer"]))
    if v == "nonseparable":
        return NonSeparableKernel(obj["scalar_kernel"], obj["c"])
    raise SpecValidationError(f"unknown kernel variant {v!r}")
