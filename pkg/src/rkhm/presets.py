"""Named kernel presets and the vector <-> algebra adapters they need.

A preset bundles a kernel family with the way plain real vectors ``x, y in
R^p`` enter and leave it:

* ``circulant`` targets are embedded as circulant elements with
  coefficients ``y`` and decoded by averaging along cyclic diagonals;
* ``column`` targets (vector-valued baselines) become the first column of
  a ``p x p`` matrix, and decoding reads that column back.

Preset strings look like ``name`` or ``name:key=value,key=value``, for
example ``qr-poly:c=0.5,degree=3``.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .algebra import CirculantElement, DenseOperator, as_dense, circ_to_dense
from .exceptions import ContractError, SpecValidationError
from .images import ImageSample, box_grid


def embed_circulant(v):
    """``circ(v)`` as a dense operator."""
    v = np.asarray(v, dtype=float).reshape(-1)
    return circ_to_dense(CirculantElement(v))


def decode_output(m):
    """Average each cyclic diagonal: ``v[k] = mean_i m[i, (i + k) mod p]`` (real part).

    For ``p = 2`` this is ``((m11 + m22) / 2, (m12 + m21) / 2)``.
    """
    a = as_dense(m).entries if not isinstance(m, np.ndarray) else np.asarray(m)
    p = a.shape[0]
    i = np.arange(p)
    return np.array([a[i, (i + k) % p].mean().real for k in range(p)])


def embed_column(v):
    v = np.asarray(v, dtype=float).reshape(-1)
    m = np.zeros((v.size, v.size))
    m[:, 0] = v
    return DenseOperator(m)


def decode_column(m):
    return np.real(as_dense(m).entries[:, 0]).copy()


@dataclass(frozen=True)
class Preset:
    """A kernel factory plus input/target adapters.

    ``build(c, p, **params)`` returns the kernel spec.
    """

    name: str
    build: object
    input_kind: str          # "dense", "circulant", "image" or "vector"
    target_kind: str         # "circulant" or "column"
    defaults: tuple = ()

    def embed_input(self, v, spec=None):
        v = np.asarray(v, dtype=float).reshape(-1)
        if self.input_kind == "dense":
            return embed_circulant(v)
        if self.input_kind == "circulant":
            return CirculantElement(v)
        if self.input_kind == "image":
            return ImageSample(v)
        return v

    def embed_target(self, v):
        if self.target_kind == "circulant":
            return CirculantElement(np.asarray(v, dtype=float).reshape(-1))
        return embed_column(v)

    def decode(self, m):
        if self.target_kind == "circulant":
            return decode_output(m)
        return decode_column(m)


def _qr_poly(c, p, degree=3):
    return K.QrPolyKernel(c, int(degree))


def _cnn_nested(c, p, L=2):
    # filters scaled by sqrt(c); activations t + t^2/2 keep every coefficient nonnegative
    a = [CirculantElement.identity(p) * np.sqrt(c) for _ in range(int(L))]
    b = [CirculantElement.identity(p) * 0.5 for _ in range(int(L))]
    acts = [[(1, 1.0), (2, 0.5)] for _ in range(int(L))]
    return K.CnnNestedKernel(a, b, acts)


def _conv_circulant(c, p, beta=1.0, sigma=None):
    sigma = 1.0 / np.sqrt(2 * c) if sigma is None else sigma
    return K.ConvCirculantKernel(beta, sigma, box_grid(p))


def _gaussian_atomic(c, p):
    eye = DenseOperator.identity(p)
    atoms = [K.GaussianAtom(eye, [eye], [eye * c]), K.GaussianAtom(eye * 0.5, [eye], [eye * (2 * c)])]
    return K.GaussianAtomicKernel(atoms)


def _ones(p):
    return DenseOperator(np.ones((p, p)))


def _separable(scalar, mixer):
    def build(c, p):
        t = DenseOperator.identity(p) if mixer == "I" else _ones(p)
        return K.SeparableKernel(scalar, c, t)
    return build


def _nonsep(scalar):
    def build(c, p):
        return K.NonSeparableKernel(scalar, c)
    return build


PRESETS = {
    "qr-poly": Preset("qr-poly", _qr_poly, "dense", "circulant", (("c", 0.5),)),
    "cnn-nested": Preset("cnn-nested", _cnn_nested, "circulant", "circulant", (("c", 0.5),)),
    "conv-circulant": Preset("conv-circulant", _conv_circulant, "image", "circulant", (("c", 0.5),)),
    "gaussian-atomic": Preset("gaussian-atomic", _gaussian_atomic, "dense", "circulant", (("c", 0.5),)),
}
for _scalar, _short in (("gaussian", "gaussian"), ("laplacian", "laplacian"), ("polynomial", "poly")):
    for _mix in ("I", "T"):
        _name = f"vv-{_short}-{_mix}"
        PRESETS[_name] = Preset(_name, _separable(_scalar, _mix), "vector", "column", (("c", 1.0),))
    _name = f"vv-{_short}-nonsep"
    PRESETS[_name] = Preset(_name, _nonsep(_scalar), "vector", "column", (("c", 1.0),))
PRESETS["nonsep"] = PRESETS["vv-gaussian-nonsep"]

# experiment method tags -> preset names
METHODS = {
    "rkhm_qr_poly": "qr-poly",
    "vv_gaussian_I": "vv-gaussian-I", "vv_gaussian_T": "vv-gaussian-T",
    "vv_gaussian_nonsep": "vv-gaussian-nonsep",
    "vv_laplacian_I": "vv-laplacian-I", "vv_laplacian_T": "vv-laplacian-T",
    "vv_laplacian_nonsep": "vv-laplacian-nonsep",
    "vv_poly_I": "vv-poly-I", "vv_poly_T": "vv-poly-T", "vv_poly_nonsep": "vv-poly-nonsep",
}


def _number(text):
    try:
        v = float(text)
    except ValueError:
        raise SpecValidationError(f"preset parameter value {text!r} is not a number") from None
    return int(v) if v.is_integer() and "." not in text and "e" not in text.lower() else v


def parse_preset(text):
    """``"name:k=v,..."`` -> ``(Preset, params)``."""
    name, _, rest = text.partition(":")
    name = METHODS.get(name, name)
    if name not in PRESETS:
        raise SpecValidationError(f"unknown kernel preset {name!r}; known: {', '.join(sorted(PRESETS))}")
    params = {}
    for item in filter(None, rest.split(",")):
        key, eq, value = item.partition("=")
        if not eq:
            raise SpecValidationError(f"preset parameter {item!r} must look like key=value")
        params[key.strip()] = _number(value.strip())
    return PRESETS[name], params


def get_preset(name):
    return parse_preset(name)[0]


def build_kernel(preset, p, c=None, **params):
    """Instantiate a preset's kernel for dimension ``p``."""
    if isinstance(preset, str):
        preset, parsed = parse_preset(preset)
        params = {**parsed, **params}
    if c is None:
        c = params.pop("c", dict(preset.defaults).get("c", 1.0))
    else:
        params.pop("c", None)
    try:
        return preset.build(float(c), int(p), **params)
    except TypeError as exc:
        raise SpecValidationError(f"bad parameters for preset {preset.name!r}: {exc}") from None


def check_vectors(X, name="X"):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ContractError(f"{name} must be a nonempty 2-D array")
    if not np.all(np.isfinite(X)):
        raise ContractError(f"{name} must be finite")
    return X
