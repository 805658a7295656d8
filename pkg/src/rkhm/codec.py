"""JSON encoding of algebra values, images and plain vectors.

Complex numbers are ``[re, im]`` pairs; circulant elements are
``{"p": p, "coeffs": [...]}``; dense operators ``{"p": p, "rows": [[...]]}``;
images ``{"p": p, "values": [...], "grid": [[...]]}``; real vectors are plain
lists of floats.  Python's float repr round-trips, so decode(encode(v)) is
bit-exact.
"""
from numbers import Number

import numpy as np

from .algebra import AlgebraValue, CirculantElement, DenseOperator
from .exceptions import ContractError
from .images import ImageSample


def encode_complex(z):
    z = complex(z)
    return [z.real, z.imag]


def decode_complex(pair):
    if isinstance(pair, Number):
        return complex(pair)
    re, im = pair
    return complex(re, im)


def encode_value(v):
    if isinstance(v, CirculantElement):
        return {"p": v.p, "coeffs": [encode_complex(z) for z in v.coeffs]}
    if isinstance(v, DenseOperator):
        return {"p": v.p, "rows": [[encode_complex(z) for z in row] for row in v.entries]}
    if isinstance(v, ImageSample):
        out = {"p": v.p, "values": [encode_complex(z) for z in v.values]}
        if v.grid is not None:
            out["grid"] = v.grid.tolist()
        return out
    if isinstance(v, (list, tuple)) and v and all(isinstance(e, AlgebraValue) for e in v):
        return [encode_value(e) for e in v]
    arr = np.asarray(v)
    if arr.ndim == 1 and np.isrealobj(arr):
        return [float(e) for e in arr]
    raise ContractError(f"cannot encode value of type {type(v).__name__}")


def decode_value(obj):
    if isinstance(obj, dict):
        if "coeffs" in obj:
            return CirculantElement([decode_complex(z) for z in obj["coeffs"]])
        if "rows" in obj:
            return DenseOperator([[decode_complex(z) for z in row] for row in obj["rows"]])
        if "values" in obj:
            return ImageSample([decode_complex(z) for z in obj["values"]], obj.get("grid"))
        raise ContractError(f"unrecognised value object with keys {sorted(obj)}")
    if isinstance(obj, list):
        if all(isinstance(e, Number) for e in obj):
            return np.array(obj, dtype=float)
        return [decode_value(e) for e in obj]
    raise ContractError(f"cannot decode {type(obj).__name__}")
