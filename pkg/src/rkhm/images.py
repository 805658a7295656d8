"""Images on finite grids and the shift maps used by the convolutional kernels."""
from dataclasses import dataclass, field
import itertools

import numpy as np

from .exceptions import ContractError, SpecValidationError


def as_grid(points):
    """Validate grid coordinates; returns an int array of shape (p, m)."""
    g = np.asarray(points)
    if g.ndim == 1:
        g = g[:, None]
    if g.ndim != 2 or g.shape[0] < 1:
        raise SpecValidationError("grid must be a nonempty list of points in Z^m")
    if not np.issubdtype(g.dtype, np.integer):
        if not np.all(g == np.round(g)):
            raise SpecValidationError("grid points must have integer coordinates")
        g = g.astype(np.int64)
    if len({tuple(r) for r in g.tolist()}) != g.shape[0]:
        raise SpecValidationError("grid points must be distinct")
    g = g.astype(np.int64)
    g.setflags(write=False)
    return g


def box_grid(*shape):
    """Row-major grid ``{0..n1-1} x ... x {0..nm-1}``."""
    return as_grid(list(itertools.product(*(range(n) for n in shape))))


def origin_index(grid):
    hits = np.flatnonzero(np.all(grid == 0, axis=1))
    if hits.size == 0:
        raise SpecValidationError("grid must contain the origin for a shift map")
    return int(hits[0])


@dataclass(frozen=True)
class ShiftMap:
    """Tabulated map ``psi: Omega x Omega -> Omega`` with ``psi(z, 0) = z``.

    ``table[i, j]`` is the grid index of ``psi(z_i, z_j)``.
    """

    table: np.ndarray
    name: str = "table"

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.int64)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise SpecValidationError("shift table must be p x p")
        if t.min() < 0 or t.max() >= t.shape[0]:
            raise SpecValidationError("shift map sends a point outside the grid")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @property
    def p(self):
        return self.table.shape[0]

    def validate_for(self, grid):
        if self.p != grid.shape[0]:
            raise SpecValidationError(f"shift map has size {self.p}, grid has {grid.shape[0]}")
        o = origin_index(grid)
        if not np.array_equal(self.table[:, o], np.arange(self.p)):
            raise SpecValidationError("shift map must satisfy psi(z, 0) = z")

    @classmethod
    def from_callable(cls, grid, fn, name="table"):
        grid = as_grid(grid)
        lookup = {tuple(r): i for i, r in enumerate(grid.tolist())}
        p = grid.shape[0]
        table = np.empty((p, p), dtype=np.int64)
        for i, z in enumerate(grid):
            for j, w in enumerate(grid):
                out = tuple(np.asarray(fn(z, w), dtype=np.int64).reshape(-1).tolist())
                if out not in lookup:
                    raise SpecValidationError(f"psi({tuple(z)}, {tuple(w)}) = {out} is outside the grid")
                table[i, j] = lookup[out]
        return cls(table, name)

    @classmethod
    def cyclic(cls, grid):
        """``psi(z, w) = z + w`` modulo the bounding box of a box grid."""
        grid = as_grid(grid)
        lo = grid.min(axis=0)
        if np.any(lo != 0):
            raise SpecValidationError("cyclic shifts need a box grid anchored at the origin")
        shape = grid.max(axis=0) + 1
        if np.prod(shape) != grid.shape[0]:
            raise SpecValidationError("cyclic shifts need a full box grid")
        return cls.from_callable(grid, lambda z, w: (z + w) % shape, name="cyclic")


@dataclass(frozen=True)
class ImageSample:
    """A complex-valued function on a finite grid ``Omega = {z_1..z_p}``."""

    values: np.ndarray
    grid: np.ndarray = field(default=None)

    def __post_init__(self):
        v = np.array(self.values, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(v)):
            raise ContractError("image values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.grid is not None:
            g = as_grid(self.grid)
            if g.shape[0] != v.size:
                raise ContractError(f"image has {v.size} values but grid has {g.shape[0]} points")
            object.__setattr__(self, "grid", g)

    @property
    def p(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, ImageSample):
            return NotImplemented
        same_grid = (self.grid is None and other.grid is None) or (
            self.grid is not None and other.grid is not None and np.array_equal(self.grid, other.grid))
        return same_grid and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())


def modulus_and_phase(values):
    """``|x(z)|`` and ``x(z)/|x(z)|``, with the phase set to 0 where ``x(z) = 0``."""
    v = np.asarray(values, dtype=complex)
    mod = np.abs(v)
    safe = np.where(mod > 0, mod, 1.0)
    phase = np.where(mod > 0, v / safe, 0.0)
    return mod, phase
