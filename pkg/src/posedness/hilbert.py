"""Discretized L2 spaces over intervals.

Functions are sampled at cell midpoints of a uniform grid and integrated
with the midpoint rule, so the discrete inner product

    <u, v> = h * sum_i u_i * conj(v_i)

is a consistent quadrature of the L2 inner product. Sequence spaces
(l2 truncated to ``dim`` entries) are represented as grids with unit
cell width, see :func:`sequence_grid`.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    GridMismatchError,
    IncompatibleGridsError,
    InvalidIntervalError,
    ZeroSizeError,
)

FLOAT_FMT = "{:.16e}"


@dataclass(frozen=True)
class Grid:
    """Uniform grid of ``n`` cells on the interval ``(a, b)``."""

    n: int
    a: float
    b: float

    def __post_init__(self):
        if self.n < 1:
            raise ZeroSizeError(f"grid needs at least one cell, got n={self.n}")
        if not self.a < self.b:
            raise InvalidIntervalError(f"invalid interval ({self.a}, {self.b})")

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.n

    @property
    def nodes(self) -> np.ndarray:
        return self.a + (np.arange(self.n) + 0.5) * self.h


def make_uniform_grid(n: int, a: float = 0.0, b: float = 1.0) -> Grid:
    return Grid(int(n), float(a), float(b))


def sequence_grid(dim: int) -> Grid:
    """Grid with unit weight, so the discrete inner product is the l2 one."""
    return Grid(int(dim), 0.0, float(dim))


class GridFunction:
    """Sampled element of L2(a, b), real or complex.

    Values are stored as a read-only numpy array; a complex dtype marks
    the complex channel.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        arr = np.array(values, copy=True)
        if arr.dtype.kind not in "fc":
            arr = arr.astype(float)
        if arr.shape != (grid.n,):
            raise GridMismatchError(
                f"expected {grid.n} values, got array of shape {arr.shape}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("GridFunction is immutable")

    @classmethod
    def from_callable(cls, grid: Grid, f: Callable, dtype=float) -> "GridFunction":
        return cls(grid, np.asarray(f(grid.nodes), dtype=dtype))

    @classmethod
    def zeros(cls, grid: Grid, complex_: bool = False) -> "GridFunction":
        return cls(grid, np.zeros(grid.n, dtype=complex if complex_ else float))

    @classmethod
    def ones(cls, grid: Grid) -> "GridFunction":
        return cls(grid, np.ones(grid.n))

    @classmethod
    def basis(cls, grid: Grid, k: int) -> "GridFunction":
        """k-th (1-based) orthonormal indicator vector of the grid."""
        e = np.zeros(grid.n)
        e[k - 1] = 1.0 / math.sqrt(grid.h)
        return cls(grid, e)

    @property
    def is_complex(self) -> bool:
        return self.values.dtype.kind == "c"

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    @property
    def imag(self):
        return self.values.imag if self.is_complex else None

    def _check(self, other):
        if not isinstance(other, GridFunction):
            return NotImplemented
        if other.grid != self.grid:
            raise GridMismatchError(f"{self.grid} vs {other.grid}")
        return other

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, c):
        if isinstance(c, GridFunction):
            return NotImplemented
        return GridFunction(self.grid, self.values * c)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return GridFunction(self.grid, self.values / c)

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __repr__(self):
        kind = "complex" if self.is_complex else "real"
        return f"GridFunction({self.grid}, {kind}, norm={norm(self):.6g})"


def _same_structure(u: GridFunction, v: GridFunction):
    if u.grid != v.grid:
        raise GridMismatchError(f"{u.grid} vs {v.grid}")


def inner(u: GridFunction, v: GridFunction):
    """Midpoint-rule inner product, conjugate-linear in the second slot."""
    _same_structure(u, v)
    val = u.grid.h * np.vdot(v.values, u.values)
    if not (u.is_complex or v.is_complex):
        return float(val.real)
    return complex(val)


def norm(u: GridFunction) -> float:
    return math.sqrt(u.grid.h) * float(np.linalg.norm(u.values))


def distance(u: GridFunction, v: GridFunction) -> float:
    _same_structure(u, v)
    return math.sqrt(u.grid.h) * float(np.linalg.norm(u.values - v.values))


def integral(u: GridFunction):
    """Midpoint-rule integral of ``u`` over its interval."""
    s = u.grid.h * u.values.sum()
    return complex(s) if u.is_complex else float(s)


def embed(u: GridFunction, target: Grid) -> GridFunction:
    """Zero-extension of ``u`` onto a larger grid with the same cell width."""
    src = u.grid
    tol = 1e-9
    if abs(src.h - target.h) > tol * target.h:
        raise IncompatibleGridsError(f"cell widths differ: {src.h} vs {target.h}")
    if src.a < target.a - tol * target.h or src.b > target.b + tol * target.h:
        raise IncompatibleGridsError(f"{src} is not contained in {target}")
    shift = (src.a - target.a) / target.h
    offset = int(round(shift))
    if abs(shift - offset) > tol:
        raise IncompatibleGridsError("source nodes do not coincide with target nodes")
    vals = np.zeros(target.n, dtype=u.values.dtype)
    vals[offset:offset + src.n] = u.values
    return GridFunction(target, vals)


def restrict(u: GridFunction, target: Grid) -> GridFunction:
    """Inverse of :func:`embed`: keep the values on the nodes of ``target``."""
    src = u.grid
    if abs(src.h - target.h) > 1e-9 * target.h:
        raise IncompatibleGridsError(f"cell widths differ: {src.h} vs {target.h}")
    offset = int(round((target.a - src.a) / src.h))
    if offset < 0 or offset + target.n > src.n:
        raise IncompatibleGridsError(f"{target} is not contained in {src}")
    return GridFunction(target, u.values[offset:offset + target.n])


def to_csv(u: GridFunction) -> str:
    buf = io.StringIO()
    g = u.grid
    buf.write(f"# grid: n={g.n}, a={FLOAT_FMT.format(g.a)}, b={FLOAT_FMT.format(g.b)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    if u.is_complex:
        writer.writerow(["node", "re", "im"])
        for t, z in zip(g.nodes, u.values):
            writer.writerow([FLOAT_FMT.format(t), FLOAT_FMT.format(z.real), FLOAT_FMT.format(z.imag)])
    else:
        writer.writerow(["node", "re"])
        for t, x in zip(g.nodes, u.values):
            writer.writerow([FLOAT_FMT.format(t), FLOAT_FMT.format(x)])
    return buf.getvalue()


def _parse_grid_comment(line: str) -> Grid:
    fields = dict(part.strip().split("=") for part in line.split(":", 1)[1].split(","))
    return make_uniform_grid(int(fields["n"]), float(fields["a"]), float(fields["b"]))


def from_csv(text: str) -> GridFunction:
    lines = text.splitlines()
    grid = None
    body = []
    for line in lines:
        if line.startswith("# grid:"):
            grid = _parse_grid_comment(line)
        elif line and not line.startswith("#"):
            body.append(line)
    rows = list(csv.reader(body))
    header, data = rows[0], np.array(rows[1:], dtype=float)
    if grid is None:
        nodes = data[:, 0]
        if len(nodes) < 2:
            raise InvalidIntervalError("single-node CSV needs a '# grid:' line")
        h = nodes[1] - nodes[0]
        grid = make_uniform_grid(len(nodes), nodes[0] - h / 2, nodes[-1] + h / 2)
    if header == ["node", "re", "im"]:
        return GridFunction(grid, data[:, 1] + 1j * data[:, 2])
    return GridFunction(grid, data[:, 1])
