"""Example nonlinear forward operators with analytic preimage enumerators.

Five operators are provided:

* :class:`ScalarRational`     ``x -> x^2 / (1 + x^4)`` on the real line
* :class:`WeightedIdentity`   ``x -> (int x) * x`` on L2(0, 1)
* :class:`QuadraticTwo`       ``x -> <x,u1> S x + <x,u2> T x`` on a truncated l2
* :class:`Autoconvolution`    ``x -> x * x`` (real on (0,1), or complex onto (0,2))

Each exposes ``__call__`` and ``preimage``; the quadratic ones also expose
the generating bilinear map as ``bilinear``.
"""
from __future__ import annotations

import functools
import math
from typing import Optional

import numpy as np
import scipy.linalg as sla
from scipy.optimize import brentq

from .errors import (
    DimensionError,
    DomainViolationError,
    GridMismatchError,
    NotInRangeError,
    SingularBranchError,
)
from .hilbert import Grid, GridFunction, integral, make_uniform_grid, norm, sequence_grid
from .linear import harmonic_sigmas, make_damped_shift, make_partial_isometry
from .sets import AffineSubspace, PreimageBranch, PreimageSet

DEFAULT_FEASIBILITY_TOL = 1e-8


def _tol(feasibility_tol: float, y: GridFunction) -> float:
    return feasibility_tol * (1.0 + norm(y))


class NonlinearOp:
    kind = "abstract"
    quadratic = False

    domain_grid: Grid
    range_grid: Grid

    def __call__(self, x: GridFunction) -> GridFunction:  # pragma: no cover - interface
        raise NotImplementedError

    def preimage(self, y: GridFunction, feasibility_tol: float = DEFAULT_FEASIBILITY_TOL, **kwargs) -> PreimageSet:
        raise NotImplementedError  # pragma: no cover

    def _check_domain_grid(self, x: GridFunction):
        if x.grid != self.domain_grid:
            raise GridMismatchError(f"{self.kind} expects {self.domain_grid}, got {x.grid}")

    def _check_range_grid(self, y: GridFunction):
        if y.grid != self.range_grid:
            raise GridMismatchError(f"{self.kind} maps into {self.range_grid}, got {y.grid}")

    def __repr__(self):
        return f"{type(self).__name__}(kind={self.kind!r})"


# one-dimensional rational map -------------------------------------------


SCALAR_GRID = make_uniform_grid(1, 0.0, 1.0)


def scalar(x: float) -> GridFunction:
    """Embed a real number as a constant on the unit interval (norm ``|x|``)."""
    return GridFunction(SCALAR_GRID, [float(x)])


def rational_roots(y: float) -> list[float]:
    """All real solutions of ``x^2 / (1 + x^4) = y`` by bracketing on monotone pieces.

    ``F`` increases on ``[0, 1]`` to its maximum ``1/2`` and decreases on
    ``[1, inf)`` with ``F(x) < 1/x^2``.
    """
    if y < 0 or y > 0.5:
        return []
    if y == 0:
        return [0.0]
    if y == 0.5:
        return [-1.0, 1.0]

    def g(x):
        return x * x / (1.0 + x ** 4) - y

    kw = dict(xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    small = brentq(g, 0.0, 1.0, **kw)
    large = brentq(g, 1.0, 2.0 / math.sqrt(y), **kw)
    return [-large, -small, small, large]


class ScalarRational(NonlinearOp):
    kind = "scalar_rational"

    def __init__(self):
        self.domain_grid = SCALAR_GRID
        self.range_grid = SCALAR_GRID

    def __call__(self, x: GridFunction) -> GridFunction:
        self._check_domain_grid(x)
        v = x.values
        return GridFunction(self.range_grid, v * v / (1.0 + v ** 4))

    def preimage(self, y, feasibility_tol=DEFAULT_FEASIBILITY_TOL, **kwargs) -> PreimageSet:
        self._check_range_grid(y)
        t = float(y.values[0])
        tol = _tol(feasibility_tol, y)
        if 0.5 < t <= 0.5 + tol:
            t = 0.5
        elif -tol <= t < 0:
            t = 0.0
        roots = rational_roots(t)
        if not roots:
            resid = t - 0.5 if t > 0.5 else -t
            return PreimageSet(residual=resid, note="not-in-range")
        return PreimageSet(points=[scalar(r) for r in roots])


# self-integration weighted identity -------------------------------------


@functools.lru_cache(maxsize=16)
def mean_zero_basis(grid: Grid) -> np.ndarray:
    """Weighted-orthonormal basis of ``{x : int x = 0}`` on ``grid``."""
    Q = sla.null_space(np.ones((1, grid.n)))
    Q = Q / math.sqrt(grid.h)
    Q.setflags(write=False)
    return Q


class WeightedIdentity(NonlinearOp):
    kind = "weighted_identity"
    quadratic = True

    def __init__(self, grid: Grid):
        self.domain_grid = grid
        self.range_grid = grid

    @staticmethod
    def psi(x: GridFunction) -> float:
        return integral(x)

    def bilinear(self, x: GridFunction, z: GridFunction) -> GridFunction:
        self._check_domain_grid(x)
        self._check_domain_grid(z)
        return self.psi(x) * z

    def __call__(self, x: GridFunction) -> GridFunction:
        return self.bilinear(x, x)

    def nullspace(self) -> AffineSubspace:
        return AffineSubspace(GridFunction.zeros(self.domain_grid), mean_zero_basis(self.domain_grid),
                              label="mean-zero")

    def preimage(self, y, feasibility_tol=DEFAULT_FEASIBILITY_TOL, **kwargs) -> PreimageSet:
        self._check_range_grid(y)
        tol = _tol(feasibility_tol, y)
        if norm(y) <= tol:
            return PreimageSet(subspace=self.nullspace(), note="F^-1(0) = N")
        p = self.psi(y)
        if p <= 0:
            return PreimageSet(residual=norm(y), note="not-in-range")
        x = y / math.sqrt(p)
        return PreimageSet(points=[x, -x])


# quadratic combination of a damped shift and a partial isometry --------


class QuadraticTwo(NonlinearOp):
    """``B(x, z) = <x,u1> S z + <x,u2> T z`` on a ``dim``-dimensional l2."""

    kind = "quadratic_two"
    quadratic = True

    def __init__(self, dim: int, sigmas=None):
        if dim < 5:
            raise DimensionError(f"dimension must be at least 5, got {dim}")
        self.dim = dim
        self.sigmas = harmonic_sigmas(dim) if sigmas is None else np.asarray(sigmas, float)
        self.S = make_damped_shift(self.sigmas, dim)
        self.T = make_partial_isometry(dim)
        self.domain_grid = sequence_grid(dim)
        self.range_grid = self.domain_grid

    def u(self, k: int) -> GridFunction:
        return GridFunction.basis(self.domain_grid, k)

    def bilinear(self, x: GridFunction, z: GridFunction) -> GridFunction:
        if x.grid != self.domain_grid or z.grid != self.domain_grid:
            raise DimensionError(f"inputs must live in l2 of dimension {self.dim}")
        vals = x.values[0] * (self.S.matrix @ z.values) + x.values[1] * (self.T.matrix @ z.values)
        return GridFunction(self.range_grid, vals)

    def __call__(self, x: GridFunction) -> GridFunction:
        return self.bilinear(x, x)

    def nullspace(self) -> AffineSubspace:
        basis = np.zeros((self.dim, self.dim - 2))
        basis[2:, :] = np.eye(self.dim - 2)
        return AffineSubspace(GridFunction.zeros(self.domain_grid), basis, label="N=span{u3,...}")

    def preimage(self, y, feasibility_tol=DEFAULT_FEASIBILITY_TOL, allow_singular=True, **kwargs) -> PreimageSet:
        """Up to four branches ``v_k + w_k`` with ``v_k = +-a u1 +- b u2``.

        ``a^2`` and ``b^2`` are the first two coordinates of ``y``; each
        ``w_k`` solves ``(+-a S_N +- b I_N) w = P_N y`` on the tail block.
        With ``b = 0`` that block is nilpotent after truncation (the last
        coordinate is a truncation nullspace); the minimum-norm solution is
        used and the branch is flagged ``singular``.
        """
        self._check_range_grid(y)
        tol = _tol(feasibility_tol, y)
        y1, y2, yN = float(y.values[0]), float(y.values[1]), np.asarray(y.values[2:], float)
        if y1 < -tol or y2 < -tol:
            return PreimageSet(residual=max(-y1, -y2), note="not-in-range")
        a, b = math.sqrt(max(y1, 0.0)), math.sqrt(max(y2, 0.0))
        if a <= tol and b <= tol:
            if np.linalg.norm(yN) <= tol:
                return PreimageSet(subspace=self.nullspace(), note="F^-1(0) = N")
            return PreimageSet(residual=float(np.linalg.norm(yN)), note="not-in-range")

        SN = self.S.matrix[2:, 2:]
        IN = np.eye(self.dim - 2)
        signs = [(1, 1), (1, -1), (-1, 1), (-1, -1)]
        seen, branches = set(), []
        for s1, s2 in signs:
            key = (s1 * a, s2 * b)
            if key in seen:
                continue
            seen.add(key)
            K = s1 * a * SN + s2 * b * IN
            singular = b <= 1e-14 * max(a, 1.0)
            if singular:
                if not allow_singular:
                    raise SingularBranchError(f"branch with a={a}, b={b} is numerically singular")
                w, *_ = np.linalg.lstsq(K, yN, rcond=None)
            else:
                w = sla.solve_triangular(K, yN, lower=True)
            if not np.all(np.isfinite(w)):
                raise SingularBranchError(f"branch with a={a}, b={b} produced a non-finite solution")
            v = np.zeros(self.dim)
            v[0], v[1] = s1 * a, s2 * b
            wf = np.zeros(self.dim)
            wf[2:] = w
            branches.append(
                PreimageBranch(a, b, GridFunction(self.domain_grid, v), GridFunction(self.domain_grid, wf),
                               index=len(branches) + 1, singular=singular)
            )
        # a branch whose shifted block is nearly singular may miss y; drop it
        resids = [norm(self(br.point) - y) for br in branches]
        kept = [br for br, r in zip(branches, resids) if r <= tol]
        if not kept:
            return PreimageSet(residual=min(resids), note="not-in-range")
        note = "" if len(kept) == len(branches) else f"{len(branches) - len(kept)} branch(es) failed the residual check"
        return PreimageSet(points=[br.point for br in kept], branches=kept,
                           residual=max(r for r in resids if r <= tol), note=note)


# autoconvolution ---------------------------------------------------------


def autoconvolve(x: np.ndarray, z: np.ndarray, h: float, n_out: int) -> np.ndarray:
    """Midpoint values of the convolution of two piecewise-constant functions.

    The exact convolution is piecewise linear with knot values
    ``c_m = h * sum_{j+k=m-1} x_j z_k`` at ``s = m h``; the value at the
    node ``(i + 1/2) h`` is the average of neighbouring knots.
    """
    full = np.convolve(x, z) * h
    c = np.zeros(2 * len(x) + 1, dtype=full.dtype)
    c[1:len(full) + 1] = full
    return 0.5 * (c[:n_out] + c[1:n_out + 1])


class Autoconvolution(NonlinearOp):
    """``[F(x)](s) = int x(s - t) x(t) dt``.

    ``complex_=False``: real nonnegative functions on (0, L), output on (0, L).
    ``complex_=True``: complex functions on (0, L), output on (0, 2L).
    """

    quadratic = True

    def __init__(self, grid: Grid, complex_: bool = False):
        if grid.a != 0.0:
            raise GridMismatchError("autoconvolution grids start at 0")
        self.complex_ = complex_
        self.kind = "autoconv_complex" if complex_ else "autoconv_real"
        self.domain_grid = grid
        self.range_grid = make_uniform_grid(2 * grid.n, 0.0, 2 * grid.b) if complex_ else grid

    def _values(self, x: GridFunction) -> np.ndarray:
        self._check_domain_grid(x)
        v = x.values
        if self.complex_:
            return v.astype(complex)
        if x.is_complex:
            raise DomainViolationError("real autoconvolution takes real functions")
        return v

    def bilinear(self, x: GridFunction, z: GridFunction) -> GridFunction:
        out = autoconvolve(self._values(x), self._values(z), self.domain_grid.h, self.range_grid.n)
        return GridFunction(self.range_grid, out)

    def check_domain(self, x: GridFunction) -> None:
        if not self.complex_:
            v = x.values
            if np.any(v < -1e-12 * (1.0 + np.abs(v).max())):
                raise DomainViolationError("real autoconvolution needs x >= 0 almost everywhere")

    def in_domain(self, x: GridFunction) -> bool:
        try:
            self.check_domain(x)
        except DomainViolationError:
            return False
        return True

    def __call__(self, x: GridFunction) -> GridFunction:
        self.check_domain(x)
        return self.bilinear(x, x)

    def leading_zero_cells(self, y: GridFunction, tol: float) -> int:
        """Number of initial cells on which ``y`` vanishes (mesh-relative)."""
        small = np.abs(y.values) <= tol
        return int(np.argmin(small)) if not small.all() else y.grid.n

    def preimage(self, y, feasibility_tol=DEFAULT_FEASIBILITY_TOL, xdag: Optional[GridFunction] = None,
                 **kwargs) -> PreimageSet:
        """Solution set assembled from a known solution ``xdag``.

        Complex case: ``{xdag, -xdag}``. Real case: ``{xdag}``; the note
        records whether ``y`` vanishes on the first grid cells, in which case
        uniqueness is not guaranteed at this resolution.
        """
        self._check_range_grid(y)
        if xdag is None:
            raise NotInRangeError("autoconvolution preimages need a known solution xdag")
        tol = _tol(feasibility_tol, y)
        if self.complex_ and not xdag.is_complex:
            xdag = GridFunction(xdag.grid, xdag.values.astype(complex))
        resid = norm(self(xdag) - y)
        if resid > tol:
            return PreimageSet(residual=resid, note="not-in-range")
        if self.complex_:
            return PreimageSet(points=[xdag, -xdag], residual=resid)
        k0 = self.leading_zero_cells(y, tol)
        note = "unique" if k0 == 0 else f"y vanishes on the first {k0} cells; uniqueness not guaranteed"
        return PreimageSet(points=[xdag], residual=resid, note=note)


# module-level helpers -------------------------------------------------------


def evaluate(F: NonlinearOp, x: GridFunction) -> GridFunction:
    return F(x)


def bilinear_eval(F: NonlinearOp, x: GridFunction, z: GridFunction) -> GridFunction:
    if not hasattr(F, "bilinear"):
        raise TypeError(f"{F.kind} is not generated by a bilinear map")
    return F.bilinear(x, z)


def preimage(F: NonlinearOp, y: GridFunction, feasibility_tol: float = DEFAULT_FEASIBILITY_TOL,
             **kwargs) -> PreimageSet:
    return F.preimage(y, feasibility_tol, **kwargs)


def bilinear_bound(F: NonlinearOp, samples: int = 1000, seed: int = 0) -> float:
    """Empirical constant ``c`` with ``||B(u, v)|| <= c ||u|| ||v||``."""
    rng = np.random.default_rng(seed)
    g = F.domain_grid
    best = 0.0
    for _ in range(samples):
        u = GridFunction(g, rng.standard_normal(g.n))
        v = GridFunction(g, rng.standard_normal(g.n))
        if isinstance(F, Autoconvolution) and not F.complex_:
            u = GridFunction(g, np.abs(u.values))
            v = GridFunction(g, np.abs(v.values))
        best = max(best, norm(F.bilinear(u, v)) / (norm(u) * norm(v)))
    return best


def make_operator(kind: str, n: int = 200, **params) -> NonlinearOp:
    """Construct an example operator by its kind label."""
    if kind == "scalar_rational":
        return ScalarRational()
    if kind == "weighted_identity":
        return WeightedIdentity(make_uniform_grid(n, 0.0, 1.0))
    if kind == "quadratic_two":
        return QuadraticTwo(n, params.get("sigmas"))
    if kind == "autoconv_real":
        return Autoconvolution(make_uniform_grid(n, 0.0, 1.0), complex_=False)
    if kind == "autoconv_complex":
        return Autoconvolution(make_uniform_grid(n, 0.0, 1.0), complex_=True)
    raise ValueError(f"unknown nonlinear operator kind {kind!r}")
