"""Matrix-represented bounded linear operators between discretized L2 spaces.

A :class:`LinearOp` stores the matrix acting on grid-function *values*;
quadrature weights are already folded into the matrix (e.g. the Volterra
matrix carries the factor ``h``). Adjoints, singular values and
pseudoinverses are taken with respect to the weighted inner products of
the domain and range grids.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError, GridMismatchError, NotInRangeError
from .hilbert import FLOAT_FMT, Grid, GridFunction, _parse_grid_comment, sequence_grid
from .sets import AffineSubspace, PreimageSet

TAGS = ("volterra", "diagonal", "damped_shift", "partial_isometry", "identity", "custom")


@dataclass(frozen=True, eq=False)
class LinearOp:
    matrix: np.ndarray
    domain_grid: Grid
    range_grid: Grid
    tag: str = "custom"
    sigmas: Optional[tuple] = None

    def __post_init__(self):
        m = np.array(self.matrix, copy=True)
        if m.shape != (self.range_grid.n, self.domain_grid.n):
            raise DimensionError(
                f"matrix shape {m.shape} does not match grids "
                f"({self.range_grid.n}, {self.domain_grid.n})"
            )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def is_square(self) -> bool:
        return self.domain_grid == self.range_grid

    def __call__(self, x: GridFunction) -> GridFunction:
        return apply(self, x)

    @property
    def weight_ratio(self) -> float:
        """``h_range / h_domain``, the factor relating matrix and operator adjoints."""
        return self.range_grid.h / self.domain_grid.h


@dataclass
class SvdFactors:
    """Singular system ``A v_k = sigma_k u_k`` in the weighted inner products.

    ``left`` has ``min(n_out, n_in)`` columns; ``right`` is the full square
    basis of the domain so that nullspace vectors are available.
    """

    singular_values: np.ndarray
    left: np.ndarray
    right: np.ndarray
    domain_grid: Grid
    range_grid: Grid

    @property
    def sigma_max(self) -> float:
        return float(self.singular_values[0]) if self.singular_values.size else 0.0

    def u(self, k: int) -> GridFunction:
        return GridFunction(self.range_grid, self.left[:, k - 1])

    def v(self, k: int) -> GridFunction:
        return GridFunction(self.domain_grid, self.right[:, k - 1])

    def rank(self, cutoff: float) -> int:
        return int(np.count_nonzero(self.singular_values > cutoff))


@dataclass
class NashedReport:
    """Finite-dimensional proxy for the closed-range classification.

    Any matrix has closed range, so this is a heuristic read off the
    singular-value decay; see :func:`nashed_classify`.
    """

    classification: str
    numerical_rank: int
    decay_exponent: float
    cutoff_used: float
    r2: float = float("nan")
    plateau: int = 0
    note: str = "finite-dimensional proxy"


def apply(A: LinearOp, x: GridFunction) -> GridFunction:
    if x.grid != A.domain_grid:
        raise GridMismatchError(f"operator expects {A.domain_grid}, got {x.grid}")
    return GridFunction(A.range_grid, A.matrix @ x.values)


def adjoint(A: LinearOp) -> LinearOp:
    # <Ax, y>_Y = <x, A* y>_X  with  A* = (h_Y / h_X) M^H
    return LinearOp(
        A.weight_ratio * A.matrix.conj().T, A.range_grid, A.domain_grid, A.tag, A.sigmas
    )


def compose(A: LinearOp, B: LinearOp, tag: str = "custom") -> LinearOp:
    """The product ``A B``."""
    if B.range_grid != A.domain_grid:
        raise GridMismatchError(f"{B.range_grid} vs {A.domain_grid}")
    return LinearOp(A.matrix @ B.matrix, B.domain_grid, A.range_grid, tag)


def compute_svd(A: LinearOp) -> SvdFactors:
    c = math.sqrt(A.weight_ratio)
    U, s, Vh = np.linalg.svd(c * A.matrix, full_matrices=True)
    k = s.size
    left = U[:, :k] / math.sqrt(A.range_grid.h)
    right = Vh.conj().T / math.sqrt(A.domain_grid.h)
    return SvdFactors(s, left, right, A.domain_grid, A.range_grid)


def reconstruct(f: SvdFactors) -> np.ndarray:
    """Matrix of the operator rebuilt from its singular system."""
    k = f.singular_values.size
    return f.domain_grid.h * (f.left * f.singular_values) @ f.right[:, :k].conj().T


def pseudoinverse_apply(f: SvdFactors, y: GridFunction, cutoff: float = 0.0) -> GridFunction:
    """Moore-Penrose inverse restricted to singular values above ``cutoff``."""
    if y.grid != f.range_grid:
        raise GridMismatchError(f"expected {f.range_grid}, got {y.grid}")
    s = f.singular_values
    keep = s > cutoff
    coeffs = f.range_grid.h * (f.left[:, keep].conj().T @ y.values)
    x = f.right[:, : s.size][:, keep] @ (coeffs / s[keep])
    return GridFunction(f.domain_grid, x)


def pseudoinverse_matrix(f: SvdFactors, cutoff: float = 0.0) -> np.ndarray:
    """Matrix of ``A^dagger`` acting on range-grid values."""
    s = f.singular_values
    keep = s > cutoff
    V = f.right[:, : s.size][:, keep]
    return f.range_grid.h * (V / s[keep]) @ f.left[:, keep].conj().T


def pseudoinverse_norm(f: SvdFactors, cutoff: float = 0.0) -> float:
    s = f.singular_values[f.singular_values > cutoff]
    return float(1.0 / s.min()) if s.size else 0.0


def nullspace_basis(f: SvdFactors, cutoff: float = 0.0) -> np.ndarray:
    return f.right[:, f.rank(cutoff):]


def default_cutoff(f: SvdFactors, rel: float = 1e-12) -> float:
    return rel * f.sigma_max


def linear_preimage(
    A: LinearOp,
    y: GridFunction,
    factors: Optional[SvdFactors] = None,
    cutoff: Optional[float] = None,
    feasibility_tol: float = 1e-8,
) -> PreimageSet:
    """Solution set ``A^dagger y + N(A)`` as an affine subspace.

    Returns an empty set with the diagnostic residual when ``y`` is not in
    the numerical range.
    """
    f = factors if factors is not None else compute_svd(A)
    cut = default_cutoff(f) if cutoff is None else cutoff
    x0 = pseudoinverse_apply(f, y, cut)
    resid = float(np.sqrt(A.range_grid.h) * np.linalg.norm(A.matrix @ x0.values - y.values))
    ynorm = float(np.sqrt(y.grid.h) * np.linalg.norm(y.values))
    if resid > feasibility_tol * (1.0 + ynorm):
        return PreimageSet(residual=resid, note="not-in-range")
    sub = AffineSubspace(x0, nullspace_basis(f, cut), label="pinv+nullspace")
    return PreimageSet(subspace=sub, residual=resid)


def check_in_range(A: LinearOp, y: GridFunction, feasibility_tol: float = 1e-8) -> None:
    s = linear_preimage(A, y, feasibility_tol=feasibility_tol)
    if s.is_empty:
        raise NotInRangeError("data is not in the numerical range", s.residual)


def operator_norm(A: LinearOp, tol: float = 1e-14, maxiter: int = 20000, seed: int = 0) -> float:
    """Power iteration on ``A*A`` in the weighted inner product."""
    rng = np.random.default_rng(seed)
    AtA = A.weight_ratio * A.matrix.conj().T @ A.matrix
    x = rng.standard_normal(A.domain_grid.n)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(maxiter):
        z = AtA @ x
        new = float(np.real(np.vdot(x, z)))
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return 0.0
        x = z / nz
        if abs(new - lam) <= tol * max(abs(new), 1e-300):
            lam = new
            break
        lam = new
    return math.sqrt(max(lam, 0.0))


def accretivity_margin(A: LinearOp) -> float:
    """Exact ``min re<Ax, x> / ||x||^2`` (smallest eigenvalue of the Hermitian part)."""
    if not A.is_square:
        raise GridMismatchError("accretivity needs X = Y")
    M = A.matrix
    return float(np.linalg.eigvalsh(0.5 * (M + M.conj().T))[0])


def accretivity_check(A: LinearOp, samples: int = 1000, seed: int = 0) -> float:
    """Sampled minimum of ``re<Ax, x> / ||x||^2`` over random probes."""
    if not A.is_square:
        raise GridMismatchError("accretivity needs X = Y")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((A.domain_grid.n, samples))
    if np.iscomplexobj(A.matrix):
        X = X + 1j * rng.standard_normal(X.shape)
    num = np.real(np.sum(X.conj() * (A.matrix @ X), axis=0))
    den = np.sum(np.abs(X) ** 2, axis=0)
    return float(np.min(num / den))


# builders ---------------------------------------------------------------


def make_identity(grid: Grid) -> LinearOp:
    return LinearOp(np.eye(grid.n), grid, grid, "identity")


def make_diagonal(sigmas: Sequence[float], grid: Optional[Grid] = None) -> LinearOp:
    """Diagonal operator in the orthonormal indicator basis of ``grid``."""
    s = np.asarray(sigmas, dtype=float)
    g = grid if grid is not None else sequence_grid(s.size)
    if g.n != s.size:
        raise DimensionError(f"{s.size} sigmas for a grid of size {g.n}")
    return LinearOp(np.diag(s), g, g, "diagonal", tuple(s.tolist()))


def make_volterra(grid: Grid) -> LinearOp:
    """``(Ax)(s) = int_a^s x(t) dt`` with exact cellwise integration.

    The half cell containing the node contributes ``h/2``; the symmetric
    part is then ``(h/2) 1 1^T``, so the discrete operator is accretive
    with ``re<Ax, x> = (int x)^2 / 2`` exactly.
    """
    n, h = grid.n, grid.h
    M = h * (np.tril(np.ones((n, n)), -1) + 0.5 * np.eye(n))
    return LinearOp(M, grid, grid, "volterra")


def harmonic_sigmas(dim: int) -> np.ndarray:
    """``sigma_k = 1/k`` for ``k = 1..dim``."""
    return 1.0 / np.arange(1, dim + 1)


def _sigma_array(sigmas, dim: int) -> np.ndarray:
    if callable(sigmas):
        return np.array([sigmas(k) for k in range(1, dim + 1)], dtype=float)
    s = np.asarray(sigmas, dtype=float)
    if s.size < dim - 1:
        raise DimensionError(f"need at least {dim - 1} sigmas, got {s.size}")
    return s


def make_damped_shift(sigmas, dim: int) -> LinearOp:
    """``S e_1 = e_1``, ``S e_2 = 0``, ``S e_k = sigma_k e_{k+1}`` for ``3 <= k < dim``.

    The last basis vector is mapped to zero by truncation.
    """
    if dim < 5:
        raise DimensionError(f"dimension must be at least 5, got {dim}")
    s = _sigma_array(sigmas, dim)
    if np.any(s[2: dim - 1] == 0):
        raise DimensionError("sigmas must be nonzero")
    M = np.zeros((dim, dim))
    M[0, 0] = 1.0
    for k in range(3, dim):
        M[k, k - 1] = s[k - 1]
    g = sequence_grid(dim)
    return LinearOp(M, g, g, "damped_shift", tuple(s[:dim].tolist()))


def make_partial_isometry(dim: int) -> LinearOp:
    """``T e_1 = 0`` and ``T e_k = e_k`` for ``k >= 2``."""
    if dim < 5:
        raise DimensionError(f"dimension must be at least 5, got {dim}")
    M = np.eye(dim)
    M[0, 0] = 0.0
    g = sequence_grid(dim)
    return LinearOp(M, g, g, "partial_isometry")


# classification --------------------------------------------------------


def _loglog_fit(s: np.ndarray):
    k = np.arange(1, s.size + 1, dtype=float)
    if s.size < 3:
        return 0.0, float("nan")
    lx, ly = np.log(k), np.log(s)
    slope, intercept = np.polyfit(lx, ly, 1)
    ss_res = float(np.sum((ly - (slope * lx + intercept)) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else float("nan")
    return float(-slope), r2


def nashed_classify(
    f: SvdFactors,
    rank_cutoff: float = 1e-12,
    decay_threshold: float = 1e-3,
    flat_rtol: float = 0.05,
    min_exponent: float = 0.5,
    min_r2: float = 0.95,
) -> NashedReport:
    """Heuristic well-/ill-posedness label from the singular spectrum.

    ``rank_cutoff`` and ``decay_threshold`` are relative to ``sigma_max``.
    A leading plateau of singular values within ``flat_rtol`` of the
    maximum, followed by a power-law tail, is read as type I (an isometric
    block inside the range); a power-law decay of the whole spectrum as
    type II; no decay with a smallest retained value above the threshold
    as well posed.
    """
    smax = f.sigma_max
    cutoff = rank_cutoff * smax
    s = f.singular_values[f.singular_values > cutoff]
    rank = int(s.size)
    if rank == 0:
        return NashedReport("well_posed", 0, 0.0, cutoff, note="zero operator")

    plateau = int(np.count_nonzero(s >= (1.0 - flat_rtol) * smax))
    tail = s[plateau:]
    if plateau >= max(2, int(0.1 * rank)) and tail.size >= 3:
        p, r2 = _loglog_fit(tail)
        if p > min_exponent and r2 > min_r2:
            return NashedReport("ill_posed_type_I", rank, p, cutoff, r2, plateau,
                                note="finite-dimensional proxy: flat block + decaying block")

    p, r2 = _loglog_fit(s)
    if p > min_exponent and r2 > min_r2:
        return NashedReport("ill_posed_type_II", rank, p, cutoff, r2, plateau)
    if s[-1] >= decay_threshold * smax:
        return NashedReport("well_posed", rank, p, cutoff, r2, plateau)
    return NashedReport("ill_posed_type_II", rank, p, cutoff, r2, plateau,
                        note="finite-dimensional proxy: small singular values without power law")


# serialization ---------------------------------------------------------


def _grid_line(name: str, g: Grid) -> str:
    return f"# {name}: n={g.n}, a={FLOAT_FMT.format(g.a)}, b={FLOAT_FMT.format(g.b)}\n"


def to_csv(A: LinearOp) -> str:
    if np.iscomplexobj(A.matrix):
        raise TypeError("CSV export supports real matrices only")
    buf = io.StringIO()
    buf.write(f"# tag: {A.tag}\n")
    buf.write(_grid_line("domain", A.domain_grid))
    buf.write(_grid_line("range", A.range_grid))
    if A.sigmas is not None:
        buf.write("# sigmas: " + ",".join(FLOAT_FMT.format(s) for s in A.sigmas) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"c{j}" for j in range(A.shape[1])])
    for row in A.matrix:
        writer.writerow([FLOAT_FMT.format(v) for v in row])
    return buf.getvalue()


def from_csv(text: str) -> LinearOp:
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            meta[key.strip()] = line
            meta[key.strip() + "_value"] = val.strip()
        elif line:
            body.append(line)
    rows = list(csv.reader(body))[1:]
    M = np.array(rows, dtype=float).reshape(len(rows), -1)
    dom = _parse_grid_comment(meta["domain"])
    rng = _parse_grid_comment(meta["range"])
    sig = meta.get("sigmas_value")
    sigmas = tuple(float(v) for v in sig.split(",")) if sig else None
    return LinearOp(M, dom, rng, meta.get("tag_value", "custom"), sigmas)
