"""Tikhonov and Lavrentiev regularization with oracle parameter choice.

The best possible error ``inf_alpha ||x_alpha^delta - xdag||`` is evaluated on
a logarithmic alpha grid, plus the two limits ``alpha -> infinity``
(``x_alpha -> 0``) and ``alpha -> 0`` (``x_alpha -> A^dagger y^delta``, used
only when that limit exists). The supremum over the noise ball is replaced
by a maximum over a declared set of unit directions, which gives a
certified *lower bound* for the maximal best possible error.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import NonSquareOperatorError, SolverBreakdownError
from .hilbert import GridFunction, norm
from .linear import (
    LinearOp,
    SvdFactors,
    accretivity_margin,
    compute_svd,
    default_cutoff,
    pseudoinverse_matrix,
)

METHODS = ("tikhonov", "lavrentiev")
RESIDUAL_TOL = 1e-10


@dataclass
class NoiseSpec:
    """Noise level and unit directions; ``y^delta = y + delta * e``."""

    delta: float
    directions: list
    labels: list = field(default_factory=list)
    mode: str = "exact_norm"

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("noise level must be nonnegative")
        if not self.labels:
            self.labels = [f"dir:{i + 1}" for i in range(len(self.directions))]
        if len(self.labels) != len(self.directions):
            raise ValueError("one label per direction")
        for e, lab in zip(self.directions, self.labels):
            if abs(norm(e) - 1.0) > 1e-12:
                raise ValueError(f"direction {lab} is not a unit vector (norm {norm(e)!r})")

    def with_delta(self, delta: float) -> "NoiseSpec":
        return NoiseSpec(delta, self.directions, self.labels, self.mode)


@dataclass
class AlphaGrid:
    alpha_min: float = 1e-12
    alpha_max: float = 1e4
    count: int = 60

    def __post_init__(self):
        if not 0 < self.alpha_min < self.alpha_max:
            raise ValueError("need 0 < alpha_min < alpha_max")
        if self.count < 10:
            raise ValueError("alpha grid needs at least 10 points")

    def values(self) -> np.ndarray:
        return np.geomspace(self.alpha_min, self.alpha_max, self.count)


@dataclass
class RegularizedRun:
    method: str
    delta: float
    direction: str
    alphas: np.ndarray
    errors: np.ndarray
    best_alpha: float
    best_error: float


# solvers ----------------------------------------------------------------


def _check_method(method: str):
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def _system(A: LinearOp, alpha: float, method: str):
    """Matrix of the shifted system and the map from data to right-hand side."""
    M = A.matrix
    if method == "tikhonov":
        Mh = A.weight_ratio * M.conj().T
        K = Mh @ M + alpha * np.eye(M.shape[1])
        return K, (lambda Y: Mh @ Y)
    if not A.is_square:
        raise NonSquareOperatorError("Lavrentiev regularization needs X = Y")
    return M + alpha * np.eye(M.shape[0]), (lambda Y: Y)


def _condition(K: np.ndarray) -> float:
    try:
        return float(np.linalg.cond(K))
    except np.linalg.LinAlgError:
        return math.inf


def _factor_solve(K: np.ndarray, B: np.ndarray, spd: bool) -> np.ndarray:
    try:
        if spd:
            try:
                return sla.cho_solve(sla.cho_factor(K, check_finite=False), B, check_finite=False)
            except np.linalg.LinAlgError:
                pass
        with warnings.catch_warnings():
            # an exactly zero pivot only warns
            warnings.simplefilter("error", sla.LinAlgWarning)
            return sla.lu_solve(sla.lu_factor(K, check_finite=False), B, check_finite=False)
    except (np.linalg.LinAlgError, sla.LinAlgWarning, ValueError) as exc:
        raise SolverBreakdownError(f"linear solve failed: {exc}", _condition(K)) from exc


def _check_residual(K, X, B):
    if not (np.all(np.isfinite(K)) and np.all(np.isfinite(X))):
        raise SolverBreakdownError("non-finite system or solution", _condition(K))
    R = K @ X - B
    scale = np.linalg.norm(K, 2) * np.linalg.norm(X) + np.linalg.norm(B)
    if np.linalg.norm(R) > RESIDUAL_TOL * max(scale, 1e-300):
        raise SolverBreakdownError("residual check failed", _condition(K))


def _solve(A: LinearOp, Y: np.ndarray, alpha: float, method: str) -> np.ndarray:
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    K, rhs = _system(A, alpha, method)
    B = rhs(Y)
    X = _factor_solve(K, B, spd=(method == "tikhonov"))
    _check_residual(K, X, B)
    return X


def tikhonov_solve(A: LinearOp, ydelta: GridFunction, alpha: float) -> GridFunction:
    """``(A*A + alpha I)^{-1} A* y^delta`` via a Cholesky factorization."""
    return GridFunction(A.domain_grid, _solve(A, ydelta.values, alpha, "tikhonov"))


def lavrentiev_solve(A: LinearOp, ydelta: GridFunction, alpha: float,
                     check_accretive: bool = True) -> GridFunction:
    """``(A + alpha I)^{-1} y^delta``; ``A`` should be accretive."""
    if not A.is_square:
        raise NonSquareOperatorError("Lavrentiev regularization needs X = Y")
    if check_accretive:
        _warn_if_not_accretive(A)
    return GridFunction(A.domain_grid, _solve(A, ydelta.values, alpha, "lavrentiev"))


def _warn_if_not_accretive(A: LinearOp):
    margin = accretivity_margin(A)
    if margin < -1e-10 * max(np.abs(A.matrix).max(), 1e-300):
        warnings.warn(f"operator is not accretive (min re<Ax,x>/|x|^2 = {margin:.3g})",
                      RuntimeWarning, stacklevel=3)


def regularize(A: LinearOp, ydelta: GridFunction, alpha: float, method: str) -> GridFunction:
    _check_method(method)
    if method == "tikhonov":
        return tikhonov_solve(A, ydelta, alpha)
    return lavrentiev_solve(A, ydelta, alpha)


# noise --------------------------------------------------------------------


def add_noise(y: GridFunction, spec: NoiseSpec, direction_index: int) -> GridFunction:
    if not 0 <= direction_index < len(spec.directions):
        raise IndexError(f"direction index {direction_index} out of range")
    return y + spec.delta * spec.directions[direction_index]


def singular_directions(f: SvdFactors, indices: Sequence[int], signed: bool = True):
    """Left singular vectors ``u_k`` labelled ``sv:k`` (and ``-sv:k``)."""
    dirs, labels = [], []
    for k in indices:
        u = f.u(k)
        u = u / norm(u)
        dirs.append(u)
        labels.append(f"sv:{k}")
        if signed:
            dirs.append(-u)
            labels.append(f"-sv:{k}")
    return dirs, labels


def random_directions(grid, count: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    dirs, labels = [], []
    for i in range(count):
        v = GridFunction(grid, rng.standard_normal(grid.n))
        dirs.append(v / norm(v))
        labels.append(f"rnd:{seed}:{i + 1}")
    return dirs, labels


def default_noise(A: LinearOp, delta: float, seed: int = 0, n_singular: int = 24, n_random: int = 8,
                  factors: Optional[SvdFactors] = None) -> NoiseSpec:
    """Signed left singular vectors at log-spaced indices plus seeded random directions."""
    f = factors if factors is not None else compute_svd(A)
    kmax = f.singular_values.size
    idx = np.unique(np.round(np.geomspace(1, kmax, max(n_singular, 1))).astype(int)) if kmax > 1 else [1]
    d1, l1 = singular_directions(f, [int(k) for k in idx])
    d2, l2 = random_directions(A.range_grid, n_random, seed)
    return NoiseSpec(delta, d1 + d2, l1 + l2)


# best possible error engine --------------------------------------------------


def _zero_limit_matrix(A: LinearOp, method: str, factors: Optional[SvdFactors]):
    """Matrix of ``lim_{alpha -> 0} x_alpha`` as a map of the data, if it exists."""
    if method == "tikhonov":
        f = factors if factors is not None else compute_svd(A)
        return pseudoinverse_matrix(f, default_cutoff(f))
    f = factors if factors is not None else compute_svd(A)
    if f.singular_values[-1] > 1e-12 * f.sigma_max:
        return np.linalg.inv(A.matrix)
    return None


@dataclass
class ErrorTable:
    """Errors over ``(alpha, delta, direction)`` and the resulting best values.

    ``errors`` covers the core grid extended by one decade on each side
    (``alphas``); an extension point counts only where the core minimum
    sits on that boundary (``use_lo``/``use_hi``). ``inf_error`` is the
    ``alpha -> infinity`` limit ``||xdag||`` and ``zero_errors`` the
    ``alpha -> 0`` limit (None when that limit does not exist).
    """

    alphas: np.ndarray
    errors: np.ndarray
    use_lo: np.ndarray
    use_hi: np.ndarray
    inf_error: float
    zero_errors: Optional[np.ndarray]
    best_err: np.ndarray
    best_alpha: np.ndarray

    def candidates(self, i: int, j: int):
        """Alphas and errors actually considered for delta ``i`` and direction ``j``."""
        keep = np.ones(self.alphas.size, bool)
        keep[0], keep[-1] = self.use_lo[i, j], self.use_hi[i, j]
        a, e = list(self.alphas[keep]), list(self.errors[keep, i, j])
        if self.zero_errors is not None:
            a.insert(0, 0.0)
            e.insert(0, float(self.zero_errors[i, j]))
        a.append(math.inf)
        e.append(self.inf_error)
        return np.array(a), np.array(e)

    def run(self, method: str, delta: float, label: str, i: int, j: int) -> RegularizedRun:
        a, e = self.candidates(i, j)
        return RegularizedRun(method, float(delta), label, a, e, float(self.best_alpha[i, j]),
                              float(self.best_err[i, j]))


def best_error_table(A: LinearOp, xdag: GridFunction, y: np.ndarray, E: np.ndarray,
                     deltas: Sequence[float], grid: AlphaGrid, method: str,
                     factors: Optional[SvdFactors] = None) -> ErrorTable:
    """Best errors ``inf_alpha ||x_alpha(y + delta e_j) - xdag||`` for all deltas and directions.

    Uses linearity of both solvers in the data: one factorization per alpha
    serves every delta and direction.
    """
    _check_method(method)
    if method == "lavrentiev":
        if not A.is_square:
            raise NonSquareOperatorError("Lavrentiev regularization needs X = Y")
        _warn_if_not_accretive(A)
    h = xdag.grid.h
    core = grid.values()
    alphas = np.concatenate([[core[0] / 10], core, [core[-1] * 10]])
    deltas = np.asarray(deltas, float)
    E = E.reshape(-1, 1) if E.ndim == 1 else E
    errors = np.empty((alphas.size, deltas.size, E.shape[1]))
    rhs = np.column_stack([y, E])
    x = xdag.values
    for i, a in enumerate(alphas):
        X = _solve(A, rhs, a, method)
        D = X[:, :1] - x[:, None]
        for j, d in enumerate(deltas):
            errors[i, j] = math.sqrt(h) * np.linalg.norm(D + d * X[:, 1:], axis=0)

    inner = errors[1:-1]
    arg = inner.argmin(axis=0)
    best_err = inner.min(axis=0)
    best_alpha = core[arg]
    use_lo, use_hi = arg == 0, arg == core.size - 1
    for mask, row, av in ((use_lo, errors[0], alphas[0]), (use_hi, errors[-1], alphas[-1])):
        better = mask & (row < best_err)
        best_err = np.where(better, row, best_err)
        best_alpha = np.where(better, av, best_alpha)

    # alpha -> infinity: x_alpha -> 0
    xnorm = norm(xdag)
    better = xnorm < best_err
    best_err = np.where(better, xnorm, best_err)
    best_alpha = np.where(better, np.inf, best_alpha)
    # alpha -> 0
    lim = None
    P = _zero_limit_matrix(A, method, factors)
    if P is not None:
        Z = P @ rhs
        D0 = Z[:, :1] - x[:, None]
        lim = np.stack([math.sqrt(h) * np.linalg.norm(D0 + d * Z[:, 1:], axis=0) for d in deltas])
        better = lim < best_err
        best_err = np.where(better, lim, best_err)
        best_alpha = np.where(better, 0.0, best_alpha)
    return ErrorTable(alphas, errors, use_lo, use_hi, xnorm, lim, best_err, best_alpha)


def best_possible_error(A: LinearOp, xdag: GridFunction, ydelta: GridFunction,
                        grid: Optional[AlphaGrid] = None, method: str = "tikhonov",
                        delta: float = float("nan"), direction: str = "") -> RegularizedRun:
    """``inf_{alpha > 0} ||x_alpha^delta - xdag||`` on the alpha grid plus its two limits.

    The run lists every candidate considered: ``alpha = 0`` and
    ``alpha = inf`` stand for the limits.
    """
    grid = grid or AlphaGrid()
    zero = np.zeros((ydelta.grid.n, 1), dtype=ydelta.values.dtype)
    table = best_error_table(A, xdag, ydelta.values, zero, [0.0], grid, method)
    return table.run(method, delta, direction, 0, 0)


def worst_case_error(A: LinearOp, xdag: GridFunction, spec: NoiseSpec,
                     grid: Optional[AlphaGrid] = None, method: str = "tikhonov",
                     factors: Optional[SvdFactors] = None) -> RegularizedRun:
    """Maximum of the best possible error over the declared noise directions.

    A sampled lower bound for the maximal best possible error. The returned
    run belongs to the maximizing direction; ``run.best_error`` is the value.
    """
    if not spec.directions:
        raise ValueError("need at least one noise direction")
    grid = grid or AlphaGrid()
    y = A.matrix @ xdag.values
    E = np.column_stack([e.values for e in spec.directions])
    table = best_error_table(A, xdag, y, E, [spec.delta], grid, method, factors)
    j = int(np.argmax(table.best_err[0]))
    return table.run(method, spec.delta, spec.labels[j], 0, j)


def run_to_csv(runs: Sequence[RegularizedRun]) -> str:
    """Rows ``method,delta,direction,alpha,error,best``; limits print as alpha ``0`` and ``inf``."""
    lines = ["method,delta,direction,alpha,error,best"]
    for run in runs:
        best_i = int(np.argmin(run.errors))
        for i, (a, e) in enumerate(zip(run.alphas, run.errors)):
            lines.append(f"{run.method},{run.delta:.16e},{run.direction},{a:.16e},{e:.16e},{int(i == best_i)}")
    return "\n".join(lines) + "\n"



# exact solutions from source conditions --------------------------------------


SOURCE_KINDS = ("smooth_AstarA", "supersmooth", "range_A", "range_A2", "zero", "custom")


@dataclass
class SourceSpec:
    """How to build ``xdag``.

    ``smooth_AstarA``: ``A*A v``; ``supersmooth``: ``(A*A)^2 v``;
    ``range_A``: ``A w``; ``range_A2``: ``A^2 w``; ``zero``; ``custom``
    (``element`` is ``xdag`` itself). The generator ``v``/``w`` is a seeded
    random unit element with coefficients ``xi_k * k**-decay`` in the
    right singular basis of ``A``.
    """

    kind: str
    seed: int = 0
    element: Optional[GridFunction] = None
    decay: float = 1.0

    def __post_init__(self):
        if self.kind not in SOURCE_KINDS:
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.kind == "custom" and self.element is None:
            raise ValueError("custom sources need an element")


def random_element(A: LinearOp, seed: int = 0, decay: float = 1.0,
                   factors: Optional[SvdFactors] = None) -> GridFunction:
    f = factors if factors is not None else compute_svd(A)
    n = A.domain_grid.n
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(n) * np.arange(1, n + 1, dtype=float) ** -decay
    v = GridFunction(A.domain_grid, f.right @ c)
    return v / norm(v)


def make_source(A: LinearOp, spec: SourceSpec, factors: Optional[SvdFactors] = None) -> GridFunction:
    if spec.kind == "zero":
        return GridFunction.zeros(A.domain_grid)
    if spec.kind == "custom":
        return spec.element
    g = random_element(A, spec.seed, spec.decay, factors)
    if spec.kind in ("range_A", "range_A2"):
        if not A.is_square:
            raise NonSquareOperatorError("range sources need X = Y")
        x = A(g)
        return A(x) if spec.kind == "range_A2" else x
    Ah = A.weight_ratio * A.matrix.conj().T
    AtA = Ah @ A.matrix
    vals = AtA @ g.values
    if spec.kind == "supersmooth":
        vals = AtA @ vals
    return GridFunction(A.domain_grid, vals)
