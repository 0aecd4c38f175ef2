"""Convergence-rate fits over noise-level ladders and saturation runs."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InsufficientPointsError, UnderflowError
from .hilbert import norm
from .linear import LinearOp, SvdFactors, accretivity_margin, compute_svd
from .regularization import (
    AlphaGrid,
    NoiseSpec,
    SourceSpec,
    best_error_table,
    default_noise,
    make_source,
)

SATURATION_CAP = {"tikhonov": 2.0 / 3.0, "lavrentiev": 0.5}
CAP_TOL = 0.08
SOURCE_FOR = {
    "tikhonov": {"smooth": "smooth_AstarA", "supersmooth": "supersmooth"},
    "lavrentiev": {"smooth": "range_A", "supersmooth": "range_A2"},
}


def default_deltas(lo: float = 1e-7, hi: float = 1e-2, count: int = 16) -> np.ndarray:
    """Log-spaced noise levels, largest first."""
    return np.geomspace(hi, lo, count)


@dataclass
class RateSeries:
    deltas: np.ndarray
    errors: np.ndarray
    labels: list = field(default_factory=list)
    alphas: Optional[np.ndarray] = None
    kappa: float = float("nan")
    intercept: float = float("nan")
    r2: float = float("nan")
    floor: float = 0.0
    method: str = ""
    source: str = ""
    seed: int = 0

    def __post_init__(self):
        self.deltas = np.asarray(self.deltas, float)
        self.errors = np.asarray(self.errors, float)
        if self.deltas.shape != self.errors.shape:
            raise ValueError("one error per delta")
        if np.any(np.diff(self.deltas) >= 0):
            raise ValueError("deltas must be strictly decreasing")
        if np.any(self.errors < 0):
            raise ValueError("errors must be nonnegative")

    @property
    def usable(self) -> np.ndarray:
        return self.errors > self.floor

    @property
    def window(self) -> tuple:
        return float(self.deltas.min()), float(self.deltas.max())


def fit_power_law(deltas, errors, floor: float = 0.0):
    """Least-squares line through ``(log delta, log error)`` for errors above ``floor``.

    Returns ``(kappa, intercept, r2)``. Constant data gives ``kappa = 0`` and
    ``r2 = 1`` (the fit is exact).
    """
    d = np.asarray(deltas, float)
    e = np.asarray(errors, float)
    keep = e > floor
    if keep.sum() < 4:
        raise InsufficientPointsError(f"need at least 4 usable points, have {int(keep.sum())}")
    x, y = np.log(d[keep]), np.log(e[keep])
    (kappa, intercept), *_ = np.linalg.lstsq(np.column_stack([x, np.ones_like(x)]), y, rcond=None)
    ss_res = float(np.sum((y - (kappa * x + intercept)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot <= 1e-28 * max(1.0, float(np.sum(y ** 2))) else 1.0 - ss_res / ss_tot
    return float(kappa), float(intercept), r2


def fit_rate_exponent(series: RateSeries):
    """Slope and R^2 of the log-log fit; also stored on ``series``."""
    kappa, intercept, r2 = fit_power_law(series.deltas, series.errors, series.floor)
    series.kappa, series.intercept, series.r2 = kappa, intercept, r2
    return kappa, r2


def underflow_floor(xdag) -> float:
    xn = norm(xdag)
    return 1e-12 * xn if xn > 0 else 1e-14


def run_rate_experiment(A: LinearOp, source: SourceSpec, deltas: Optional[Sequence[float]] = None,
                        noise: Optional[NoiseSpec] = None, grid: Optional[AlphaGrid] = None,
                        method: str = "tikhonov", factors: Optional[SvdFactors] = None) -> RateSeries:
    """Worst case (over ``noise.directions``) best possible error for each delta, then fit.

    Raises UnderflowError (carrying the series) when every error sits below
    the underflow floor, as happens for ``xdag = 0``.
    """
    f = factors if factors is not None else compute_svd(A)
    grid = grid or AlphaGrid()
    deltas = np.sort(np.asarray(default_deltas() if deltas is None else deltas, float))[::-1]
    noise = noise if noise is not None else default_noise(A, 1.0, seed=source.seed, factors=f)
    xdag = make_source(A, source, f)
    y = A.matrix @ xdag.values
    E = np.column_stack([e.values for e in noise.directions])
    table = best_error_table(A, xdag, y, E, deltas, grid, method, f)
    best_err, best_alpha = table.best_err, table.best_alpha
    worst = best_err.argmax(axis=1)
    rows = np.arange(deltas.size)
    series = RateSeries(
        deltas, best_err[rows, worst], [noise.labels[j] for j in worst], best_alpha[rows, worst],
        floor=underflow_floor(xdag), method=method, source=source.kind, seed=source.seed,
    )
    if not series.usable.any():
        raise UnderflowError("every error is below the underflow floor", series)
    fit_rate_exponent(series)
    return series


@dataclass
class SaturationReport:
    method: str
    series: dict
    verdicts: dict
    cap: float
    cap_tol: float

    @property
    def verdict(self) -> str:
        return self.verdicts.get("supersmooth", "")


def saturation_experiment(A: LinearOp, method: str = "tikhonov", deltas: Optional[Sequence[float]] = None,
                          noise: Optional[NoiseSpec] = None, grid: Optional[AlphaGrid] = None,
                          seed: int = 0, cap_tol: float = CAP_TOL) -> SaturationReport:
    """Rate runs for the smooth, supersmooth and zero sources of ``method``."""
    if method == "lavrentiev" and accretivity_margin(A) < -1e-10:
        warnings.warn("saturation run on a non-accretive operator", RuntimeWarning, stacklevel=2)
    f = compute_svd(A)
    noise = noise if noise is not None else default_noise(A, 1.0, seed=seed, factors=f)
    cap = SATURATION_CAP[method]
    series, verdicts = {}, {}
    kinds = dict(SOURCE_FOR[method], zero="zero")
    for name, kind in kinds.items():
        try:
            s = run_rate_experiment(A, SourceSpec(kind, seed=seed), deltas, noise, grid, method, f)
        except UnderflowError as exc:
            series[name] = exc.series
            verdicts[name] = "degenerate_zero"
            continue
        series[name] = s
        verdicts[name] = "rate_capped" if s.kappa <= cap + cap_tol else "rate_improves"
    return SaturationReport(method, series, verdicts, cap, cap_tol)


def series_to_csv(s: RateSeries) -> str:
    lines = ["delta,error,direction,alpha"]
    alphas = s.alphas if s.alphas is not None else np.full(s.deltas.shape, np.nan)
    labels = s.labels or [""] * s.deltas.size
    for d, e, lab, a in zip(s.deltas, s.errors, labels, alphas):
        lines.append(f"{d:.16e},{e:.16e},{lab},{a:.16e}")
    return "\n".join(lines) + "\n"


def series_summary(s: RateSeries) -> str:
    lo, hi = s.window
    return (f"kappa,r2,intercept,floor,delta_min,delta_max,method,source,seed,bound\n"
            f"{s.kappa:.16e},{s.r2:.16e},{s.intercept:.16e},{s.floor:.16e},"
            f"{lo:.16e},{hi:.16e},{s.method},{s.source},{s.seed},sampled lower bound\n")
