"""Quasi-distance of solution sets and the two stability probes.

``probe_stable_solvability`` works in image space: data ``y_n -> y`` inside
the range, and the quasi-distance of the preimage sets is tracked.
``probe_local_posedness`` works in solution space: points on a sphere of
radius ``r`` around ``xdag`` whose images approach ``F(xdag)`` witness
local ill-posedness.

Both probes can only *refute* stability. They run canonical sequence
families per operator, so a ``stable`` or ``well-posed`` verdict means
"no counterexample among the canonical families"; reports say so.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EmptySetError, NoCanonicalSequenceError, SingularBranchError
from .hilbert import GridFunction, distance, norm
from .linear import LinearOp, compute_svd, linear_preimage, default_cutoff
from .nonlinear import (
    Autoconvolution,
    QuadraticTwo,
    ScalarRational,
    WeightedIdentity,
    scalar,
)
from .sets import PreimageSet

DISCLAIMER = "sampled verdict over canonical families; not a proof over all sequences"


def qdist(U: PreimageSet, V: PreimageSet) -> float:
    """``sup_{u in U} inf_{v in V} ||u - v||``.

    Distances to an affine subspace are exact projections. An unbounded
    ``U`` has infinite quasi-distance to ``V`` unless every direction of
    ``U`` lies in a subspace of ``V``, in which case the distance is
    attained at ``U``'s offset.
    """
    if U.is_empty:
        raise EmptySetError("empty-source: quasi-distance from an empty set")
    if V.is_empty:
        raise EmptySetError("empty-target: quasi-distance to an empty set")
    best = 0.0
    if U.subspace is not None:
        if U.subspace.dim > 0:
            if V.subspace is None or not V.subspace.contains_directions(U.subspace):
                return math.inf
            best = V.subspace.distance(U.subspace.offset)
        else:
            best = V.distance_to(U.subspace.offset)
    for p in U.points:
        best = max(best, V.distance_to(p))
    return best


@dataclass
class SequenceSpec:
    family: Optional[str] = None
    length: int = 12
    radius: float = 0.5
    seed: int = 0
    stable_tol: float = 1e-3
    witness_tol: float = 0.1

    def __post_init__(self):
        if self.length < 4:
            raise ValueError("sequence length must be at least 4")
        if not self.radius > 0:
            raise ValueError("radius must be positive")


@dataclass
class FamilyResult:
    name: str
    rows: list
    verdict: str
    note: str = ""


@dataclass
class ProbeReport:
    kind: str
    rows: list
    verdict: str
    witness: Optional[str] = None
    families: dict = field(default_factory=dict)
    note: str = DISCLAIMER

    def gaps(self):
        arr = np.array([(r[1], r[2]) for r in self.rows], dtype=float)
        return arr[:, 0], arr[:, 1]


# helpers -------------------------------------------------------------------


def _image(F, x: GridFunction) -> GridFunction:
    return F(x)


def _log_indices(lo: int, hi: int, count: int) -> list[int]:
    if hi <= lo:
        return [lo]
    idx = np.unique(np.round(np.geomspace(lo, hi, count)).astype(int))
    return [int(i) for i in idx]


def _unit(v: GridFunction) -> GridFunction:
    return v / norm(v)


def _random_units(grid, count: int, seed: int, complex_: bool = False) -> list[GridFunction]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        vals = rng.standard_normal(grid.n)
        if complex_:
            vals = vals + 1j * rng.standard_normal(grid.n)
        out.append(_unit(GridFunction(grid, vals)))
    return out


def _sine_modes(grid, freqs, complex_=False) -> list[GridFunction]:
    dtype = complex if complex_ else float
    return [
        _unit(GridFunction.from_callable(grid, lambda t, k=k: math.sqrt(2) * np.sin(2 * np.pi * k * t), dtype))
        for k in freqs
    ]


def _end_bumps(grid, length: int, complex_=False) -> list[GridFunction]:
    """Unit indicators of shrinking intervals at the right end of the grid."""
    cells = sorted(set(_log_indices(1, max(grid.n // 4, 1), length)), reverse=True)
    out = []
    for m in cells:
        v = np.zeros(grid.n, dtype=complex if complex_ else float)
        v[grid.n - m:] = 1.0
        out.append(_unit(GridFunction(grid, v)))
    return out


# canonical families for stable solvability ----------------------------------


def _linear_families(A: LinearOp, y, spec, **_):
    f = compute_svd(A)
    cut = default_cutoff(f)
    Py = linear_preimage(A, y, f, cut)

    def pre(z):
        return linear_preimage(A, z, f, cut)

    fams = {}
    u1 = f.u(1)
    fams["range-direction"] = [(n, y + u1 / n) for n in (4 ** j for j in range(1, spec.length + 1))]
    rank = f.rank(cut)
    ladder = _log_indices(1, rank, spec.length)
    fams["singular-ladder"] = [(k, y + f.singular_values[k - 1] * f.u(k)) for k in ladder]
    return Py, {name: [(n, yn, pre(yn)) for n, yn in seq] for name, seq in fams.items()}


def _rational_families(F: ScalarRational, y, spec, **_):
    t = float(y.values[0])
    Py = F.preimage(y)
    fams = {}
    up = [(n, t + 10.0 ** -n) for n in range(1, spec.length + 1) if t + 10.0 ** -n <= 0.5]
    lo = [(n, t - 10.0 ** -n) for n in range(1, spec.length + 1) if t - 10.0 ** -n >= 0.0]
    for name, seq in (("upper", up), ("lower", lo)):
        if len(seq) >= 4:
            fams[name] = [(n, scalar(v), F.preimage(scalar(v))) for n, v in seq]
    return Py, fams


def _weighted_identity_families(F: WeightedIdentity, y, spec, **_):
    Py = F.preimage(y)
    one = GridFunction.ones(F.domain_grid)
    ns = [4 ** j for j in range(1, spec.length + 1)]
    fams = {"constant": [(n, y + one / n) for n in ns]}
    if F.psi(y) > 0:
        z = _unit(GridFunction.from_callable(F.domain_grid, lambda t: np.cos(2 * np.pi * t)))
        fams["mean-zero"] = [(n, y + z / n) for n in ns]
    return Py, {name: [(n, yn, F.preimage(yn)) for n, yn in seq] for name, seq in fams.items()}


def _quadratic_two_families(F: QuadraticTwo, y, spec, **_):
    Py = F.preimage(y)
    if Py.is_empty:
        return Py, {}
    x0 = Py.points[0] if Py.points else Py.subspace.offset
    eps = [4.0 ** -j for j in range(1, spec.length + 1)]
    seqs = {
        "u1-shift": [(j, y + e * F.u(1)) for j, e in enumerate(eps, 1)],
        "u2-shift": [(j, y + e * F.u(2)) for j, e in enumerate(eps, 1)],
    }
    z = _random_units(F.domain_grid, 1, spec.seed)[0]
    seqs["radial-images"] = [(j, F(x0 + e * z)) for j, e in enumerate(eps, 1)]
    ks = _log_indices(3, F.dim - 1, spec.length)
    seqs["witness-images"] = [(k, F(x0 + spec.radius * F.u(k))) for k in ks]
    fams = {}
    for name, seq in seqs.items():
        rows = []
        for n, yn in seq:
            try:
                Pn = F.preimage(yn)
            except SingularBranchError:
                Pn = None
            # yn is in the range by construction, so an empty set means the solve broke down
            rows.append((n, yn, None if Pn is None or Pn.is_empty else Pn))
        fams[name] = rows
    return Py, fams


def _autoconv_families(F: Autoconvolution, y, spec, xdag=None, **_):
    if xdag is None:
        raise NoCanonicalSequenceError("autoconvolution probes need the generating solution xdag")
    Py = F.preimage(y, xdag=xdag)
    g = F.domain_grid
    cplx = F.complex_
    bumps = _end_bumps(g, spec.length, cplx)
    sines = _sine_modes(g, _log_indices(4, max(4, min(64, g.n // 8)), spec.length), cplx)
    eps = [2.0 ** -j for j in range(1, spec.length + 1)]
    xs = {
        "radial-images": [(j, xdag + (spec.radius * e) * bumps[0]) for j, e in enumerate(eps, 1)],
        "sine-images": [(j, xdag + spec.radius * u) for j, u in enumerate(sines, 1)],
        "end-bump-images": [(j, xdag + spec.radius * u) for j, u in enumerate(bumps, 1)],
    }
    fams = {}
    for name, seq in xs.items():
        rows = [(n, F(x), F.preimage(F(x), xdag=x)) for n, x in seq if F.in_domain(x)]
        if len(rows) >= 4:
            fams[name] = rows
    return Py, fams


def stability_families(F, y: GridFunction, spec: SequenceSpec, xdag=None):
    """Preimage of ``y`` and the canonical in-range data sequences ``y_n -> y``."""
    if isinstance(F, LinearOp):
        Py, fams = _linear_families(F, y, spec)
    elif isinstance(F, ScalarRational):
        Py, fams = _rational_families(F, y, spec)
    elif isinstance(F, WeightedIdentity):
        Py, fams = _weighted_identity_families(F, y, spec)
    elif isinstance(F, QuadraticTwo):
        Py, fams = _quadratic_two_families(F, y, spec)
    elif isinstance(F, Autoconvolution):
        Py, fams = _autoconv_families(F, y, spec, xdag=xdag)
    else:
        raise NoCanonicalSequenceError(f"no canonical sequence family for {type(F).__name__}")
    if spec.family is not None:
        if spec.family not in fams:
            raise NoCanonicalSequenceError(f"unknown family {spec.family!r}; have {sorted(fams)}")
        fams = {spec.family: fams[spec.family]}
    return Py, fams


def _fit_slope(g, d) -> float:
    g, d = np.asarray(g, float), np.asarray(d, float)
    ok = (g > 0) & (d > 0) & np.isfinite(d)
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(g[ok]), np.log(d[ok]), 1)[0])


def _stability_verdict(rows, tol: float) -> tuple[str, str]:
    g = np.array([r[1] for r in rows], float)
    d = np.array([r[2] for r in rows], float)
    if not g[-1] <= 0.1 * g[0]:
        return "uninformative", "input gap does not shrink by 10x"
    if np.isnan(d).any():
        return "uninformative", "preimage solve broke down"
    tiny = 1e-14 * max(1.0, tol / 1e-3)
    diverging = d[-1] >= 10 * d[0] and g[-1] <= 1e-3 * g[0]
    if d[-1] >= tol and (d[-1] >= 0.5 * d[0] or diverging):
        return "unstable", "diverging" if diverging else "bounded away from zero"
    if d[-1] < tol:
        if np.all(d <= tiny):
            return "stable", "all gaps vanish"
        theta = _fit_slope(g, d)
        if theta > 0:
            return "stable", f"d_n ~ C |y_n - y|^{theta:.3g}"
    return "inconclusive", ""


def probe_stable_solvability(F, y: GridFunction, spec: Optional[SequenceSpec] = None,
                             xdag: Optional[GridFunction] = None) -> ProbeReport:
    """Track ``qdist(F^-1(y_n), F^-1(y))`` along canonical sequences ``y_n -> y``."""
    spec = spec or SequenceSpec()
    Py, fams = stability_families(F, y, spec, xdag=xdag)
    if Py.is_empty:
        raise EmptySetError("empty-target: y is not in the numerical range")
    tol = spec.stable_tol * max(1.0, Py.scale())
    results = {}
    for name, seq in fams.items():
        rows = []
        for n, yn, Pn in seq:
            gap = distance(yn, y)
            d = math.nan if Pn is None else qdist(Pn, Py)
            rows.append((n, gap, d))
        verdict, note = _stability_verdict(rows, tol)
        results[name] = FamilyResult(name, rows, verdict, note)
    return _assemble("stable_solvability", results, bad="unstable", good="stable")


def _assemble(kind, results: dict, bad: str, good: str) -> ProbeReport:
    informative = {k: r for k, r in results.items() if r.verdict != "uninformative"}
    for name, r in informative.items():
        if r.verdict == bad:
            return ProbeReport(kind, r.rows, bad, witness=f"{name}: {r.note}", families=results)
    if informative and all(r.verdict == good for r in informative.values()):
        first = next(iter(informative.values()))
        return ProbeReport(kind, first.rows, good, families=results)
    rows = next(iter(results.values())).rows if results else []
    return ProbeReport(kind, rows, "inconclusive", families=results)


# canonical families for local well-/ill-posedness ---------------------------


def direction_families(F, xdag: GridFunction, spec: SequenceSpec) -> dict:
    """Unit directions ``z_n``; the probe evaluates ``xdag + r z_n``."""
    L = spec.length
    if isinstance(F, LinearOp):
        f = compute_svd(F)
        ks = _log_indices(1, F.domain_grid.n, L)
        return {
            "singular-ladder": [f.v(k) for k in ks],
            "random": _random_units(F.domain_grid, L, spec.seed, np.iscomplexobj(F.matrix)),
        }
    if isinstance(F, ScalarRational):
        return {"signs": [scalar((-1.0) ** j) for j in range(L)]}
    if isinstance(F, WeightedIdentity):
        g = F.domain_grid
        modes = _log_indices(1, max(1, g.n // 4), L)
        return {
            "mean-zero-modes": [_unit(GridFunction.from_callable(g, lambda t, k=k: np.cos(2 * np.pi * k * t)))
                                for k in modes],
            "random": _random_units(g, L, spec.seed),
        }
    if isinstance(F, QuadraticTwo):
        m_dirs = [F.u(1), F.u(2), -F.u(1), -F.u(2)]
        return {
            "basis-ladder": [F.u(k) for k in _log_indices(3, F.dim - 1, L)],
            "M-directions": [m_dirs[j % 4] for j in range(L)],
            "random": _random_units(F.domain_grid, L, spec.seed),
        }
    if isinstance(F, Autoconvolution):
        g = F.domain_grid
        fams = {
            "sine": _sine_modes(g, _log_indices(4, max(4, min(64, g.n // 8)), L), F.complex_),
            "end-bump": _end_bumps(g, L, F.complex_),
        }
        if F.complex_:
            fams["random"] = _random_units(g, L, spec.seed, complex_=True)
        return fams
    raise NoCanonicalSequenceError(f"no canonical direction family for {type(F).__name__}")


def _in_domain(F, x) -> bool:
    return F.in_domain(x) if isinstance(F, Autoconvolution) else True


def probe_local_posedness(F, xdag: GridFunction, spec: Optional[SequenceSpec] = None) -> ProbeReport:
    """Search for ``x_n`` with ``||x_n - xdag|| = r`` and ``F(x_n) -> F(xdag)``.

    Rows are ``(n, image gap, preimage gap)``. Without a witness, the
    empirical modulus ``m(eps) = max{||x - xdag|| : ||F(x) - F(xdag)|| <= eps}``
    over all sampled points (fixed radius and radially shrinking) must fall
    by the factor ``witness_tol`` from the largest to the smallest ``eps``
    for a ``well-posed`` verdict.
    """
    spec = spec or SequenceSpec()
    fams = direction_families(F, xdag, spec)
    if spec.family is not None:
        if spec.family not in fams:
            raise NoCanonicalSequenceError(f"unknown family {spec.family!r}; have {sorted(fams)}")
        fams = {spec.family: fams[spec.family]}
    Fx = _image(F, xdag)
    r = spec.radius
    tiny = 1e-12 * (1.0 + norm(Fx))
    samples = []
    results = {}
    for name, dirs in fams.items():
        rows = []
        for n, z in enumerate(dirs, 1):
            x = xdag + r * z
            if not _in_domain(F, x):
                continue
            rows.append((n, distance(_image(F, x), Fx), distance(x, xdag)))
        if len(rows) < 4:
            results[name] = FamilyResult(name, rows, "uninformative", "fewer than 4 points in the domain")
            continue
        samples.extend((e, p) for _, e, p in rows)
        e = np.array([row[1] for row in rows])
        if e.max() <= tiny:
            results[name] = FamilyResult(name, rows, "ill-posed", "images coincide at fixed radius")
        elif e[-1] <= spec.witness_tol * e[0]:
            results[name] = FamilyResult(name, rows, "ill-posed",
                                         f"image gap ratio {e[-1] / e[0]:.3g} at fixed radius {r:g}")
        else:
            results[name] = FamilyResult(name, rows, "no-witness")
        # radially shrinking sequence along the family's first admissible direction
        for j in range(1, spec.length + 1):
            t = 2.0 ** -j
            x = xdag + (t * r) * dirs[0]
            if _in_domain(F, x):
                samples.append((distance(_image(F, x), Fx), distance(x, xdag)))

    for name, res in results.items():
        if res.verdict == "ill-posed":
            return ProbeReport("local_posedness", res.rows, "ill-posed",
                               witness=f"{name}: {res.note}", families=results)

    if not samples:
        return ProbeReport("local_posedness", [], "inconclusive", families=results)
    eps = np.array(sorted({s[0] for s in samples}))
    pts = np.array(samples)
    modulus = [(i, float(ei), float(pts[pts[:, 0] <= ei, 1].max())) for i, ei in enumerate(eps, 1)]
    m_lo, m_hi = modulus[0][2], modulus[-1][2]
    verdict = "well-posed" if m_lo <= spec.witness_tol * m_hi else "inconclusive"
    results["modulus"] = FamilyResult("modulus", modulus, verdict)
    return ProbeReport("local_posedness", modulus, verdict, families=results)
