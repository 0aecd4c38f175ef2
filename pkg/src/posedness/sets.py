"""Solution sets: finite point sets optionally augmented by an affine subspace."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import GridMismatchError
from .hilbert import FLOAT_FMT, Grid, GridFunction, distance


class AffineSubspace:
    """The set ``offset + span(basis)``.

    ``basis`` holds grid-function values column-wise and must be
    orthonormal in the weighted inner product of ``offset.grid``.
    An empty basis (zero columns) describes the single point ``offset``.
    """

    def __init__(self, offset: GridFunction, basis: np.ndarray, label: str = ""):
        basis = np.asarray(basis)
        if basis.ndim != 2 or basis.shape[0] != offset.grid.n:
            raise GridMismatchError(
                f"basis shape {basis.shape} does not match grid of size {offset.grid.n}"
            )
        self.offset = offset
        self.basis = basis
        self.label = label

    @property
    def grid(self) -> Grid:
        return self.offset.grid

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def _coeffs(self, vals: np.ndarray) -> np.ndarray:
        return self.grid.h * (self.basis.conj().T @ vals)

    def project(self, x: GridFunction) -> GridFunction:
        r = x.values - self.offset.values
        return GridFunction(self.grid, self.offset.values + self.basis @ self._coeffs(r))

    def distance(self, x: GridFunction) -> float:
        """Exact distance by orthogonal projection."""
        if x.grid != self.grid:
            raise GridMismatchError(f"{x.grid} vs {self.grid}")
        r = x.values - self.offset.values
        resid = r - self.basis @ self._coeffs(r)
        return math.sqrt(self.grid.h) * float(np.linalg.norm(resid))

    def contains_directions(self, other: "AffineSubspace", tol: float = 1e-10) -> bool:
        """True when every direction of ``other`` lies in this subspace's span."""
        if other.dim == 0:
            return True
        coeffs = self._coeffs(other.basis)
        resid = other.basis - self.basis @ coeffs
        col_norms = math.sqrt(self.grid.h) * np.linalg.norm(resid, axis=0)
        return float(col_norms.max()) <= tol

    def sample(self, k: int = 16, seed: int = 0, scale: float = 1.0) -> list[GridFunction]:
        """Deterministic representatives ``offset + scale * sum c_i b_i``."""
        rng = np.random.default_rng(seed)
        out = []
        for _ in range(k):
            if self.dim == 0:
                out.append(self.offset)
                continue
            c = rng.standard_normal(self.dim)
            c *= scale / np.linalg.norm(c)
            out.append(GridFunction(self.grid, self.offset.values + self.basis @ c))
        return out


@dataclass
class PreimageBranch:
    """One solution branch ``v + w`` of the two-block quadratic example."""

    a: float
    b: float
    v: GridFunction
    w: GridFunction
    index: int
    singular: bool = False

    @property
    def point(self) -> GridFunction:
        return self.v + self.w


@dataclass
class PreimageSet:
    """Finite list of points, plus an optional affine subspace of solutions."""

    points: list = field(default_factory=list)
    subspace: Optional[AffineSubspace] = None
    branches: list = field(default_factory=list)
    residual: float = 0.0
    note: str = ""

    @property
    def is_empty(self) -> bool:
        return not self.points and self.subspace is None

    def __len__(self):
        return len(self.points)

    def representatives(self, k: int = 16, seed: int = 0) -> list[GridFunction]:
        pts = list(self.points)
        if self.subspace is not None:
            pts.extend(self.subspace.sample(k, seed))
        return pts

    def scale(self) -> float:
        """Size of the set used to normalize stability tolerances."""
        norms = [float(np.sqrt(p.grid.h) * np.linalg.norm(p.values)) for p in self.points]
        if self.subspace is not None:
            off = self.subspace.offset
            norms.append(float(np.sqrt(off.grid.h) * np.linalg.norm(off.values)))
        return max(norms, default=0.0)

    def distance_to(self, x: GridFunction) -> float:
        """``inf_{v in self} ||x - v||``."""
        best = math.inf
        for p in self.points:
            best = min(best, distance(x, p))
        if self.subspace is not None:
            best = min(best, self.subspace.distance(x))
        return best


def preimage_to_csv(s: PreimageSet) -> str:
    """One block of rows per point: ``point,node,re[,im]``."""
    pts = s.points
    cplx = any(p.is_complex for p in pts)
    lines = ["point,node,re,im" if cplx else "point,node,re"]
    for i, p in enumerate(pts):
        for t, z in zip(p.grid.nodes, p.values):
            row = [str(i), FLOAT_FMT.format(t), FLOAT_FMT.format(z.real)]
            if cplx:
                row.append(FLOAT_FMT.format(np.imag(z)))
            lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def preimage_metadata(s: PreimageSet) -> str:
    meta = {
        "n_points": len(s.points),
        "branches": [
            {"index": br.index, "a": br.a, "b": br.b, "singular": br.singular}
            for br in s.branches
        ],
        "subspace": None
        if s.subspace is None
        else {"dim": s.subspace.dim, "label": s.subspace.label},
        "residual": s.residual,
        "note": s.note,
    }
    return json.dumps(meta, indent=2, sort_keys=True) + "\n"
