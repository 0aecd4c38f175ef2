"""Fixed-radius perturbations of x = 1 under real autoconvolution.

Sine modes leave an image gap that does not vanish as the frequency grows,
because the quadratic term ``z * z`` keeps its size. Bumps concentrated at
the right end of the interval do shrink the image gap.
"""
import math

import numpy as np

from posedness.hilbert import GridFunction, make_uniform_grid, norm
from posedness.nonlinear import Autoconvolution
from posedness.stability import SequenceSpec, probe_local_posedness


def sine_gap(C, x, n, r):
    z = GridFunction.from_callable(C.domain_grid, lambda t: math.sqrt(2) * np.sin(2 * np.pi * n * t))
    return norm(C(x + r * z) - C(x))


def main(r=0.5):
    print("sine image gap ratio (n=64 over n=4) as the grid is refined")
    for N in (200, 400, 1000, 2000):
        C = Autoconvolution(make_uniform_grid(N))
        x = GridFunction.ones(C.domain_grid)
        print(f"  N={N:<5} {sine_gap(C, x, 64, r) / sine_gap(C, x, 4, r):.3f}")
    C = Autoconvolution(make_uniform_grid(200))
    x = GridFunction.ones(C.domain_grid)
    rep = probe_local_posedness(C, x, SequenceSpec(family="end-bump", radius=r))
    print("end-bump family (n, image gap, preimage gap)")
    for n, e, p in rep.rows:
        print(f"  {n:<3} {e:.3e} {p:.3f}")
    print("verdict:", rep.verdict, "|", rep.witness)


if __name__ == "__main__":
    main()
