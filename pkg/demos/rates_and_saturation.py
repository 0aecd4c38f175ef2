"""Best possible error rates for Tikhonov and Lavrentiev regularization.

Fits the exponent kappa in ``P(delta) ~ delta**kappa`` for each method and
source smoothness, and writes a log-log plot next to this script.
"""
from pathlib import Path

import numpy as np

from posedness.hilbert import make_uniform_grid
from posedness.linear import harmonic_sigmas, make_diagonal, make_volterra
from posedness.rates import default_deltas, saturation_experiment
from posedness.reporting import loglog_svg, write_atomic


def main():
    deltas = default_deltas()
    cases = {
        "tikhonov": make_diagonal(harmonic_sigmas(200)),
        "lavrentiev": make_volterra(make_uniform_grid(200)),
    }
    curves = []
    print(f"{'method':<11} {'source':<12} {'kappa':>7} {'r2':>7}  verdict")
    for method, A in cases.items():
        rep = saturation_experiment(A, method, deltas)
        for name, s in rep.series.items():
            if rep.verdicts[name] == "degenerate_zero":
                print(f"{method:<11} {name:<12} {'-':>7} {'-':>7}  degenerate_zero "
                      f"(max error {s.errors.max():.1e})")
                continue
            print(f"{method:<11} {name:<12} {s.kappa:7.3f} {s.r2:7.4f}  {rep.verdicts[name]}")
            curves.append((f"{method} {name}", s.deltas, s.errors))
        print(f"{'':<11} cap {rep.cap:.3f} + {rep.cap_tol}")
    # a well-posed operator is not capped
    rep = saturation_experiment(make_diagonal(np.linspace(1, 0.5, 200)), "tikhonov", deltas)
    s = rep.series["supersmooth"]
    print(f"{'well-posed':<11} {'supersmooth':<12} {s.kappa:7.3f} {s.r2:7.4f}  {rep.verdicts['supersmooth']}")
    out = Path(__file__).with_name("rates.svg")
    write_atomic(out, loglog_svg(curves, "sampled worst-case best possible error"))
    print(f"plot: {out}")


if __name__ == "__main__":
    main()
