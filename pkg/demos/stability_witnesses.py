"""Stable solvability and local well-posedness on small nonlinear examples."""
import math

from posedness.hilbert import GridFunction, make_uniform_grid
from posedness.nonlinear import QuadraticTwo, ScalarRational, WeightedIdentity, scalar
from posedness.stability import probe_local_posedness, probe_stable_solvability, qdist


def rational_blow_up():
    F = ScalarRational()
    P0 = F.preimage(scalar(0.0))
    print("x^2/(1+x^4): distance from the preimage of y to the preimage of 0")
    for n in range(2, 8):
        y = 10.0 ** -n
        d = qdist(F.preimage(scalar(y)), P0)
        print(f"  y=1e-{n}  qdist={d:11.4f}  qdist*sqrt(y)={d * math.sqrt(y):.6f}")
    print("  verdict:", probe_stable_solvability(F, scalar(0.0)).verdict)


def weighted_identity():
    g = make_uniform_grid(200)
    F = WeightedIdentity(g)
    N = F.preimage(GridFunction.zeros(g))
    print("weighted identity: y_n = ones/n approaching 0")
    for n in (1, 4, 16, 64):
        yn = GridFunction.ones(g) / n
        print(f"  n={n:<3} qdist={qdist(F.preimage(yn), N):.6f}  sqrt(psi)={math.sqrt(F.psi(yn)):.6f}")
    print("  verdict:", probe_stable_solvability(F, GridFunction.zeros(g)).verdict)


def quadratic_two():
    Q = QuadraticTwo(200)
    print("quadratic_two with sigma_k = 1/k")
    for k in (1, 2):
        loc = probe_local_posedness(Q, Q.u(k))
        stab = probe_stable_solvability(Q, Q(Q.u(k)))
        print(f"  at u{k}: local {loc.verdict:<11} stability {stab.verdict:<9} {loc.witness or ''}")


if __name__ == "__main__":
    rational_blow_up()
    weighted_identity()
    quadratic_two()
