import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from posedness.errors import NonSquareOperatorError, SolverBreakdownError
from posedness.hilbert import GridFunction, make_uniform_grid, norm, sequence_grid
from posedness.linear import (
    LinearOp,
    adjoint,
    compute_svd,
    harmonic_sigmas,
    make_diagonal,
    make_identity,
    make_volterra,
    pseudoinverse_norm,
)
from posedness.regularization import (
    AlphaGrid,
    NoiseSpec,
    SourceSpec,
    add_noise,
    best_possible_error,
    default_noise,
    lavrentiev_solve,
    make_source,
    random_directions,
    run_to_csv,
    singular_directions,
    tikhonov_solve,
    worst_case_error,
)

G = make_uniform_grid(200)


def rand(grid, seed):
    return GridFunction(grid, np.random.default_rng(seed).standard_normal(grid.n))


def test_tikhonov_examples():
    g = sequence_grid(20)
    I = make_identity(g)
    y = rand(g, 0)
    np.testing.assert_allclose(tikhonov_solve(I, y, 0.3).values, y.values / 1.3, rtol=1e-14)
    V = make_volterra(G)
    yv = rand(G, 1)
    x = tikhonov_solve(V, yv, 1e12)
    assert norm(x) <= norm(adjoint(V)(yv)) / 1e12
    D = make_diagonal([1.0, 0.5])
    np.testing.assert_allclose(tikhonov_solve(D, GridFunction(D.range_grid, [1, 1]), 1.0).values, [0.5, 0.4],
                               rtol=1e-14)


def test_lavrentiev_examples():
    g = sequence_grid(20)
    y = rand(g, 0)
    np.testing.assert_allclose(lavrentiev_solve(make_identity(g), y, 0.3).values, y.values / 1.3, rtol=1e-14)
    V = make_volterra(G)
    one = GridFunction.ones(G)
    y = V(one)
    errs = [norm(lavrentiev_solve(V, y, a) - one) for a in (1e-2, 1e-4, 1e-6)]
    assert errs[0] > errs[1] > errs[2] and errs[2] <= 1e-2
    Z = LinearOp(np.zeros((5, 5)), sequence_grid(5), sequence_grid(5))
    y5 = rand(sequence_grid(5), 3)
    np.testing.assert_allclose(lavrentiev_solve(Z, y5, 0.25).values, y5.values / 0.25, rtol=1e-14)


def test_solver_errors():
    A = LinearOp(np.ones((3, 4)), sequence_grid(4), sequence_grid(3))
    with pytest.raises(NonSquareOperatorError):
        lavrentiev_solve(A, GridFunction.ones(sequence_grid(3)), 0.1)
    with pytest.raises(ValueError):
        tikhonov_solve(make_identity(sequence_grid(3)), GridFunction.ones(sequence_grid(3)), 0.0)
    bad = LinearOp(np.full((3, 3), np.nan), sequence_grid(3), sequence_grid(3))
    with pytest.raises(SolverBreakdownError) as info:
        tikhonov_solve(bad, GridFunction.ones(sequence_grid(3)), 1.0)
    assert hasattr(info.value, "condition")
    # A + alpha I = 0 exactly
    neg = make_diagonal([-1.0, -1.0, -1.0])
    with pytest.raises(SolverBreakdownError):
        lavrentiev_solve(neg, GridFunction.ones(neg.domain_grid), 1.0, check_accretive=False)


def test_lavrentiev_warns_when_not_accretive():
    A = make_diagonal([1.0, -1.0, 0.5])
    with pytest.warns(RuntimeWarning, match="not accretive"):
        lavrentiev_solve(A, GridFunction.ones(A.domain_grid), 0.1)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        lavrentiev_solve(make_volterra(G), GridFunction.ones(G), 0.1)


def test_filter_factor_identity():
    s = harmonic_sigmas(50)
    D = make_diagonal(s)
    y = rand(D.range_grid, 2)
    for a in (1e-6, 1e-2, 1.0):
        x = tikhonov_solve(D, y, a)
        assert np.max(np.abs(x.values - s / (s * s + a) * y.values)) <= 1e-10


@pytest.mark.parametrize("method", ["tikhonov", "lavrentiev"])
def test_solvers_linear_in_data(method):
    solve = tikhonov_solve if method == "tikhonov" else lavrentiev_solve
    V = make_volterra(G)
    for seed in range(3):
        y1, y2 = rand(G, seed), rand(G, seed + 10)
        lhs = solve(V, 2 * y1 - 3 * y2, 1e-3).values
        rhs = (2 * solve(V, y1, 1e-3) - 3 * solve(V, y2, 1e-3)).values
        assert np.max(np.abs(lhs - rhs)) <= 1e-10 * max(1.0, np.abs(rhs).max())


def test_tikhonov_norm_nonincreasing_in_alpha():
    s = harmonic_sigmas(100)
    y = rand(sequence_grid(100), 4)
    alphas = AlphaGrid().values()
    norms = [np.linalg.norm(s / (s * s + a) * y.values) for a in alphas]
    assert np.all(np.diff(norms) <= 0)
    D = make_diagonal(s)
    sol = [norm(tikhonov_solve(D, y, a)) for a in alphas]
    np.testing.assert_allclose(sol, norms, rtol=1e-10)


def test_add_noise():
    g = sequence_grid(30)
    y = rand(g, 0)
    dirs, labels = random_directions(g, 3, seed=1)
    spec = NoiseSpec(0.0, dirs, labels)
    assert add_noise(y, spec, 0).values.tolist() == y.values.tolist()
    spec = NoiseSpec(1e-3, dirs, labels)
    for i in range(3):
        assert abs(norm(add_noise(y, spec, i) - y) - 1e-3) <= 1e-12
    with pytest.raises(IndexError):
        add_noise(y, spec, 3)
    f = compute_svd(make_diagonal(harmonic_sigmas(30)))
    d, lab = singular_directions(f, [1])
    assert lab[0] == "sv:1" and lab[1] == "-sv:1"
    with pytest.raises(ValueError):
        NoiseSpec(0.1, [2 * dirs[0]])


def test_best_possible_error_examples():
    A = make_diagonal(np.linspace(1, 0.5, 50))
    x = rand(A.domain_grid, 1)
    assert best_possible_error(A, x, A(x)).best_error <= 1e-6
    D = make_diagonal(harmonic_sigmas(200))
    zero = GridFunction.zeros(D.domain_grid)
    e = default_noise(D, 1.0).directions[0]
    run = best_possible_error(D, zero, 1e-3 * e, delta=1e-3)
    assert run.best_error <= 1e-10
    assert run.best_error == run.errors.min()


@pytest.mark.parametrize("seed", range(3))
def test_best_possible_error_scalar_oracle(seed):
    g = sequence_grid(10)
    I = make_identity(g)
    y = rand(g, seed)
    e = rand(g, seed + 50)
    e = e / norm(e)
    yd = y + 0.1 * e
    run = best_possible_error(I, y, yd, method="tikhonov")

    def err(loga):
        return norm(yd / (1 + math.exp(loga)) - y)

    ref = minimize_scalar(err, bounds=(-30, 10), method="bounded", options={"xatol": 1e-10}).fun
    ref = min(ref, err(-60))
    assert run.best_error == pytest.approx(ref, rel=1e-2)
    assert run.best_error == run.errors.min()


def test_worst_case_examples():
    D = make_diagonal(harmonic_sigmas(100))
    x = make_source(D, SourceSpec("smooth_AstarA"))
    spec = default_noise(D, 1e-4)
    one = NoiseSpec(1e-4, spec.directions[:1], spec.labels[:1])
    run1 = worst_case_error(D, x, one)
    bpe = best_possible_error(D, x, add_noise(D(x), one, 0))
    assert run1.best_error == pytest.approx(bpe.best_error, rel=1e-12)
    prev = 0.0
    for k in range(1, len(spec.directions) + 1, 7):
        sub = NoiseSpec(1e-4, spec.directions[:k], spec.labels[:k])
        val = worst_case_error(D, x, sub).best_error
        assert val >= prev
        prev = val
    full = worst_case_error(D, x, spec)
    assert full.direction in spec.labels


def _win_rate(D, indices, delta, trials=20):
    f = compute_svd(D)
    sv, lab = singular_directions(f, indices, signed=False)
    wins = 0
    for seed in range(trials):
        x = make_source(D, SourceSpec("smooth_AstarA", seed=seed))
        rd, rl = random_directions(D.range_grid, len(sv), seed=seed)
        a = worst_case_error(D, x, NoiseSpec(delta, sv, lab)).best_error
        b = worst_case_error(D, x, NoiseSpec(delta, rd, rl)).best_error
        wins += a >= b
    return wins / trials


def test_singular_directions_beat_random():
    # the leading singular vectors are adversarial while the filter peak
    # sigma ~ sqrt(alpha_opt) lies among them (delta = 1e-3 at dim 100)
    D = make_diagonal(harmonic_sigmas(100))
    assert _win_rate(D, range(1, 11), 1e-3) >= 0.9


def test_adversarial_index_follows_filter_peak():
    # at smaller delta the peak moves to higher indices and the leading ten lose
    D = make_diagonal(harmonic_sigmas(100))
    assert _win_rate(D, range(1, 11), 1e-5) < 0.5
    assert _win_rate(D, range(20, 101, 8), 1e-5) >= 0.9


def test_well_posed_rate_bound_per_direction():
    A = make_diagonal(np.linspace(1, 0.5, 100))
    bound = pseudoinverse_norm(compute_svd(A))
    x = rand(A.domain_grid, 9)
    spec = default_noise(A, 1e-3)
    for i in range(len(spec.directions)):
        run = best_possible_error(A, x, add_noise(A(x), spec, i))
        assert run.best_error <= bound * 1e-3 * (1 + 1e-6)


def test_sources_reproducible():
    D = make_diagonal(harmonic_sigmas(50))
    for kind in ("smooth_AstarA", "supersmooth", "range_A", "range_A2"):
        a, b = make_source(D, SourceSpec(kind, seed=4)), make_source(D, SourceSpec(kind, seed=4))
        assert np.array_equal(a.values, b.values) and norm(a) > 0
    assert norm(make_source(D, SourceSpec("zero"))) == 0.0
    with pytest.raises(ValueError):
        SourceSpec("custom")


def test_alpha_grid_validation():
    assert AlphaGrid().values().size == 60
    with pytest.raises(ValueError):
        AlphaGrid(1.0, 0.5)
    with pytest.raises(ValueError):
        AlphaGrid(count=9)


def test_run_csv():
    D = make_diagonal(harmonic_sigmas(20))
    x = make_source(D, SourceSpec("smooth_AstarA"))
    run = worst_case_error(D, x, default_noise(D, 1e-3))
    text = run_to_csv([run])
    lines = text.splitlines()
    assert lines[0] == "method,delta,direction,alpha,error,best"
    assert sum(line.endswith(",1") for line in lines[1:]) == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1000), st.sampled_from(["tikhonov", "lavrentiev"]), st.floats(1e-6, 1e-1))
def test_best_error_is_minimum_of_candidates(seed, method, delta):
    A = make_volterra(make_uniform_grid(40)) if method == "lavrentiev" else make_diagonal(harmonic_sigmas(40))
    x = rand(A.domain_grid, seed)
    e = rand(A.range_grid, seed + 1)
    run = best_possible_error(A, x, A(x) + (delta / norm(e)) * e, method=method, delta=delta)
    assert run.best_error == run.errors.min()
    assert run.best_error <= norm(x)
