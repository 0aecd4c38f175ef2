"""Numerical experiments on well-posedness, stability of solution sets and
regularization rates for linear and quadratic operator equations."""

from .errors import *  # noqa: F403
from .hilbert import (
    Grid,
    GridFunction,
    distance,
    embed,
    inner,
    integral,
    make_uniform_grid,
    norm,
    restrict,
    sequence_grid,
)
from .linear import (
    LinearOp,
    NashedReport,
    SvdFactors,
    accretivity_check,
    adjoint,
    apply,
    compose,
    compute_svd,
    harmonic_sigmas,
    linear_preimage,
    make_damped_shift,
    make_diagonal,
    make_identity,
    make_partial_isometry,
    make_volterra,
    nashed_classify,
    operator_norm,
    pseudoinverse_apply,
    pseudoinverse_norm,
)
from .nonlinear import (
    Autoconvolution,
    QuadraticTwo,
    ScalarRational,
    WeightedIdentity,
    bilinear_bound,
    bilinear_eval,
    evaluate,
    make_operator,
    preimage,
    scalar,
)
from .rates import RateSeries, SaturationReport, fit_rate_exponent, run_rate_experiment, saturation_experiment
from .regularization import (
    AlphaGrid,
    NoiseSpec,
    RegularizedRun,
    SourceSpec,
    add_noise,
    best_possible_error,
    default_noise,
    lavrentiev_solve,
    make_source,
    tikhonov_solve,
    worst_case_error,
)
from .sets import AffineSubspace, PreimageSet
from .stability import ProbeReport, SequenceSpec, probe_local_posedness, probe_stable_solvability, qdist

__version__ = "0.1.0"
