"""Command-line front end: ``posedness <experiment> --config FILE``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import yaml

from . import config as cfgmod
from .config import ExperimentConfig
from .errors import ConfigError, UnderflowError
from .hilbert import GridFunction, make_uniform_grid, sequence_grid
from .linear import (
    LinearOp,
    compute_svd,
    default_cutoff,
    harmonic_sigmas,
    linear_preimage,
    make_damped_shift,
    make_diagonal,
    make_identity,
    make_partial_isometry,
    make_volterra,
    nashed_classify,
)
from .nonlinear import Autoconvolution, make_operator
from .rates import (
    SOURCE_FOR,
    default_deltas,
    run_rate_experiment,
    saturation_experiment,
    series_summary,
    series_to_csv,
)
from .regularization import AlphaGrid, SourceSpec, default_noise
from .reporting import error_record, fmt, loglog_svg, probe_to_csv, verdict_text, write_atomic
from .sets import preimage_metadata, preimage_to_csv
from .stability import SequenceSpec, probe_local_posedness, probe_stable_solvability, qdist

# building blocks ------------------------------------------------------------


def sigma_values(cfg: ExperimentConfig) -> np.ndarray:
    if cfg.sigmas == "harmonic":
        return harmonic_sigmas(cfg.n)
    if cfg.sigmas == "wellposed":
        return np.linspace(1.0, 0.5, cfg.n)
    return np.asarray(cfg.sigmas, float)


def build_operator(cfg: ExperimentConfig):
    kind = cfg.operator
    if kind == "volterra":
        return make_volterra(make_uniform_grid(cfg.n))
    if kind == "diagonal":
        return make_diagonal(sigma_values(cfg))
    if kind == "damped_shift":
        return make_damped_shift(sigma_values(cfg), cfg.n)
    if kind == "partial_isometry":
        return make_partial_isometry(cfg.n)
    if kind == "identity":
        return make_identity(sequence_grid(cfg.n))
    if kind == "quadratic_two":
        return make_operator(kind, cfg.n, sigmas=sigma_values(cfg))
    return make_operator(kind, cfg.n)


def _grids(F):
    return F.domain_grid, F.range_grid


def resolve_element(name: str, grid, F=None, point=None) -> GridFunction:
    """Element named in the config grammar (see ExperimentConfig)."""
    if name == "zero":
        return GridFunction.zeros(grid)
    if name == "ones":
        return GridFunction.ones(grid)
    if name == "image":
        if F is None or point is None:
            raise ConfigError("'image' is only valid for data keys", "data")
        return F(point)
    kind, _, arg = name.partition(":")
    try:
        if kind == "e":
            k = int(arg)
            if not 1 <= k <= grid.n:
                raise ConfigError(f"basis index {k} outside 1..{grid.n}")
            return GridFunction.basis(grid, k)
        if kind == "value":
            return float(arg) * GridFunction.ones(grid)
    except ValueError as exc:
        raise ConfigError(f"cannot read element {name!r}") from exc
    raise ConfigError(f"unknown element {name!r}; use zero, ones, e:k, value:c or image")


def preimage_of(F, y: GridFunction, xdag=None):
    if isinstance(F, LinearOp):
        f = compute_svd(F)
        return linear_preimage(F, y, f, default_cutoff(f))
    if isinstance(F, Autoconvolution):
        return F.preimage(y, xdag=xdag)
    return F.preimage(y)


def _sequence_spec(cfg):
    return SequenceSpec(cfg.family, cfg.seq_length, cfg.radius, cfg.seed, cfg.stable_tol, cfg.witness_tol)


def _require_linear(F, cfg):
    if not isinstance(F, LinearOp):
        raise ConfigError(f"experiment {cfg.experiment!r} needs a linear operator", "operator")


# experiments -----------------------------------------------------------------


def run_classify(cfg, F, out: Path):
    _require_linear(F, cfg)
    f = compute_svd(F)
    rep = nashed_classify(f)
    rows = ["k,sigma"] + [f"{k},{fmt(s)}" for k, s in enumerate(f.singular_values, 1)]
    write_atomic(out / "singular_values.csv", "\n".join(rows) + "\n")
    write_atomic(out / "verdict.txt", verdict_text(
        classification=rep.classification, numerical_rank=rep.numerical_rank,
        decay_exponent=fmt(rep.decay_exponent), r2=fmt(rep.r2), plateau=rep.plateau,
        cutoff=fmt(rep.cutoff_used), note=rep.note or "finite-dimensional proxy"))
    return rep.classification


def run_qdist(cfg, F, out: Path):
    dom, rng = _grids(F)
    x = resolve_element(cfg.point, dom)
    ya = resolve_element(cfg.data, rng, F, x)
    yb = resolve_element(cfg.data2, rng, F, x)
    Pa, Pb = preimage_of(F, ya, x), preimage_of(F, yb, x)
    forward, backward = qdist(Pa, Pb), qdist(Pb, Pa)
    write_atomic(out / "qdist.csv", "source,target,qdist,reverse_qdist\n"
                 f"{cfg.data},{cfg.data2},{fmt(forward)},{fmt(backward)}\n")
    for tag, P in (("source", Pa), ("target", Pb)):
        write_atomic(out / f"preimage_{tag}.csv", preimage_to_csv(P))
        write_atomic(out / f"preimage_{tag}.json", preimage_metadata(P))
    return fmt(forward)


def run_probe_stability(cfg, F, out: Path):
    dom, rng = _grids(F)
    x = resolve_element(cfg.point, dom)
    y = resolve_element(cfg.data, rng, F, x)
    rep = probe_stable_solvability(F, y, _sequence_spec(cfg), xdag=x)
    write_atomic(out / "probe.csv", probe_to_csv(rep))
    write_atomic(out / "verdict.txt", verdict_text(verdict=rep.verdict, witness=rep.witness or "none",
                                                   note=rep.note))
    return rep.verdict


def run_probe_local(cfg, F, out: Path):
    x = resolve_element(cfg.point, F.domain_grid)
    rep = probe_local_posedness(F, x, _sequence_spec(cfg))
    write_atomic(out / "probe.csv", probe_to_csv(rep))
    write_atomic(out / "verdict.txt", verdict_text(verdict=rep.verdict, witness=rep.witness or "none",
                                                   note=rep.note))
    return rep.verdict


def _rate_inputs(cfg, A):
    f = compute_svd(A)
    deltas = default_deltas(cfg.delta_min, cfg.delta_max, cfg.delta_count)
    noise = default_noise(A, 1.0, cfg.seed, cfg.noise_singular, cfg.noise_random, f)
    grid = AlphaGrid(cfg.alpha_min, cfg.alpha_max, cfg.alpha_count)
    return f, deltas, noise, grid


def run_rates(cfg, A, out: Path):
    _require_linear(A, cfg)
    f, deltas, noise, grid = _rate_inputs(cfg, A)
    kind = "zero" if cfg.source == "zero" else SOURCE_FOR[cfg.method][cfg.source]
    try:
        s = run_rate_experiment(A, SourceSpec(kind, seed=cfg.seed), deltas, noise, grid, cfg.method, f)
        verdict = f"kappa {s.kappa:.6f}"
    except UnderflowError as exc:
        s, verdict = exc.series, "degenerate_zero"
    write_atomic(out / "rates.csv", series_to_csv(s))
    write_atomic(out / "rates_summary.csv", series_summary(s))
    write_atomic(out / "verdict.txt", verdict_text(
        result=verdict, window=f"[{fmt(s.window[0])}, {fmt(s.window[1])}]",
        note="worst case over sampled noise directions (sampled lower bound)"))
    if cfg.svg:
        write_atomic(out / "rates.svg", loglog_svg([(f"{cfg.method} {kind}", s.deltas, s.errors)],
                                                   title=f"best possible error, {cfg.operator}"))
    return verdict


def run_saturation(cfg, A, out: Path):
    _require_linear(A, cfg)
    _, deltas, noise, grid = _rate_inputs(cfg, A)
    rep = saturation_experiment(A, cfg.method, deltas, noise, grid, cfg.seed, cfg.cap_tol)
    summary = ["source,verdict,kappa,r2,cap,cap_tol"]
    for name, s in rep.series.items():
        write_atomic(out / f"saturation_{name}.csv", series_to_csv(s))
        summary.append(f"{name},{rep.verdicts[name]},{fmt(s.kappa)},{fmt(s.r2)},{fmt(rep.cap)},{fmt(rep.cap_tol)}")
    write_atomic(out / "saturation_summary.csv", "\n".join(summary) + "\n")
    lo, hi = float(deltas.min()), float(deltas.max())
    write_atomic(out / "verdict.txt", verdict_text(
        verdict=rep.verdict, **{f"verdict_{k}": v for k, v in rep.verdicts.items()},
        window=f"[{fmt(lo)}, {fmt(hi)}]",
        note="finite noise window; worst case over sampled noise directions (sampled lower bound)"))
    if cfg.svg:
        curves = [(name, s.deltas, s.errors) for name, s in rep.series.items() if name != "zero"]
        write_atomic(out / "saturation.svg", loglog_svg(curves, title=f"saturation, {cfg.method}"))
    return rep.verdict


RUNNERS = {
    "classify": run_classify,
    "qdist": run_qdist,
    "probe-stability": run_probe_stability,
    "probe-local": run_probe_local,
    "rates": run_rates,
    "saturation": run_saturation,
}


def run(cfg: ExperimentConfig, out=None) -> str:
    """Run one experiment and write its artifacts; returns the headline result."""
    out = Path(out if out is not None else cfg.output_dir)
    F = build_operator(cfg)
    result = RUNNERS[cfg.experiment](cfg, F, out)
    write_atomic(out / "config.yaml", cfgmod.serialize_config(cfg))
    return result


# argument handling -------------------------------------------------------------


def _parse_set(items):
    raw = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        raw[key.strip()] = yaml.safe_load(value)
    return raw


def build_config(args) -> ExperimentConfig:
    raw, lines = {}, {}
    if args.config:
        text = Path(args.config).read_text(encoding="utf-8")
        try:
            loaded = yaml.safe_load(text)
        except yaml.YAMLError:
            cfgmod.parse_config(text)  # raises with line information
            raise
        if loaded is not None and not isinstance(loaded, dict):
            raise ConfigError("config must be a key-value mapping", line=1)
        raw = dict(loaded or {})
        lines = cfgmod.key_lines(text)
    if raw.get("experiment", args.experiment) != args.experiment:
        raise ConfigError(f"config is for {raw['experiment']!r}, not {args.experiment!r}", "experiment",
                          lines.get("experiment"))
    raw["experiment"] = args.experiment
    raw.update(_parse_set(args.set))
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.svg:
        raw["svg"] = True
    if args.out is not None:
        raw["output_dir"] = args.out
    return cfgmod.from_mapping(raw, lines)


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML experiment configuration")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides output_dir)")
    common.add_argument("--seed", type=int, help="seed (overrides the config)")
    common.add_argument("--svg", action="store_true", help="also write log-log SVG plots")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    p = argparse.ArgumentParser(prog="posedness", description="Well-posedness and regularization experiments.")
    sub = p.add_subparsers(dest="experiment", required=True)
    for name in cfgmod.EXPERIMENTS:
        sub.add_parser(name, parents=[common])
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    out = Path(args.out or "results")
    try:
        cfg = build_config(args)
        out = Path(cfg.output_dir)
        result = run(cfg)
    except Exception as exc:  # any failure becomes an error record
        try:
            write_atomic(out / "error.json", error_record(exc))
        except OSError:
            pass
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(f"{cfg.experiment}: {result} -> {out}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
