"""Experiment configuration: a flat YAML mapping with every default materialized."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Optional, Union

import yaml

from .errors import ConfigError

EXPERIMENTS = ("classify", "qdist", "probe-stability", "probe-local", "rates", "saturation")
LINEAR_OPERATORS = ("volterra", "diagonal", "damped_shift", "partial_isometry", "identity")
NONLINEAR_OPERATORS = ("scalar_rational", "weighted_identity", "quadratic_two", "autoconv_real", "autoconv_complex")
OPERATORS = LINEAR_OPERATORS + NONLINEAR_OPERATORS
METHODS = ("tikhonov", "lavrentiev")
SOURCES = ("smooth", "supersmooth", "zero")
SIGMA_PRESETS = ("harmonic", "wellposed")


@dataclass
class ExperimentConfig:
    """All knobs of one experiment run.

    ``sigmas`` is a preset name (``harmonic``: ``1/k``; ``wellposed``:
    linearly from 1 down to 0.5) or an explicit list. ``point`` names an
    element of the solution space (``zero``, ``ones``, ``e:k`` for the
    k-th unit basis element, ``value:c`` for the constant ``c``);
    ``data`` and ``data2`` name elements of the data space in the same
    grammar, where ``image`` means ``F(point)``.
    """

    experiment: str
    operator: str
    method: str = "tikhonov"
    n: int = 200
    sigmas: Union[str, list] = "harmonic"
    seed: int = 0
    source: str = "smooth"
    delta_min: float = 1e-7
    delta_max: float = 1e-2
    delta_count: int = 16
    alpha_min: float = 1e-12
    alpha_max: float = 1e4
    alpha_count: int = 60
    noise_singular: int = 24
    noise_random: int = 8
    cap_tol: float = 0.08
    point: str = "ones"
    data: str = "image"
    data2: str = "zero"
    family: Optional[str] = None
    seq_length: int = 12
    radius: float = 0.5
    stable_tol: float = 1e-3
    witness_tol: float = 0.1
    output_dir: str = "results"
    svg: bool = False


FIELD_TYPES = {
    "experiment": str, "operator": str, "method": str, "n": int, "seed": int, "source": str,
    "delta_min": float, "delta_max": float, "delta_count": int, "alpha_min": float, "alpha_max": float,
    "alpha_count": int, "noise_singular": int, "noise_random": int, "cap_tol": float, "point": str,
    "data": str, "data2": str, "family": (str, type(None)), "seq_length": int, "radius": float,
    "stable_tol": float, "witness_tol": float, "output_dir": str, "svg": bool,
}
POSITIVE = ("delta_min", "delta_max", "alpha_min", "alpha_max", "cap_tol", "radius", "stable_tol", "witness_tol")
MINIMUM = {"n": 1, "delta_count": 4, "alpha_count": 10, "noise_singular": 0, "noise_random": 0,
           "seq_length": 4, "seed": 0}
CHOICES = {"experiment": EXPERIMENTS, "operator": OPERATORS, "method": METHODS, "source": SOURCES}


def key_lines(text: str) -> dict:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return {}
    if not isinstance(node, yaml.MappingNode):
        return {}
    return {k.value: k.start_mark.line + 1 for k, _ in node.value}


def _coerce(key, value, line):
    want = FIELD_TYPES[key]
    if want is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if want is float and isinstance(value, str):
        # PyYAML reads "1e-7" (no dot) as a string
        try:
            return float(value)
        except ValueError:
            pass
    ok = isinstance(value, want) and not (want in (int, float) and isinstance(value, bool))
    if not ok:
        raise ConfigError(f"expected {getattr(want, '__name__', 'string or null')}, got {value!r}", key, line)
    return value


def validate(cfg: ExperimentConfig, lines: Optional[dict] = None) -> ExperimentConfig:
    lines = lines or {}
    for key, choices in CHOICES.items():
        if getattr(cfg, key) not in choices:
            raise ConfigError(f"value {getattr(cfg, key)!r} not one of {choices}", key, lines.get(key))
    for key in POSITIVE:
        if not getattr(cfg, key) > 0:
            raise ConfigError(f"out-of-range value {getattr(cfg, key)!r}: must be positive", key, lines.get(key))
    for key, lo in MINIMUM.items():
        if getattr(cfg, key) < lo:
            raise ConfigError(f"out-of-range value {getattr(cfg, key)!r}: must be at least {lo}", key,
                              lines.get(key))
    if cfg.alpha_min >= cfg.alpha_max:
        raise ConfigError("out-of-range value: alpha_min must be below alpha_max", "alpha_min", lines.get("alpha_min"))
    if cfg.delta_min >= cfg.delta_max:
        raise ConfigError("out-of-range value: delta_min must be below delta_max", "delta_min", lines.get("delta_min"))
    if isinstance(cfg.sigmas, str):
        if cfg.sigmas not in SIGMA_PRESETS:
            raise ConfigError(f"sigmas must be one of {SIGMA_PRESETS} or a list", "sigmas", lines.get("sigmas"))
    elif isinstance(cfg.sigmas, list):
        if not cfg.sigmas or not all(isinstance(s, (int, float)) and not isinstance(s, bool) and s >= 0
                                     for s in cfg.sigmas):
            raise ConfigError("sigmas list must hold nonnegative numbers", "sigmas", lines.get("sigmas"))
        cfg.sigmas = [float(s) for s in cfg.sigmas]
    else:
        raise ConfigError(f"sigmas must be a preset name or a list, got {cfg.sigmas!r}", "sigmas", lines.get("sigmas"))
    if cfg.operator == "damped_shift" and cfg.n < 5:
        raise ConfigError("damped_shift needs n >= 5", "n", lines.get("n"))
    return cfg


def from_mapping(raw: dict, lines: Optional[dict] = None) -> ExperimentConfig:
    lines = lines or {}
    names = {f.name for f in fields(ExperimentConfig)}
    for key in raw:
        if key not in names:
            raise ConfigError("unknown key", key, lines.get(key))
    for key in ("experiment", "operator"):
        if key not in raw:
            raise ConfigError("missing required key", key)
    values = {k: _coerce(k, v, lines.get(k)) if k in FIELD_TYPES else v for k, v in raw.items()}
    return validate(ExperimentConfig(**values), lines)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a YAML mapping; unspecified keys take their defaults."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"parse error: {getattr(exc, 'problem', exc)}",
                          line=None if mark is None else mark.line + 1) from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a key-value mapping", line=1)
    return from_mapping(raw, key_lines(text))


def serialize_config(cfg: ExperimentConfig) -> str:
    """Block-style YAML with keys in field order; ``parse_config`` inverts it."""
    return yaml.safe_dump(asdict(cfg), sort_keys=False, default_flow_style=None)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
