import json
import xml.etree.ElementTree as ET

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from posedness import config as cfgmod
from posedness.cli import main
from posedness.config import ExperimentConfig, parse_config, serialize_config
from posedness.errors import ConfigError

SMALL = ["--set", "n=40", "--set", "delta_count=6", "--set", "delta_min=1e-5", "--set", "alpha_count=20"]


# configuration --------------------------------------------------------------


def test_minimal_config_materializes_defaults():
    cfg = parse_config("operator: volterra\nexperiment: rates\nmethod: lavrentiev\n")
    assert (cfg.n, cfg.delta_count, cfg.seed) == (200, 16, 0)
    text = serialize_config(cfg)
    for key in ("seed", "cap_tol", "alpha_min", "stable_tol", "witness_tol"):
        assert f"{key}:" in text


def test_out_of_range():
    with pytest.raises(ConfigError, match="out-of-range") as info:
        parse_config("operator: volterra\nexperiment: rates\nalpha_min: -1\n")
    assert info.value.key == "alpha_min" and info.value.line == 3
    with pytest.raises(ConfigError, match="out-of-range"):
        parse_config("operator: volterra\nexperiment: rates\ndelta_count: 2\n")


def test_unknown_key_and_parse_error_lines():
    with pytest.raises(ConfigError, match="unknown key") as info:
        parse_config("operator: volterra\nexperiment: rates\n\nalpah: 1\n")
    assert info.value.key == "alpah" and info.value.line == 4
    with pytest.raises(ConfigError, match="parse error") as info:
        parse_config("operator: volterra\nexperiment: [rates\nn: 3\n")
    assert info.value.line is not None
    with pytest.raises(ConfigError, match="missing required key"):
        parse_config("operator: volterra\n")
    with pytest.raises(ConfigError):
        parse_config("operator: volterra\nexperiment: rates\nn: true\n")


positive = st.floats(1e-9, 1e3, allow_nan=False)
configs = st.builds(
    ExperimentConfig,
    experiment=st.sampled_from(cfgmod.EXPERIMENTS),
    operator=st.sampled_from(cfgmod.OPERATORS),
    method=st.sampled_from(cfgmod.METHODS),
    n=st.integers(5, 500),
    sigmas=st.one_of(st.sampled_from(cfgmod.SIGMA_PRESETS),
                     st.lists(st.floats(0, 10, allow_nan=False), min_size=1, max_size=6)),
    seed=st.integers(0, 2 ** 31),
    source=st.sampled_from(cfgmod.SOURCES),
    delta_min=st.floats(1e-12, 1e-6),
    delta_max=st.floats(1e-5, 1.0),
    delta_count=st.integers(4, 40),
    alpha_min=st.floats(1e-14, 1e-6),
    alpha_max=st.floats(1e-5, 1e6),
    cap_tol=positive,
    point=st.sampled_from(["ones", "zero", "e:1", "e:2", "value:0.5"]),
    family=st.one_of(st.none(), st.sampled_from(["basis-ladder", "end-bump"])),
    radius=positive,
    svg=st.booleans(),
)


@settings(max_examples=80, deadline=None)
@given(configs)
def test_round_trip(cfg):
    cfg = cfgmod.validate(cfg)
    assert parse_config(serialize_config(cfg)) == cfg


# command line --------------------------------------------------------------


def test_saturation_manifest_and_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["saturation", "--set", "operator=diagonal", *SMALL, "--svg"]
    assert main([*args, "--out", str(a)]) == 0
    assert main([*args, "--out", str(b)]) == 0
    names = {p.name for p in a.iterdir()}
    assert {"saturation_smooth.csv", "saturation_supersmooth.csv", "saturation_zero.csv", "verdict.txt"} <= names
    for p in a.glob("*.csv"):
        assert p.read_bytes() == (b / p.name).read_bytes()
        assert p.read_text().splitlines()[0].count(",") >= 1
    assert (a / "saturation_smooth.csv").read_text().startswith("delta,error,direction,alpha\n")
    root = ET.fromstring((a / "saturation.svg").read_text())
    assert root.tag.endswith("svg") and root.get("version") == "1.1"


def test_probe_local_quadratic_two_u1(tmp_path):
    out = tmp_path / "q"
    assert main(["probe-local", "--set", "operator=quadratic_two", "--set", "point=e:1", "--out", str(out)]) == 0
    assert "ill-posed" in (out / "verdict.txt").read_text()
    assert (out / "probe.csv").exists() and (out / "config.yaml").exists()


def test_rates_outputs(tmp_path):
    out = tmp_path / "r"
    assert main(["rates", "--set", "operator=diagonal", *SMALL, "--seed", "5", "--out", str(out)]) == 0
    assert (out / "rates.csv").read_text().startswith("delta,error,direction,alpha\n")
    assert (out / "rates_summary.csv").read_text().startswith("kappa,r2")
    assert parse_config((out / "config.yaml").read_text()).seed == 5


def test_classify_output(tmp_path):
    out = tmp_path / "c"
    assert main(["classify", "--set", "operator=diagonal", "--set", "n=50", "--out", str(out)]) == 0
    assert "ill_posed_type_II" in (out / "verdict.txt").read_text()


def test_failure_writes_error_record(tmp_path):
    out = tmp_path / "e"
    assert main(["rates", "--set", "operator=volterra", "--set", "alpha_min=-1", "--out", str(out)]) == 1
    rec = json.loads((out / "error.json").read_text())
    assert rec["error"] == "ConfigError" and rec["key"] == "alpha_min"
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("operator: volterra\nunknown: 1\n")
    assert main(["rates", "--config", str(cfg), "--out", str(out)]) == 1
    rec = json.loads((out / "error.json").read_text())
    assert rec["key"] == "unknown" and rec["line"] == 2
