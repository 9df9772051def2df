import json
from pathlib import Path

import numpy as np
import pytest

from src.config import DEFAULT_OUT, DEFAULT_SEED
from src.errors import ConfigError
from src.experiment import (
    SUBCOMMANDS,
    build_config,
    config_from_manifest,
    options_for,
    parse_grid,
    parse_u0,
    read_config_file,
)


def _yaml(tmp_path, text):
    path = tmp_path / "lab.yaml"
    path.write_text(text, encoding="utf-8")
    return path


def test_defaults():
    cfg = build_config("eigen")
    assert cfg.seed == DEFAULT_SEED
    assert cfg.out == Path(DEFAULT_OUT)
    assert cfg["bc"] == "dirichlet"
    assert cfg["modes"] == 16
    assert cfg.get("missing", "fallback") == "fallback"


def test_flags_are_parsed_from_strings():
    cfg = build_config("solve", {"dt": "0.001953125", "reps": "12", "archive": "no", "seed": "7"})
    assert cfg["dt"] == 0.001953125
    assert cfg["reps"] == 12
    assert cfg["archive"] is False
    assert cfg.seed == 7


def test_precedence_defaults_file_flags(tmp_path):
    path = _yaml(tmp_path, "common:\n  seed: 5\neigen:\n  modes: 4\n  bc: neumann\nkernel:\n  t: 0.2\n")
    cfg = build_config("eigen", {"modes": "6"}, path)
    assert cfg.seed == 5
    assert cfg["bc"] == "neumann"
    assert cfg["modes"] == 6


def test_config_file_accepts_dashed_keys(tmp_path):
    path = _yaml(tmp_path, "eigen:\n  negative-modes: include\n")
    assert read_config_file(path, "eigen") == {"negative_modes": "include"}


def test_config_file_values_keep_yaml_types(tmp_path):
    path = _yaml(tmp_path, "moments:\n  k-list: [1, 2, 4]\n  bounded: no\n  t-grid: \"0:1:17\"\n")
    values = read_config_file(path, "moments")
    assert values == {"k_list": (1.0, 2.0, 4.0), "bounded": False, "t_grid": "0:1:17"}
    assert read_config_file(_yaml(tmp_path, ""), "moments") == {}


@pytest.mark.parametrize("text, message", [
    ("- 1\n- 2\n", "top level"),
    ("plotting:\n  color: red\n", "unknown section"),
    ("eigen: 3\n", "must map option names"),
    ("eigen:\n  colour: red\n", "unknown key"),
    ("kernel:\n  t: soon\n", "cannot parse"),
    ("eigen: [unclosed\n", "lab.yaml"),
])
def test_config_file_errors(tmp_path, text, message):
    with pytest.raises(ConfigError, match=message):
        build_config("eigen", config_file=_yaml(tmp_path, text))


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        build_config("eigen", config_file=tmp_path / "absent.yaml")


@pytest.mark.parametrize("subcommand, overrides", [
    ("eigen", {"bc": "periodic"}),
    ("eigen", {"modes": "0"}),
    ("eigen", {"modes": "many"}),
    ("eigen", {"colour": "red"}),
    ("cov", {}),
    ("kpz", {"u0": "zero"}),
    ("solve", {"sigma": "quadratic"}),
    ("solve", {"u0": "wave"}),
    ("modulus", {"rect": "0,1,0"}),
    ("modulus", {"normalizer": "sqrt"}),
    ("acceptance", {"criteria": "1,x"}),
    ("rerun", {}),
])
def test_invalid_options(subcommand, overrides):
    with pytest.raises(ConfigError):
        build_config(subcommand, overrides)


def test_unknown_subcommand():
    with pytest.raises(ConfigError):
        options_for("plot")


def test_every_subcommand_builds_with_defaults():
    for name in SUBCOMMANDS:
        if name in ("cov", "rerun"):
            continue
        assert build_config(name).subcommand == name


def test_grids():
    np.testing.assert_allclose(parse_grid("0:1:5"), [0, 0.25, 0.5, 0.75, 1])
    np.testing.assert_allclose(parse_grid("0.1, 0.2,0.4"), [0.1, 0.2, 0.4])
    for bad in ("1,0", "0:1", "a:b:c", ""):
        with pytest.raises(ConfigError):
            parse_grid(bad)


def test_initial_data(tmp_path):
    assert parse_u0("bump")(np.array([0.5]))[0] == pytest.approx(1.0)
    np.testing.assert_array_equal(parse_u0("const:2")(np.zeros(3)), 2.0)
    np.testing.assert_array_equal(parse_u0("zero")(np.ones(2)), 0.0)
    table = tmp_path / "u0.csv"
    table.write_text("x,u0\n0,0\n1,2\n", encoding="utf-8")
    assert parse_u0(f"table:{table}")(np.array([0.25]))[0] == pytest.approx(0.5)
    with pytest.raises(ConfigError):
        parse_u0("const:high")


def test_manifest_replay(tmp_path):
    cfg = build_config("modulus", {"kind": "uniform", "rungs": "2", "out": str(tmp_path / "first")})
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps({"config": cfg.echo()}), encoding="utf-8")
    again = config_from_manifest(path)
    assert again.options == cfg.options
    assert again.seed == cfg.seed
    assert again.out == cfg.out
    assert config_from_manifest(path, out=tmp_path / "second").out == tmp_path / "second"


def test_manifest_replay_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        config_from_manifest(tmp_path / "manifest.json")
    path = tmp_path / "manifest.json"
    path.write_text("{}", encoding="utf-8")
    with pytest.raises(ConfigError, match="lacks"):
        config_from_manifest(path)
