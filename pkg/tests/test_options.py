import math

import pytest

from qwalks.src.constants import Method
from qwalks.src.errors import ConfigError
from qwalks.src.options import GridWindow, Options, RunConfig, load_options, read_config_file


def test_defaults_without_options_file(tmp_path):
    options = load_options(str(tmp_path / "missing.json"))
    assert options.tol == 1e-9
    assert options.kernel_method == Method.QUADRATURE


def test_options_round_trip(tmp_path):
    path = tmp_path / "options.json"
    Options(tol=1e-7, threads=3).save(str(path))
    loaded = load_options(str(path))
    assert loaded.tol == 1e-7 and loaded.threads == 3


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("QWALKS_TOL", "1e-6")
    monkeypatch.setenv("QWALKS_KERNEL_METHOD", "residues")
    options = Options()
    assert options.tol == 1e-6
    assert options.kernel_method == Method.RESIDUES


def test_options_reject_bad_values():
    with pytest.raises(ValueError):
        Options(tol=0.0)
    with pytest.raises(ValueError):
        Options(kernel_method="simpson")


def test_q_from_gamma_and_m():
    config = RunConfig.build(gamma=2.0, m=50)
    assert config.resolved_q == pytest.approx(math.exp(-2.0 / 50))
    assert RunConfig.build(q=0.3).resolved_q == 0.3


@pytest.mark.parametrize(
    "values",
    [
        {"q": 0.5, "gamma": 1.0, "m": 3},
        {"q": 1.2},
        {"tol": -1.0},
        {"x": [1, 3]},
        {"lam": [1, 2]},
        {"window": {"tau_min": 2.0, "tau_max": 1.0}},
    ],
)
def test_invalid_run_configs(values):
    with pytest.raises(ConfigError):
        RunConfig.build(**values)


def test_missing_q():
    with pytest.raises(ConfigError):
        _ = RunConfig.build(m=3).resolved_q


def test_config_file(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('q = 0.6\nx = [5, 3, 0]\nout = "results"\n\n[window]\nresolution = 7\n')
    values = read_config_file(str(path))
    assert values["x"] == [5, 3, 0]
    config = RunConfig.build(**values)
    assert config.window == GridWindow(resolution=7)
    assert str(config.out) == "results"


def test_config_file_errors(tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text("q = = 1\n")
    with pytest.raises(ConfigError):
        read_config_file(str(path))
    with pytest.raises(ConfigError):
        read_config_file(str(tmp_path / "absent.toml"))
