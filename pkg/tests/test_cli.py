import json
import xml.etree.ElementTree as ET

import pytest
from click.testing import CliRunner

from qwalks.src import cli as cli_module
from qwalks.src.cli import cli
from qwalks.src.constants import Suite
from qwalks.src.errors import DomainError, ValidationFailure
from qwalks.src.suites import Check, ValidationSuite


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(cli, ["--options", "missing-options.json", *args], catch_exceptions=False)


def test_validate_single_suite(runner, tmp_path):
    result = invoke(runner, "validate", Suite.STOCHASTICITY, "--out", str(tmp_path))
    assert result.exit_code == 0, result.output
    report = json.loads((tmp_path / "validation.json").read_text())
    assert report["reports"][0]["passed"]


class Failing(ValidationSuite):
    name = Suite.STOCHASTICITY

    def run_subclass(self) -> list[Check]:
        return [Check("always", 1.0, 0.0)]


def test_validate_failure_exit_code(runner, tmp_path, monkeypatch):
    monkeypatch.setitem(cli_module.SUITES, Suite.STOCHASTICITY, Failing)
    result = invoke(runner, "validate", Suite.STOCHASTICITY, "--out", str(tmp_path))
    assert result.exit_code == ValidationFailure.exit_code


def test_simulate_packs_walks(runner, tmp_path):
    result = invoke(runner, "simulate", "--x", "7,6,3,1", "--q", "0.5", "--seed", "1", "--out", str(tmp_path))
    assert result.exit_code == 0, result.output
    document = json.loads((tmp_path / "trajectory_00000.json").read_text())
    assert document["states"][-1] == [3, 2, 1, 0]
    header = (tmp_path / "trajectory_00000.csv").read_text().splitlines()[0]
    assert header == "t,i,y"


def test_simulate_is_reproducible(runner, tmp_path):
    outputs = []
    for name in ("first", "second"):
        out = tmp_path / name
        result = invoke(runner, "simulate", "--x", "1", "--q", "0.5", "--seeds", "200", "--seed", "9", "--out", str(out))
        assert result.exit_code == 0, result.output
        outputs.append(out)
    for filename in ("summary.json", "absorption_times.csv", "trajectory_00000.json"):
        assert (outputs[0] / filename).read_bytes() == (outputs[1] / filename).read_bytes()
    summary = json.loads((outputs[0] / "summary.json").read_text())
    assert summary["count"] == 200
    assert set(summary["quantiles"]) == {"0.05", "0.25", "0.5", "0.75", "0.95"}


def test_simulate_from_config_file(runner, tmp_path):
    config = tmp_path / "run.toml"
    config.write_text('x = [4, 2, 1]\nq = 0.6\nseeds = 3\n')
    result = invoke(runner, "simulate", "--config", str(config), "--q", "0.7", "--out", str(tmp_path))
    assert result.exit_code == 0, result.output
    document = json.loads((tmp_path / "trajectory_00000.json").read_text())
    assert document["q"] == 0.7
    assert json.loads((tmp_path / "summary.json").read_text())["count"] == 3


def test_conflicting_q_is_a_domain_error(runner, tmp_path):
    result = invoke(runner, "simulate", "--x", "3,1", "--q", "0.5", "--gamma", "1", "--m", "2", "--out", str(tmp_path))
    assert result.exit_code == DomainError.exit_code


def test_kernel_entries(runner, tmp_path):
    result = invoke(
        runner, "kernel", "--x", "3,1", "--q", "0.5", "--method", "residues",
        "--point", "2,1", "--point", "1,2", "--out", str(tmp_path),
    )
    assert result.exit_code == 0, result.output
    document = json.loads((tmp_path / "kernel.json").read_text())
    assert len(document["entries"]) == 4
    assert 0.0 <= document["correlation"] <= 1.0
    assert all(0.0 <= entry["est_error"] < 1e-8 for entry in document["entries"])


def test_kernel_errors_are_estimated_with_quadrature(runner, tmp_path):
    result = invoke(
        runner, "kernel", "--x", "3,1", "--q", "0.5", "--tol", "1e-8",
        "--point", "2,1", "--point", "0,2", "--out", str(tmp_path),
    )
    assert result.exit_code == 0, result.output
    entries = json.loads((tmp_path / "kernel.json").read_text())["entries"]
    assert all(0.0 <= entry["est_error"] < 1e-7 for entry in entries)
    assert any(entry["est_error"] != 1e-8 for entry in entries)


def test_kernel_out_of_domain(runner, tmp_path):
    result = invoke(runner, "kernel", "--x", "3,1", "--q", "0.5", "--point", "1,0", "--point", "2,1", "--out", str(tmp_path))
    assert result.exit_code == DomainError.exit_code
    assert not (tmp_path / "kernel.json").exists()


def test_tilings_document(runner, tmp_path):
    result = invoke(runner, "tilings", "--lambda", "2,1,0", "--q", "0.7", "--out", str(tmp_path))
    assert result.exit_code == 0, result.output
    document = json.loads((tmp_path / "tilings.json").read_text())
    assert len(document["tilings"]) == 8
    assert sum(tiling["prob"] for tiling in document["tilings"]) == pytest.approx(1.0, abs=1e-10)


def test_boundary_outputs(runner, tmp_path):
    result = invoke(
        runner, "boundary", "--a", "0,1", "--C", "0.5", "--gamma", "1",
        "--tau-max", "2", "--resolution", "6", "--out", str(tmp_path),
    )
    assert result.exit_code == 0, result.output
    root = ET.parse(tmp_path / "boundary.svg").getroot()
    layers = {element.get("id") for element in root.iter() if element.get("id")}
    assert {"frozen-boundary", "bounding-polygon", "liquid"} <= layers
    assert (tmp_path / "boundary.csv").read_text().startswith("w,tau,rho\n")
    assert (tmp_path / "liquid_scan.csv").read_text().startswith("tau,rho,in_liquid,re_wc,im_wc,re_omega,im_omega\n")


def test_options_written_with_environment_overrides(runner, tmp_path, monkeypatch):
    monkeypatch.setenv("QWALKS_ENUMERATION_CAP", "16")
    path = tmp_path / "nested" / "options.json"
    result = invoke(runner, "options", "--out", str(path))
    assert result.exit_code == 0, result.output
    saved = json.loads(path.read_text())
    assert saved["enumeration_cap"] == 16
    assert saved["qpoch_tol"] == 1e-15


def test_enumeration_cap_comes_from_options(runner, tmp_path):
    options_path = tmp_path / "options.json"
    options_path.write_text(json.dumps({"enumeration_cap": 2}))
    args = ["--options", str(options_path), "simulate", "--x", "3,1", "--q", "0.5", "--sampler", "enumeration", "--out", str(tmp_path)]
    result = runner.invoke(cli, args, catch_exceptions=False)
    assert result.exit_code == DomainError.exit_code
