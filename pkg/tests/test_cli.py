import json
from pathlib import Path

import pytest
from typer.testing import CliRunner

from fracsource.main import app, load_commands
from fracsource.utils.version import get_version

runner = CliRunner(mix_stderr=False)
load_commands()


@pytest.mark.parametrize("command", ["forward", "invert-h", "invert-mu-h", "experiment", "verify"])
def test_help(command: str):
    result = runner.invoke(app, [command, "--help"])
    try:
        assert result.exit_code == 0
        assert "--scenario" in result.stdout
    except AssertionError as e:
        raise e from result.exception


def test_version():
    result = runner.invoke(app, ["version"])
    assert result.exit_code == 0
    assert result.stdout.strip() == get_version()


def test_ml_eval():
    # `--` keeps click from reading the negative argument as an option
    result = runner.invoke(app, ["ml-eval", "1", "1", "--", "-1"])
    try:
        assert result.exit_code == 0
        assert "0.36787944117" in result.stdout
        assert "regime: series" in result.stdout
    except AssertionError as e:
        raise e from result.exception


@pytest.mark.parametrize("args", [["0.5", "1", "abc"], ["3", "1", "1"], ["0.5", "0", "1"]])
def test_ml_eval_rejects_parameters(args: list[str]):
    assert runner.invoke(app, ["ml-eval", *args]).exit_code == 2


@pytest.mark.parametrize("format", ["json", "yaml", "table"])
def test_forward(scenario_file: Path, tmp_path: Path, format: str):
    out = tmp_path / "out"
    result = runner.invoke(app, ["forward", "--scenario", str(scenario_file), "-o", str(out), "-q", "-f", format])
    try:
        assert result.exit_code == 0, result.stdout
    except AssertionError as e:
        raise e from result.exception

    assert (out / "field.csv").read_text().startswith("t,x=")
    report = json.loads((out / "report.json").read_text())
    assert report["passed"] is True
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["exit_code"] == 0
    assert manifest["scenario_hash"] == report["scenario_hash"]
    assert set(manifest["outputs"]) == {"field", "report"}


def test_forward_json_output(scenario_file: Path):
    result = runner.invoke(app, ["forward", "--scenario", str(scenario_file), "-q", "-f", "json"])
    assert result.exit_code == 0
    assert '"passed": true' in result.stdout


def test_seed_override(scenario_file: Path, tmp_path: Path):
    result = runner.invoke(app, ["forward", "--scenario", str(scenario_file), "-o", str(tmp_path), "-q", "--seed", "7"])
    assert result.exit_code == 0
    assert json.loads((tmp_path / "manifest.json").read_text())["seed"] == 7


def test_hypothesis_violation(scenario_file: Path, tmp_path: Path):
    scenario_file.write_text(scenario_file.read_text().replace("alpha: 0.5", "alpha: 2.5"))
    result = runner.invoke(app, ["forward", "--scenario", str(scenario_file), "-o", str(tmp_path), "-q"])
    assert result.exit_code == 2
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["errors"][0]["type"] == "HypothesisViolation"
    assert not (tmp_path / "report.json").exists()


def test_missing_scenario(tmp_path: Path):
    result = runner.invoke(app, ["forward", "--scenario", str(tmp_path / "missing.yaml"), "-q"])
    assert result.exit_code == 2


def test_unknown_formatter(scenario_file: Path):
    result = runner.invoke(app, ["forward", "--scenario", str(scenario_file), "-q", "-f", "csv"])
    assert result.exit_code == 2


def test_unknown_suite():
    result = runner.invoke(app, ["verify", "--suite", "nonexistent", "-q"])
    assert result.exit_code == 2


@pytest.mark.slow
def test_invert_h(scenario_file: Path, tmp_path: Path):
    result = runner.invoke(app, ["invert-h", "--scenario", str(scenario_file), "-o", str(tmp_path), "-q"])
    try:
        assert result.exit_code == 0, result.stdout
    except AssertionError as e:
        raise e from result.exception
    assert (tmp_path / "h.csv").exists()
    assert (tmp_path / "singular_values.csv").exists()
