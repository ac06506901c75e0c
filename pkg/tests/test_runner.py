from pathlib import Path
from typing import Any, Callable, Iterator

import numpy as np
import pytest

from fracsource.core.exceptions import HypothesisViolation, ResolventError, ScenarioParseError
from fracsource.core.models.config import Config
from fracsource.core.models.enum import Experiment, SolveMethod
from fracsource.core.models.scenario import Scenario, build_problem
from fracsource.core.numerics.inverse import support_infimum
from fracsource.core.runner import CriticalRunnerException, Runner, forward_field, run_experiment
from fracsource.suites.titchmarsh import TitchmarshSuite, TitchmarshSuiteSettings
from fracsource.suites.weak_solution import WeakSolutionSuite, WeakSolutionSuiteSettings


@pytest.fixture
def configure() -> Iterator[Callable[..., None]]:
    def apply(**options: Any) -> None:
        Config.set_config(Config(quiet=True, **options))

    yield apply
    Config.set_config(Config(quiet=True))


def test_forward_artifacts(scenario: Scenario, tmp_path: Path):
    result, outputs = run_experiment(scenario, out_dir=tmp_path)
    assert result.passed
    assert result.experiment == Experiment.FORWARD
    assert set(outputs) == {"field", "report"}
    assert all(path.exists() for path in outputs.values())
    assert any(entry.startswith("ellipticity") for entry in result.hypotheses)


def test_forward_methods_agree(scenario: Scenario):
    spectral = forward_field(build_problem(scenario.derive(solver={"method": "spectral"})))
    contour = forward_field(build_problem(scenario))
    assert np.abs(spectral.values - contour.values).max() <= 1e-6 * np.abs(spectral.values).max()


def test_forward_l1(scenario: Scenario):
    result, _ = run_experiment(scenario.derive(solver={"method": SolveMethod.L1.value}))
    assert result.passed


def test_forward_wave_energy(scenario: Scenario):
    result, _ = run_experiment(scenario.derive(order={"alpha": 2.0}, solver={"method": "spectral"}))
    names = [check.name for check in result.checks]
    assert "energy_drift" in names
    assert result.passed


@pytest.mark.parametrize(
    "error, code",
    [
        (HypothesisViolation("vo", "orders"), 2),
        (ScenarioParseError("scenario.yaml", "bad"), 2),
        (ValueError("bad"), 2),
        (ResolventError(1j, 1e20), 3),
        (ZeroDivisionError(), 3),
        (CriticalRunnerException("no scenario"), 1),
        (RuntimeError("other"), 1),
    ],
)
def test_exit_codes(configure, error: BaseException, code: int):
    configure()
    assert Runner("forward", experiment=Experiment.FORWARD)._exit_code(error) == code


def test_runner_needs_scenario(configure, tmp_path: Path):
    configure(out_dir=tmp_path)
    assert Runner("forward", experiment=Experiment.FORWARD).run() == 1
    assert (tmp_path / "manifest.json").exists()


def test_runner_experiment(configure, scenario_file: Path, tmp_path: Path):
    configure(scenario_path=scenario_file, out_dir=tmp_path)
    runner = Runner("experiment")
    assert runner.run() == 0
    assert runner.manifest.exit_code == 0
    assert runner.manifest.validation_log


def test_runner_rejects_experiment_and_suite():
    with pytest.raises(ValueError):
        Runner("verify", experiment=Experiment.FORWARD, suite="titchmarsh")


def test_titchmarsh_random_pairs():
    suite = TitchmarshSuite(TitchmarshSuiteSettings(n_trials=20, seed=3))
    reports = suite.random_pairs()
    assert len(reports) == 20
    assert all(report.consistent and not report.anomaly for report in reports)
    assert max(report.gap for report in reports if report.gap is not None) <= 2e-3


def test_titchmarsh_random_pairs_threshold():
    suite = TitchmarshSuite(TitchmarshSuiteSettings(n_trials=5, seed=3))
    reports = suite.random_pairs(threshold_rel=1e-4)
    assert len(reports) == 5
    assert all(report.threshold_rel == 1e-4 for report in reports)


@pytest.mark.slow
def test_invert_h_uses_support_threshold():
    scenario = Scenario.default(Experiment.INVERT_H).derive(
        mesh={"n": [24]}, solver={"dt": 0.01, "support_threshold": 1e-4}
    )
    result, _ = run_experiment(scenario)
    report = result.report
    assert report.support_threshold == 1e-4
    assert report.support["mu"] == support_infimum(build_problem(scenario).mu, 1e-4)
    assert {"t1b", "rank_positive", "h_vanishes_on_omega"} <= {check.name for check in result.checks}


@pytest.mark.slow
def test_invert_mu_h_reports_supports():
    scenario = Scenario.default(Experiment.INVERT_MU_H).derive(mesh={"n": [24]}, solver={"dt": 0.01})
    result, _ = run_experiment(scenario)
    report = result.report
    assert set(report.support) == {"mu", "data", "mu_recovered"}
    assert report.support_threshold == scenario.solver.support_threshold
    assert set(report.flags) == {"c2a", "c2aa", "rank_positive", "data_after_source"}
    checks = {check.name: check for check in result.checks}
    assert all(checks[name].passed == value for name, value in report.flags.items())


def test_mollified_sources_converge(scenario: Scenario):
    suite = WeakSolutionSuite(WeakSolutionSuiteSettings(t_end=4.0))
    checks, details = suite.mollification_checks(suite.problem(scenario), threads=1)
    by_name = {check.name: check for check in checks}
    assert by_name["mollification_monotone"].passed
    terminal = by_name["mollification_terminal_gap"]
    assert terminal.threshold == 1e-4
    assert terminal.passed and terminal.value == details["mollification_gaps"][-1]


@pytest.mark.slow
@pytest.mark.parametrize("suite", ["titchmarsh", "weak-solution", "operators"])
def test_run_suite(configure, scenario_file: Path, suite: str):
    configure(scenario_path=scenario_file)
    assert Runner(f"verify --suite {suite}", suite=suite).run() == 0
