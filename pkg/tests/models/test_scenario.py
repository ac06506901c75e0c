from pathlib import Path

import numpy as np
import pytest

from fracsource.core.exceptions import HypothesisViolation, ScenarioParseError
from fracsource.core.models.enum import Experiment, ProfileKind, SolveMethod
from fracsource.core.models.scenario import (
    Profile,
    Scenario,
    build_problem,
    check_hypotheses,
    dump_scenario,
    load_scenario,
    parse_scenario,
    scenario_hash,
)

INVERT_H_YAML = """\
experiment: invert-h
mesh:
  n: 24
order:
  alpha: 0.5
source:
  mu: {kind: bump, support: [0.0, 0.5]}
  h: {kind: bump, support: [0.1, 0.4]}
  T0: 0.5
observation:
  omega: [0.8, 1.0]
  T: 1.0
"""


def small(experiment: Experiment, **updates) -> Scenario:
    return Scenario.default(experiment).derive(mesh={"n": [24]}, solver={"dt": 0.01}, **updates)


def test_parse_shorthands():
    scenario = parse_scenario(INVERT_H_YAML)
    assert scenario.experiment == Experiment.INVERT_H
    assert scenario.mesh.n == [24]
    assert scenario.observation.omega == [(0.8, 1.0)]
    assert scenario.source.mu[0].kind == ProfileKind.BUMP
    assert scenario.coefficients.c[0].value == 1.0
    assert scenario.solver.method == SolveMethod.CONTOUR


def test_experiment_override():
    scenario = parse_scenario(INVERT_H_YAML, experiment=Experiment.FORWARD)
    assert scenario.experiment == Experiment.FORWARD


def test_constant_shorthand():
    scenario = parse_scenario(INVERT_H_YAML + "coefficients:\n  c: 2\n")
    assert scenario.coefficients.c == [Profile(kind=ProfileKind.CONSTANT, value=2.0)]


def test_unknown_key_position():
    text = INVERT_H_YAML.replace("  alpha: 0.5\n", "  alpha: 0.5\n  beta: 1\n")
    with pytest.raises(ScenarioParseError) as e:
        parse_scenario(text, "scenario.yaml")
    assert e.value.line == 6
    assert "order.beta" in str(e.value)


def test_yaml_syntax_error():
    with pytest.raises(ScenarioParseError) as e:
        parse_scenario("order: [1, 2\n")
    assert e.value.line is not None


def test_scenario_must_be_mapping():
    with pytest.raises(ScenarioParseError) as e:
        parse_scenario("- 1\n- 2\n")
    assert (e.value.line, e.value.column) == (1, 1)


def test_missing_file(tmp_path: Path):
    with pytest.raises(ScenarioParseError):
        load_scenario(tmp_path / "missing.yaml")


@pytest.mark.parametrize(
    "old, new, condition",
    [
        ("  alpha: 0.5\n", "  alpha: 2.5\n", "order-regime"),
        ("  T: 1.0\n", "  T: 1.0\n  t1: 1.0\n", "window"),
        ("  T: 1.0\n", "  T: 0.4\n", "window"),
    ],
)
def test_schema_hypotheses(old, new, condition):
    with pytest.raises(HypothesisViolation) as e:
        parse_scenario(INVERT_H_YAML.replace(old, new))
    assert e.value.condition == condition


def test_simultaneous_window_must_start_before_onset():
    with pytest.raises(HypothesisViolation) as e:
        small(Experiment.INVERT_MU_H, observation={"t1": 0.6})
    assert e.value.condition == "c2a"


def test_exactly_one_order():
    with pytest.raises(ValueError):
        small(Experiment.FORWARD, order={"partition": [{"region": [0.0, 1.0], "alpha": 0.5}]})


@pytest.mark.parametrize(
    "experiment, updates, condition",
    [
        (Experiment.INVERT_H, {"source": {"h": [{"kind": "bump", "support": [[0.7, 0.95]]}]}}, "h-omega"),
        (Experiment.INVERT_MU_H, {"source": {"h": [{"kind": "bump", "support": [[0.7, 0.95]]}]}}, "c2aa"),
        (Experiment.INVERT_H, {"source": {"mu": [{"kind": "bump", "support": [[0.6, 0.9]]}]}}, "t1b"),
        (Experiment.INVERT_H, {"order": {"alpha": 1.0}, "observation": {"t1": 0.25}}, "tt2aa"),
        (Experiment.INVERT_H, {"coefficients": {"rho": 2.0}}, "order-regime"),
    ],
)
def test_experiment_hypotheses(experiment, updates, condition):
    problem = build_problem(small(experiment, **updates))
    with pytest.raises(HypothesisViolation) as e:
        check_hypotheses(problem)
    assert e.value.condition == condition


def test_hypothesis_log():
    log = check_hypotheses(build_problem(small(Experiment.INVERT_H)))
    assert any(entry.startswith("t1b") for entry in log)
    assert any(entry.startswith("h-omega") for entry in log)


def test_derive_merges_sections():
    base = small(Experiment.FORWARD)
    derived = base.derive(solver={"method": "spectral"})
    assert derived.solver.method == SolveMethod.SPECTRAL
    assert derived.solver.dt == 0.01
    assert base.solver.method == SolveMethod.CONTOUR


def test_dump_is_canonical():
    scenario = parse_scenario(INVERT_H_YAML)
    assert parse_scenario(dump_scenario(scenario)) == scenario
    assert scenario_hash(scenario) == scenario_hash(parse_scenario(dump_scenario(scenario)))
    assert scenario_hash(scenario) != scenario_hash(scenario.derive(seed=1))


def test_build_problem(scenario):
    problem = build_problem(scenario)
    assert problem.op.n == 24
    assert problem.grid.size == 201
    assert problem.mu.T0 == 0.5
    assert not np.any(problem.h[problem.omega_mask])
    assert np.any(problem.h)


def test_profiles():
    x = np.linspace(0.0, 1.0, 5)
    np.testing.assert_allclose(Profile(kind="affine", value=1.0, slope=[2.0]).evaluate(x), 1 + 2 * x)
    np.testing.assert_allclose(Profile(kind="indicator", support=[(0.25, 0.5)]).evaluate(x), [0, 1, 1, 0, 0])
    sine = Profile(kind="sine", value=2.0, support=[(0.0, 0.5)]).evaluate(x)
    np.testing.assert_allclose(sine, [0.0, 2 * np.sin(np.pi / 4), 2.0, 0.0, 0.0], atol=1e-15)
    with pytest.raises(ValueError):
        Profile(kind="bump")
