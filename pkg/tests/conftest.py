from pathlib import Path

import numpy as np
import pytest

from fracsource.core.models.config import Config
from fracsource.core.models.enum import BoundaryCondition, Experiment
from fracsource.core.models.scenario import Scenario, dump_scenario
from fracsource.core.numerics.grid_elliptic import CoefficientSet, DiscreteOperator, SpatialMesh, assemble_operator


@pytest.fixture(autouse=True, scope="session")
def quiet_config():
    Config.set_config(Config(quiet=True))
    yield


@pytest.fixture
def mesh() -> SpatialMesh:
    return SpatialMesh.uniform([(0.0, 1.0)], 48)


@pytest.fixture
def laplacian(mesh: SpatialMesh) -> DiscreteOperator:
    """−u'' on (0, 1) with Dirichlet conditions, c = 0."""
    coeffs = CoefficientSet.build(mesh, a=1.0, c=0.0, allow_zero_potential=True)
    return assemble_operator(mesh, coeffs)


@pytest.fixture
def operator(mesh: SpatialMesh) -> DiscreteOperator:
    """−((1 + x)u')' + u on (0, 1) with Dirichlet conditions."""
    coeffs = CoefficientSet.build(mesh, a=lambda x: 1 + x, c=1.0)
    return assemble_operator(mesh, coeffs)


@pytest.fixture
def neumann_operator(mesh: SpatialMesh) -> DiscreteOperator:
    coeffs = CoefficientSet.build(mesh, a=1.0, c=2.0, boundary=BoundaryCondition.NEUMANN)
    return assemble_operator(mesh, coeffs)


@pytest.fixture
def bump(operator: DiscreteOperator) -> np.ndarray:
    x = operator.mesh.nodes[operator.dofs, 0]
    return np.where((x > 0.1) & (x < 0.4), np.sin(np.pi * (x - 0.1) / 0.3) ** 2, 0.0)


@pytest.fixture
def scenario() -> Scenario:
    return Scenario.default(Experiment.FORWARD).derive(mesh={"n": [24]}, solver={"dt": 0.005})


@pytest.fixture
def scenario_file(tmp_path: Path, scenario: Scenario) -> Path:
    path = tmp_path / "scenario.yaml"
    path.write_text(dump_scenario(scenario))
    return path
