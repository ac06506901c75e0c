import numpy as np
import pytest
from scipy.integrate import quad

from fracsource.core.exceptions import HypothesisViolation
from fracsource.core.models.enum import BoundaryCondition
from fracsource.core.numerics.grid_elliptic import (
    CoefficientSet,
    SpatialMesh,
    assemble_operator,
    control_time,
    eigensystem,
    riemannian_distance,
)


def test_laplacian_stencil(laplacian):
    h = laplacian.mesh.h
    dense = laplacian.matrix.toarray() * h**2
    row = dense[10]
    assert row[9] == pytest.approx(-1.0)
    assert row[10] == pytest.approx(2.0)
    assert row[11] == pytest.approx(-1.0)
    assert np.count_nonzero(row) == 3
    assert laplacian.n == 48


def test_laplacian_eigenvalues(laplacian):
    eig = eigensystem(laplacian, 5)
    h = laplacian.mesh.h
    n = np.arange(1, 6)
    discrete = 4 / h**2 * np.sin(n * np.pi * h / 2) ** 2
    np.testing.assert_allclose(eig.eigenvalues, discrete, rtol=1e-10)
    np.testing.assert_allclose(eig.eigenvalues, (n * np.pi) ** 2, rtol=1e-2)


def test_neumann_constant_mode(neumann_operator):
    eig = eigensystem(neumann_operator, 2)
    assert eig.eigenvalues[0] == pytest.approx(2.0, rel=1e-10)
    first = eig.eigenvectors[:, 0]
    np.testing.assert_allclose(first, first[0], rtol=1e-8)


def test_eigenvectors_are_rho_orthonormal():
    mesh = SpatialMesh.uniform([(0.0, 1.0)], 64)
    coeffs = CoefficientSet.build(mesh, a=lambda x: 1 + x**2, c=1.0, rho=lambda x: 1 + x)
    op = assemble_operator(mesh, coeffs)
    eig = eigensystem(op, 6)

    gram = eig.eigenvectors.T @ ((op.weights * op.rho)[:, None] * eig.eigenvectors)
    np.testing.assert_allclose(gram, np.eye(6), atol=1e-10)

    for lam, phi in zip(eig.eigenvalues, eig.eigenvectors.T):
        residual = op.matrix @ phi - lam * op.rho * phi
        assert np.linalg.norm(residual) / np.linalg.norm(lam * op.rho * phi) < 1e-10


def test_variable_coefficient_refinement():
    def first_modes(n: int) -> np.ndarray:
        mesh = SpatialMesh.uniform([(0.0, 1.0)], n)
        op = assemble_operator(mesh, CoefficientSet.build(mesh, a=lambda x: 1 + x, c=1.0))
        return eigensystem(op, 5).eigenvalues

    np.testing.assert_allclose(first_modes(200), first_modes(1600), rtol=1e-3)


@pytest.mark.parametrize(
    "kwargs, condition",
    [
        ({"a": 1.0, "c": 1.0, "rho": 0.0}, "eq-rho"),
        ({"a": 1.0, "c": 0.0, "kappa": 0.5}, "c-kappa"),
        ({"a": lambda x: x - 0.5, "c": 1.0, "kappa": 0.1}, "ellipticity"),
    ],
)
def test_coefficient_hypotheses(mesh, kwargs, condition):
    with pytest.raises(HypothesisViolation) as e:
        CoefficientSet.build(mesh, **kwargs)
    assert e.value.condition == condition


def test_two_dimensional_mesh():
    mesh = SpatialMesh.uniform([(0.0, 1.0), (0.0, 2.0)], [7, 9])
    assert mesh.shape == (9, 11)
    op = assemble_operator(mesh, CoefficientSet.build(mesh, a=1.0, c=1.0))
    assert op.n == 7 * 9
    eig = eigensystem(op, 3)
    assert np.all(np.diff(eig.eigenvalues) > 0)


def test_region_mask_1d(mesh):
    mask = mesh.region_mask((0.8, 1.0))
    assert mask.sum() == np.sum(mesh.x >= 0.8 - 1e-12)
    both = mesh.region_mask([(0.0, 0.1), (0.9, 1.0)])
    assert both[0] and both[-1] and not both[25]


@pytest.mark.parametrize("a, expected", [(1.0, 0.3), (4.0, 0.15)])
def test_riemannian_distance_constant(a, expected):
    mesh = SpatialMesh.uniform([(0.0, 1.0)], 199)
    coeffs = CoefficientSet.build(mesh, a=a, c=1.0)
    assert riemannian_distance(mesh, coeffs, 0.1, (0.4, 0.6)) == pytest.approx(expected, abs=1e-12)


def test_riemannian_distance_variable():
    mesh = SpatialMesh.uniform([(0.0, 1.0)], 999)
    coeffs = CoefficientSet.build(mesh, a=lambda x: 1 + x, c=1.0)
    exact = 2 * (np.sqrt(2) - 1)
    assert riemannian_distance(mesh, coeffs, 0.0, (1.0, 1.0)) == pytest.approx(exact, rel=1e-6)


def test_control_time():
    mesh = SpatialMesh.uniform([(0.0, 1.0)], 199)
    coeffs = CoefficientSet.build(mesh, a=1.0, c=1.0)
    assert control_time(mesh, coeffs, (0.4, 0.6), 0.2) == pytest.approx(0.6, abs=1e-12)
    assert control_time(mesh, coeffs, (0.0, 1.0), 0.2) == pytest.approx(0.2, abs=1e-12)

    graded = CoefficientSet.build(mesh, a=lambda x: 1 + x, c=1.0)
    exact, _ = quad(lambda s: (1 + s) ** -0.5, 0.0, 0.9)
    assert control_time(mesh, graded, (0.9, 1.0), 0.0) == pytest.approx(exact, rel=1e-5)


def test_distance_rejects_2d():
    mesh = SpatialMesh.uniform([(0.0, 1.0), (0.0, 1.0)], 5)
    coeffs = CoefficientSet.build(mesh, a=1.0, c=1.0)
    with pytest.raises(ValueError):
        riemannian_distance(mesh, coeffs, np.array([0.1]), [(0.4, 0.6)])


def test_eigensystem_rejects_drift(mesh):
    op = assemble_operator(mesh, CoefficientSet.build(mesh, a=1.0, b=0.5, c=1.0))
    assert not op.self_adjoint
    with pytest.raises(ValueError):
        eigensystem(op, 3)


def test_neumann_degrees_of_freedom(mesh):
    op = assemble_operator(mesh, CoefficientSet.build(mesh, a=1.0, c=1.0, boundary=BoundaryCondition.NEUMANN))
    assert op.n == mesh.n_nodes
    assert op.weights[0] == pytest.approx(mesh.h / 2)
