import math

import numpy as np
import pytest

from fracsource.core.exceptions import HypothesisViolation
from fracsource.core.numerics.grid_elliptic import SpatialMesh, eigensystem
from fracsource.core.numerics.solution_operators import (
    IMAGINARY_TOLERANCE,
    OrderField,
    admissible_theta,
    apply_S_contour,
    apply_S_spectral,
    build_contour,
    contour_action,
    contour_for_times,
    imaginary_ratio,
    resolvent_solve,
    time_windows,
)


@pytest.fixture
def half_order(mesh) -> OrderField:
    return OrderField.constant(mesh, 0.5)


@pytest.mark.parametrize(
    "integrand, expected",
    [
        (lambda p: np.exp(p) / p, 1.0),
        (lambda p: np.exp(p) / p**2, 1.0),
        (lambda p: np.exp(p) / (p + 1), math.exp(-1)),
        (lambda p: np.exp(p) * p**-0.5, 1 / math.sqrt(math.pi)),
    ],
)
def test_contour_residues(integrand, expected):
    contour = contour_for_times(1.0, 1.0, delta_scale=0.5)
    assert contour.integrate(integrand) == pytest.approx(expected, abs=1e-8)


def test_contour_nodes_come_in_conjugate_pairs():
    contour = build_contour(delta=0.5)
    np.testing.assert_allclose(contour.nodes, np.conj(contour.nodes[::-1]), atol=1e-14)
    assert contour.size == contour.n_arc + 2 * contour.n_leg


def test_contour_rejects_bad_angle():
    with pytest.raises(ValueError):
        build_contour(theta=np.pi / 3)


def test_time_windows():
    windows = time_windows([0.01, 0.05, 1.0, 5.0, 0.1])
    assert [(lo, hi) for _, lo, hi in windows] == [(0.01, 0.1), (1.0, 5.0)]
    with pytest.raises(ValueError):
        time_windows([0.0, 1.0])


def test_resolvent_on_eigenvector(operator, mesh):
    order = OrderField.constant(mesh, 0.7)
    eig = eigensystem(operator, 3)
    phi, lam = eig.eigenvectors[:, 1], eig.eigenvalues[1]
    p = 2.0
    w = resolvent_solve(operator, order, p, operator.rho * phi)
    assert not np.iscomplexobj(w)
    np.testing.assert_allclose(w, phi / (lam + p**0.7), rtol=1e-10, atol=1e-12)


def test_resolvent_shape_mismatch(operator, half_order):
    with pytest.raises(ValueError):
        resolvent_solve(operator, half_order, 1.0, np.ones(operator.n + 1))


@pytest.mark.parametrize("t", [0.1, 1.0, 3.0])
def test_spectral_matches_contour(laplacian, half_order, bump, t):
    h = bump
    eig = eigensystem(laplacian, laplacian.n)
    spectral = apply_S_spectral(eig, 0.5, t, h / laplacian.rho)
    contour = apply_S_contour(laplacian, half_order, t, h)
    assert np.abs(spectral - contour).max() <= 1e-6 * np.abs(spectral).max()


def test_zero_source_gives_zero(operator, half_order):
    np.testing.assert_array_equal(apply_S_contour(operator, half_order, [0.5, 1.0], np.zeros(operator.n)), 0.0)


def test_imaginary_ratio():
    assert imaginary_ratio(np.array([1 + 2j, -4 + 0j])) == 0.5
    assert imaginary_ratio(np.array([1j, 0j])) == 0.0
    assert imaginary_ratio(np.zeros(3)) == 0.0


def test_contour_action_is_real_for_real_data(laplacian, half_order, bump):
    values = contour_action(laplacian, half_order, [0.1, 1.0], bump)
    assert np.iscomplexobj(values)
    assert imaginary_ratio(values) <= IMAGINARY_TOLERANCE


def test_spectral_time_must_be_positive(laplacian, bump):
    eig = eigensystem(laplacian, 4)
    with pytest.raises(ValueError):
        apply_S_spectral(eig, 0.5, 0.0, np.ones(laplacian.n))
    with pytest.raises(ValueError):
        apply_S_spectral(eig, 2.0, 1.0, np.ones(laplacian.n))


def test_piecewise_order(mesh):
    order = OrderField.piecewise(mesh, [(0.0, 0.5), (0.5, 1.0)], [0.4, 0.6])
    assert not order.is_constant
    assert (order.alpha0, order.alphaM) == (0.4, 0.6)
    np.testing.assert_allclose(order.interfaces(mesh), [0.5], atol=mesh.h)
    with pytest.raises(ValueError):
        order.alpha


def test_piecewise_merges_equal_orders(mesh):
    order = OrderField.piecewise(mesh, [(0.0, 0.5), (0.5, 1.0)], [0.3, 0.3])
    assert order.is_constant and order.alpha == 0.3


@pytest.mark.parametrize("orders", [(0.3, 0.7), (0.5, 1.2)])
def test_inadmissible_variable_orders(mesh, orders):
    with pytest.raises(HypothesisViolation) as e:
        OrderField.piecewise(mesh, [(0.0, 0.5), (0.5, 1.0)], orders)
    assert e.value.condition == "vo"


@pytest.mark.parametrize(
    "n, regions",
    [(48, [(0.0, 0.6), (0.4, 1.0)]), (49, [(0.0, 0.5), (0.5, 1.0)]), (48, [(0.0, 1.0), (0.2, 0.3)])],
)
def test_overlapping_partition_rejected(n, regions):
    with pytest.raises(HypothesisViolation) as e:
        OrderField.piecewise(SpatialMesh.uniform([(0.0, 1.0)], n), regions, [0.4, 0.6])
    assert e.value.condition == "vo"


def test_partition_must_cover_the_mesh(mesh):
    with pytest.raises(ValueError):
        OrderField.piecewise(mesh, [(0.0, 0.4), (0.6, 1.0)], [0.4, 0.6])


def test_constant_order_range(mesh):
    with pytest.raises(ValueError):
        OrderField.constant(mesh, 2.5)


def test_admissible_theta(mesh):
    default = 3 * np.pi / 4
    assert admissible_theta(OrderField.constant(mesh, 0.5)) == default
    lowered = admissible_theta(OrderField.constant(mesh, 1.6))
    assert np.pi / 2 < lowered < np.pi / 1.6
