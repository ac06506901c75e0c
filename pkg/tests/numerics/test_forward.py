import numpy as np
import pytest

from fracsource.core.models.enum import SolveMethod
from fracsource.core.numerics.forward import (
    SpaceTimeField,
    duhamel_solve,
    laplace_transform,
    timestep_solve_L1,
    verify_weak_solution,
    wave_arrival_time,
    wave_energy,
    wave_solve,
)
from fracsource.core.numerics.fractional_time import TimeGrid, TimeSignal, smooth_bump
from fracsource.core.numerics.grid_elliptic import eigensystem
from fracsource.core.numerics.solution_operators import OrderField


def bump_source(grid: TimeGrid, start: float, end: float) -> TimeSignal:
    center, half_width = (start + end) / 2, (end - start) / 2
    return TimeSignal.from_function(grid, lambda t: smooth_bump(t, center, half_width), T0=end)


@pytest.fixture
def grid() -> TimeGrid:
    return TimeGrid.uniform(1.0, 0.01)


def test_zero_source_gives_zero(operator, mesh, bump, grid):
    order = OrderField.constant(mesh, 0.5)
    u = duhamel_solve(operator, order, TimeSignal.zeros(grid), bump, SolveMethod.SPECTRAL)
    np.testing.assert_array_equal(u.values, 0.0)
    u = duhamel_solve(operator, order, bump_source(grid, 0.0, 0.5), np.zeros(operator.n), SolveMethod.CONTOUR)
    np.testing.assert_array_equal(u.values, 0.0)


def test_solution_is_causal(operator, mesh, bump, grid):
    order = OrderField.constant(mesh, 0.5)
    mu = bump_source(grid, 0.3, 0.6)
    u = duhamel_solve(operator, order, mu, bump, SolveMethod.SPECTRAL)
    assert u.onset == pytest.approx(0.31)
    assert u.is_causal()
    assert np.abs(u.values).max() > 0


def test_spectral_matches_contour(laplacian, mesh, bump, grid):
    order = OrderField.constant(mesh, 0.5)
    mu = bump_source(grid, 0.0, 0.5)
    spectral = duhamel_solve(laplacian, order, mu, bump, SolveMethod.SPECTRAL)
    contour = duhamel_solve(laplacian, order, mu, bump, SolveMethod.CONTOUR)
    assert np.abs(spectral.values - contour.values).max() <= 1e-6 * np.abs(spectral.values).max()


def test_spectral_needs_constant_order(operator, mesh, bump, grid):
    order = OrderField.piecewise(mesh, [(0.0, 0.5), (0.5, 1.0)], [0.4, 0.6])
    with pytest.raises(ValueError):
        duhamel_solve(operator, order, bump_source(grid, 0.0, 0.5), bump, SolveMethod.SPECTRAL)


def test_weak_solution_residual(operator, mesh, bump):
    grid = TimeGrid.uniform(8.0, 0.01)
    order = OrderField.constant(mesh, 0.5)
    mu = bump_source(grid, 0.0, 0.5)
    u = duhamel_solve(operator, order, mu, bump, SolveMethod.SPECTRAL)
    report = verify_weak_solution(u, operator, order, mu, bump, [1.0, 2.0])
    assert all(report.relative)
    assert max(report.residuals) < 1e-2


def test_laplace_transform_of_constant():
    grid = TimeGrid.uniform(2.0, 0.05)
    p = 1.5
    value = laplace_transform(np.ones(grid.size), grid, p)
    assert value == pytest.approx((1 - np.exp(-p * grid.t_end)) / p, rel=1e-12)


def test_wave_energy_is_conserved(operator, bump):
    eig = eigensystem(operator, operator.n)
    energy = wave_energy(operator, eig, bump, np.linspace(0.0, 3.0, 7))
    np.testing.assert_allclose(energy, energy[0], rtol=1e-10)


def test_wave_solve_is_causal(operator, bump, grid):
    eig = eigensystem(operator, operator.n)
    u = wave_solve(eig, bump_source(grid, 0.2, 0.5), bump)
    assert u.is_causal()
    assert np.abs(u.values).max() > 0


def test_wave_arrival_time():
    grid = TimeGrid.uniform(1.0, 0.1)
    values = np.zeros((grid.size, 3))
    values[2:, 0] = 1.0
    values[6:, 2] = 1e-3
    u = SpaceTimeField(grid=grid, values=values)
    mask = np.array([False, False, True])
    assert wave_arrival_time(u, mask) == pytest.approx(0.6)
    assert wave_arrival_time(u, mask, threshold_rel=0.1) is None
    assert wave_arrival_time(SpaceTimeField(grid=grid, values=np.zeros((grid.size, 3))), mask) is None


def test_l1_needs_subdiffusive_orders(operator, mesh, bump, grid):
    with pytest.raises(ValueError):
        timestep_solve_L1(operator, OrderField.constant(mesh, 1.5), bump_source(grid, 0.0, 0.5), bump)


@pytest.mark.slow
def test_l1_matches_duhamel(operator, mesh, bump):
    grid = TimeGrid.uniform(1.0, 1e-3)
    order = OrderField.piecewise(mesh, [(0.0, 0.5), (0.5, 1.0)], [0.4, 0.6])
    mu = bump_source(grid, 0.0, 0.5)
    duhamel = duhamel_solve(operator, order, mu, bump, SolveMethod.CONTOUR)
    stepped = timestep_solve_L1(operator, order, mu, bump)
    final = duhamel.values[-1]
    assert operator.norm(stepped.values[-1] - final) <= 1e-2 * operator.norm(final)
