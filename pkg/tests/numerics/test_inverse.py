import numpy as np
import pytest

from fracsource.core.exceptions import HypothesisViolation, RankDeficiencyError
from fracsource.core.models.enum import BasisKind, SolveMethod
from fracsource.core.numerics.forward import SpaceTimeField, duhamel_solve
from fracsource.core.numerics.fractional_time import TimeGrid, TimeSignal, smooth_bump
from fracsource.core.numerics.grid_elliptic import eigensystem
from fracsource.core.numerics.inverse import (
    ObservationSpec,
    build_basis,
    check_variable_order_geometry,
    observe,
    reconstruct_h,
    relative_error,
    support_infimum,
    titchmarsh_check,
    truncated_svd_solve,
)
from fracsource.core.numerics.solution_operators import OrderField


def indicator(grid: TimeGrid, start: float, end: float) -> TimeSignal:
    return TimeSignal(grid=grid, values=np.where((grid.t >= start) & (grid.t <= end), 1.0, 0.0))


@pytest.fixture
def grid() -> TimeGrid:
    return TimeGrid.uniform(1.0, 1e-3)


def test_support_infimum(grid):
    assert support_infimum(indicator(grid, 0.3, 0.5)) == pytest.approx(0.3, abs=grid.dt)
    assert support_infimum(TimeSignal.from_function(grid, lambda t: np.cos(t))) == 0.0
    with pytest.raises(ValueError):
        support_infimum(TimeSignal.zeros(grid))


def test_titchmarsh_support_sum(grid):
    report = titchmarsh_check(indicator(grid, 0.2, 0.3), indicator(grid, 0.1, 0.2), T=1.0)
    assert report.consistent and not report.anomaly
    assert report.c == pytest.approx(0.3, abs=2 * grid.dt)
    assert report.gap <= report.tolerance


def test_titchmarsh_window_before_support(grid):
    report = titchmarsh_check(indicator(grid, 0.2, 0.3), indicator(grid, 0.1, 0.2), T=0.25)
    assert report.c is None
    assert report.consistent and not report.anomaly


def test_observation_spec(operator):
    spec = ObservationSpec.build(operator, (0.8, 1.0), 0.25, 1.0, n_sensors=2)
    assert spec.n_sensors == 2
    assert not np.any(spec.sensors[:, ~spec.omega_mask])
    assert np.all(np.any(spec.sensors, axis=1))


@pytest.mark.parametrize("omega, t1, T", [((0.8, 1.0), 1.0, 1.0), ((2.0, 3.0), 0.0, 1.0)])
def test_observation_rejections(operator, omega, t1, T):
    with pytest.raises(HypothesisViolation) as e:
        ObservationSpec.build(operator, omega, t1, T)
    assert e.value.condition == "window"


def test_observe_window(operator):
    grid = TimeGrid.uniform(1.0, 0.01)
    spec = ObservationSpec.build(operator, (0.8, 1.0), 0.25, 1.0)
    u = SpaceTimeField(grid=grid, values=np.ones((grid.size, operator.n)))
    signals = observe(u, spec)
    assert len(signals) == spec.n_sensors
    for j, signal in enumerate(signals):
        assert signal.grid.t_start == pytest.approx(0.25)
        assert signal.grid.t_end == pytest.approx(1.0)
        np.testing.assert_allclose(signal.values, spec.functionals[j].sum())


def test_eigen_basis(operator):
    exclude = operator.region_mask((0.8, 1.0))
    basis = build_basis(operator, BasisKind.EIGEN, 6, exclude=exclude)
    assert basis.shape == (operator.n, 6)
    np.testing.assert_array_equal(basis[exclude], 0.0)
    gram = basis.T @ (operator.weights[:, None] * basis)
    np.testing.assert_allclose(gram, np.eye(6), atol=1e-10)


def test_nodal_basis(operator):
    basis = build_basis(operator, BasisKind.NODAL)
    assert basis.shape == (operator.n, operator.n)
    np.testing.assert_allclose(basis.T @ (operator.weights[:, None] * basis), np.eye(operator.n), atol=1e-12)


def test_truncated_svd():
    A = np.diag([1.0, 1e-12])
    x, sigma, rank = truncated_svd_solve(A, np.array([2.0, 1.0]), 1e-10)
    assert rank == 1
    np.testing.assert_allclose(x, [2.0, 0.0], atol=1e-14)
    with pytest.raises(RankDeficiencyError):
        truncated_svd_solve(np.zeros((3, 2)), np.ones(3), 1e-10)


@pytest.mark.parametrize(
    "omega, obstacle, condition",
    [((0.8, 1.0), (0.6, 0.9), "t3b"), ((0.0, 0.1), (0.4, 0.7), "t3aa")],
)
def test_variable_order_geometry_rejections(operator, mesh, omega, obstacle, condition):
    order = OrderField.piecewise(mesh, [(0.0, 0.5), (0.5, 1.0)], [0.4, 0.6])
    with pytest.raises(HypothesisViolation) as e:
        check_variable_order_geometry(operator, order, omega, obstacle)
    assert e.value.condition == condition


def test_variable_order_geometry(operator, mesh):
    order = OrderField.piecewise(mesh, [(0.0, 0.5), (0.5, 1.0)], [0.4, 0.6])
    omega_mask, obstacle_mask = check_variable_order_geometry(operator, order, (0.8, 1.0), (0.4, 0.9))
    assert np.any(omega_mask & obstacle_mask)


def test_recover_h_noiseless(operator, mesh):
    grid = TimeGrid.uniform(1.0, 0.01)
    order = OrderField.constant(mesh, 0.5)
    mu = TimeSignal.from_function(grid, lambda t: smooth_bump(t, 0.25, 0.25), T0=0.5)
    spec = ObservationSpec.build(operator, (0.8, 1.0), 0.0, 1.0)
    basis = build_basis(operator, BasisKind.EIGEN, 4, exclude=spec.omega_mask)
    truth = basis @ np.array([1.0, 0.5, 0.25, 0.125])

    eig = eigensystem(operator, operator.n)
    u = duhamel_solve(operator, order, mu, truth, SolveMethod.SPECTRAL, eig=eig)
    h, report = reconstruct_h(
        operator, order, mu, spec, observe(u, spec), basis=basis, method=SolveMethod.SPECTRAL, eig=eig
    )
    assert report.rank == 4
    assert report.passed
    assert relative_error(operator, h, truth) < 1e-6


def test_recover_h_requires_vanishing_basis(operator, mesh):
    grid = TimeGrid.uniform(1.0, 0.01)
    order = OrderField.constant(mesh, 0.5)
    mu = TimeSignal.from_function(grid, lambda t: smooth_bump(t, 0.25, 0.25), T0=0.5)
    spec = ObservationSpec.build(operator, (0.8, 1.0), 0.0, 1.0)
    basis = build_basis(operator, BasisKind.EIGEN, 4)
    data = [TimeSignal.zeros(grid)] * spec.n_sensors
    with pytest.raises(HypothesisViolation) as e:
        reconstruct_h(operator, order, mu, spec, data, basis=basis, method=SolveMethod.SPECTRAL)
    assert e.value.condition == "h-omega"


def recover(operator, mu, spec, data, basis, **kwargs):
    order = OrderField.constant(operator.mesh, 0.5)
    eig = eigensystem(operator, operator.n)
    return reconstruct_h(operator, order, mu, spec, data, basis=basis, method=SolveMethod.SPECTRAL, eig=eig, **kwargs)


def observed(operator, mu, spec, h):
    order = OrderField.constant(operator.mesh, 0.5)
    eig = eigensystem(operator, operator.n)
    return observe(duhamel_solve(operator, order, mu, h, SolveMethod.SPECTRAL, eig=eig), spec)


def test_recover_h_reports_supports(operator):
    grid = TimeGrid.uniform(1.0, 0.01)
    mu = TimeSignal.from_function(grid, lambda t: smooth_bump(t, 0.3, 0.15), T0=0.5)
    spec = ObservationSpec.build(operator, (0.8, 1.0), 0.0, 1.0)
    basis = build_basis(operator, BasisKind.EIGEN, 4, exclude=spec.omega_mask)
    data = observed(operator, mu, spec, basis[:, 0])

    onsets = {}
    for threshold in (1e-8, 1e-2):
        _, report = recover(operator, mu, spec, data, basis, support_threshold=threshold)
        assert report.support_threshold == threshold
        assert report.support["mu"] == support_infimum(mu, threshold)
        assert report.support["data"] >= report.support["mu"] - 2 * grid.dt
        assert report.flags == {
            "t1b": True,
            "rank_positive": True,
            "h_vanishes_on_omega": True,
            "data_after_source": True,
        }
        onsets[threshold] = report.support["mu"]

    assert onsets[1e-8] == pytest.approx(0.155)
    assert onsets[1e-2] == pytest.approx(0.165)


def test_recover_h_flags_follow_the_estimate(operator):
    grid = TimeGrid.uniform(1.0, 0.01)
    mu = TimeSignal.from_function(grid, lambda t: smooth_bump(t, 0.25, 0.25), T0=0.5)
    spec = ObservationSpec.build(operator, (0.8, 1.0), 0.0, 1.0)
    basis = build_basis(operator, BasisKind.EIGEN, 4)

    h, report = recover(
        operator, mu, spec, observed(operator, mu, spec, basis[:, 0]), basis, require_vanishing_on_omega=False
    )
    assert np.any(h[spec.omega_mask])
    assert report.flags["rank_positive"]
    assert not report.flags["h_vanishes_on_omega"]
    assert not report.passed


def test_source_onset_uses_support_threshold(operator):
    grid = TimeGrid.uniform(1.0, 0.01)
    # faint plateau on (0, T₀), bulk of the source after T₀
    mu = TimeSignal.from_function(grid, lambda t: np.where(t < 0.5, 1e-10, 0.0) + smooth_bump(t, 0.75, 0.2), T0=0.5)
    spec = ObservationSpec.build(operator, (0.8, 1.0), 0.0, 1.0)
    basis = build_basis(operator, BasisKind.EIGEN, 4, exclude=spec.omega_mask)
    data = observed(operator, mu, spec, basis[:, 0])

    with pytest.raises(HypothesisViolation) as e:
        recover(operator, mu, spec, data, basis, support_threshold=1e-8)
    assert e.value.condition == "t1b"

    _, report = recover(operator, mu, spec, data, basis, support_threshold=1e-12)
    assert report.support["mu"] == 0.0
    assert report.support["data"] < 0.5
    assert report.support_threshold == 1e-12
