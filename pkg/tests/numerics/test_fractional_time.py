import math

import numpy as np
import pytest

from fracsource.core.numerics.fractional_time import (
    TimeGrid,
    TimeSignal,
    caputo_derivative,
    convolve,
    relaxation_response,
    rl_derivative,
    rl_integral,
    smooth_bump,
    verify_relaxation_ode,
)


@pytest.fixture
def grid() -> TimeGrid:
    return TimeGrid.uniform(1.0, 1e-3)


def power(grid: TimeGrid, exponent: float) -> TimeSignal:
    return TimeSignal.from_function(grid, lambda t: t**exponent)


def test_grid_window():
    grid = TimeGrid.uniform(1.0, 0.1)
    assert grid.size == 11
    window = grid.window(0.25, 0.5)
    np.testing.assert_allclose(grid.t[window], [0.3, 0.4, 0.5])
    with pytest.raises(ValueError):
        TimeGrid.uniform(1.0, 0.3)


def test_support_bound_is_enforced(grid):
    with pytest.raises(ValueError):
        TimeSignal(grid=grid, values=np.ones(grid.size), support_bound=0.5)
    signal = TimeSignal.from_function(grid, lambda t: np.ones_like(t), support_bound=0.5)
    assert not np.any(signal.values[grid.t > 0.5])


def test_integral_of_constant(grid):
    one = TimeSignal.from_function(grid, lambda t: np.ones_like(t))
    np.testing.assert_allclose(rl_integral(one, 1.0).values, grid.t, atol=1e-12)


def test_integral_power_law(grid):
    beta = 0.5
    exact = math.gamma(2) / math.gamma(2.5) * grid.t**1.5
    assert np.abs(rl_integral(power(grid, 1.0), beta).values - exact).max() < 1e-6


def test_integral_refinement():
    coarse_grid = TimeGrid.uniform(1.0, 1e-2)
    fine_grid = coarse_grid.refine(10)

    def f(t: np.ndarray) -> np.ndarray:
        return np.sin(3 * t) * np.exp(-t)

    coarse = rl_integral(TimeSignal.from_function(coarse_grid, f), 0.7).values
    fine = rl_integral(TimeSignal.from_function(fine_grid, f), 0.7).values[::10]
    assert np.sum(np.abs(coarse - fine)) / np.sum(np.abs(fine)) < 1e-3


def test_rl_derivative_of_power(grid):
    beta = 0.6
    derivative = rl_derivative(power(grid, beta), beta).values
    interior = slice(50, -50)
    np.testing.assert_allclose(derivative[interior], math.gamma(beta + 1), rtol=1e-2)


def test_rl_derivative_inverts_integral(grid):
    f = TimeSignal.from_function(grid, lambda t: t * np.cos(2 * t))
    recovered = rl_derivative(rl_integral(f, 0.4), 0.4).values
    interior = slice(20, -20)
    assert np.abs(recovered[interior] - f.values[interior]).max() < 1e-2


def test_caputo_kills_constants(grid):
    constant = TimeSignal.from_function(grid, lambda t: 3.0 * np.ones_like(t))
    for beta in (0.3, 0.8, 1.4):
        np.testing.assert_array_equal(caputo_derivative(constant, beta).values, 0.0)


def test_caputo_of_linear(grid):
    beta = 0.5
    derivative = caputo_derivative(power(grid, 1.0), beta).values
    exact = grid.t ** (1 - beta) / math.gamma(2 - beta)
    assert np.abs(derivative[1:] - exact[1:]).max() < 10 * grid.dt ** (2 - beta)


def test_caputo_matches_rl_for_zero_start(grid):
    f = TimeSignal.from_function(grid, lambda t: t**2 * np.exp(-t))
    caputo = caputo_derivative(f, 0.7).values
    rl = rl_derivative(f, 0.7).values
    interior = slice(10, -10)
    assert np.abs(caputo[interior] - rl[interior]).max() < 1e-2


def test_convolution_of_indicators():
    grid = TimeGrid.uniform(1.0, 1e-3)
    f = TimeSignal(grid=grid, values=np.where((grid.t >= 0.2) & (grid.t <= 0.3), 1.0, 0.0))
    g = TimeSignal(grid=grid, values=np.where((grid.t >= 0.1) & (grid.t <= 0.2), 1.0, 0.0))
    conv = convolve(f, g)
    peak = int(np.argmax(conv.values))
    assert grid.t[peak] == pytest.approx(0.4, abs=2e-3)
    assert conv.values.max() == pytest.approx(0.1, abs=2e-3)
    assert not np.any(conv.values[grid.t < 0.3 - 1e-9])


def test_convolution_needs_shared_grid():
    a = TimeSignal.zeros(TimeGrid.uniform(1.0, 0.1))
    b = TimeSignal.zeros(TimeGrid.uniform(1.0, 0.05))
    with pytest.raises(ValueError):
        convolve(a, b)


def test_relaxation_zero_source(grid):
    report = verify_relaxation_ode(TimeSignal.zeros(grid), 0.5, 2.0)
    assert report.residual == 0
    assert report.rate is None


def test_relaxation_first_order():
    grid = TimeGrid.uniform(3.0, 1e-3)
    one = TimeSignal.from_function(grid, lambda t: np.ones_like(t))
    w = relaxation_response(one, 1.0, 1.0)
    np.testing.assert_allclose(w.values, 1 - np.exp(-grid.t), atol=1e-6)


def test_relaxation_rate():
    grid = TimeGrid.uniform(1.0, 1e-2)
    h = TimeSignal.from_function(grid, lambda t: smooth_bump(t, 0.4, 0.25))
    report = verify_relaxation_ode(h, 0.6, 3.0)
    assert report.residual_refined < report.residual
    assert report.rate is not None and report.rate >= 0.5


@pytest.mark.parametrize("beta", [-0.5, 2.5])
def test_order_ranges(grid, beta):
    with pytest.raises(ValueError):
        rl_derivative(TimeSignal.zeros(grid), beta)
    with pytest.raises(ValueError):
        caputo_derivative(TimeSignal.zeros(grid), beta)
