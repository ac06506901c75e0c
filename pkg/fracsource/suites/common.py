"""Helpers shared by the verification suites."""

from typing import Optional

import numpy as np

from fracsource.core.models.enum import SolveMethod
from fracsource.core.models.scenario import Problem, Scenario
from fracsource.core.numerics.forward import SpaceTimeField, duhamel_solve, wave_solve
from fracsource.core.numerics.fractional_time import TimeGrid, TimeSignal
from fracsource.core.numerics.grid_elliptic import EigenSystem, Interval, eigensystem

OMEGA_FRACTION = 0.2


def observation_region(scenario: Scenario) -> list[Interval]:
    """ω of the scenario, or the last fifth of the domain along the first axis when it has none."""

    if scenario.observation is not None:
        return scenario.observation.omega
    extent = scenario.mesh.extent
    lo, hi = extent[0]
    return [(hi - OMEGA_FRACTION * (hi - lo), hi), *extent[1:]]


def sine_edge(grid: TimeGrid, onset: float, width: float) -> TimeSignal:
    """sin(π(t − onset)/width) on [onset, onset + width]: a source with a linear onset and a known support."""

    t = grid.t
    inside = (t >= onset) & (t <= onset + width)
    values = np.where(inside, np.sin(np.pi * (t - onset) / width), 0.0)
    return TimeSignal(grid=grid, values=np.maximum(values, 0.0), T0=onset + width, support_bound=onset + width)


def interior_sine(problem: Problem) -> np.ndarray:
    """Π_k sin(π(x_k − lo_k)/L_k) on the degrees of freedom: positive everywhere inside the domain."""

    op = problem.op
    coords = op.mesh.nodes[op.dofs]
    out = np.ones(op.n)
    for k, (lo, hi) in enumerate(op.mesh.extent):
        out *= np.sin(np.pi * (coords[:, k] - lo) / (hi - lo))
    return np.maximum(out, 0.0)


def kernel_method(problem: Problem) -> SolveMethod:
    """Duhamel method usable for sensitivities: spectral for waves, contour in place of L1 stepping."""

    order = problem.order
    if order.is_constant and order.alpha == 2:
        return SolveMethod.SPECTRAL
    method = problem.scenario.solver.method
    return SolveMethod.CONTOUR if method == SolveMethod.L1 else method


def eigensystem_for(problem: Problem, method: SolveMethod) -> Optional[EigenSystem]:
    return eigensystem(problem.op, problem.op.n) if method == SolveMethod.SPECTRAL else None


def solve(
    problem: Problem, mu: TimeSignal, h: np.ndarray, method: SolveMethod, eig: Optional[EigenSystem], threads: int
) -> SpaceTimeField:
    order = problem.order
    if order.is_constant and order.alpha == 2:
        assert eig is not None
        return wave_solve(eig, mu, h)
    return duhamel_solve(problem.op, order, mu, h, method, eig=eig, threads=threads)
