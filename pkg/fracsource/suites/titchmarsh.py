import logging

import numpy as np
import pydantic as pd

from fracsource.core.abstract.suites import BaseSuite, SuiteSettings
from fracsource.core.models.result import CheckResult, SuiteResult
from fracsource.core.models.scenario import Scenario, build_problem
from fracsource.core.numerics.fractional_time import TimeGrid, TimeSignal
from fracsource.core.numerics.inverse import (
    SUPPORT_THRESHOLD,
    ObservationSpec,
    TitchmarshReport,
    observe,
    observed_kernel_antiderivatives,
    support_infimum,
    titchmarsh_check,
)
from fracsource.suites.common import (
    eigensystem_for,
    interior_sine,
    kernel_method,
    observation_region,
    sine_edge,
    solve,
)
from fracsource.utils.progress_bar import ProgressBar

logger = logging.getLogger("fracsource")


class TitchmarshSuiteSettings(SuiteSettings):
    n_trials: int = pd.Field(100, ge=1, description="Number of random compactly supported pairs.")
    dt: float = pd.Field(1e-3, gt=0, description="Time step of the random pairs.")
    horizon: float = pd.Field(1.0, gt=0, description="Observation horizon T of the random pairs.")
    onset: float = pd.Field(0.1, gt=0, description="Delay of the source in the forward check.")
    width: float = pd.Field(0.3, gt=0, description="Support length of the source in the forward check.")


class TitchmarshSuite(BaseSuite[TitchmarshSuiteSettings]):
    """Titchmarsh convolution theorem: inf supp(f * g) = inf supp f + inf supp g on the time grid.

    Random pairs with linear onsets are convolved directly; the forward check compares the onset of
    observed solutions driven by a delayed source with the onset of the source plus that of the kernel.
    """

    display_name = "titchmarsh"

    def _random_pair(self, rng: np.random.Generator, grid: TimeGrid) -> tuple[TimeSignal, TimeSignal]:
        n = grid.n_steps
        signals = []
        for _ in range(2):
            start = int(rng.integers(0, n // 4))
            length = int(rng.integers(max(n // 20, 2), n // 4))
            signals.append(sine_edge(grid, start * grid.dt, length * grid.dt))
        return signals[0], signals[1]

    def random_pairs(self, threshold_rel: float = SUPPORT_THRESHOLD) -> list[TitchmarshReport]:
        settings = self.settings
        grid = TimeGrid.uniform(settings.horizon, settings.dt)
        rng = np.random.default_rng(settings.seed)

        reports = []
        with ProgressBar(total=settings.n_trials, title="Random pairs") as bar:
            for _ in range(settings.n_trials):
                f, g = self._random_pair(rng, grid)
                reports.append(titchmarsh_check(f, g, settings.horizon, threshold_rel))
                bar.progress()
        return reports

    def forward_gaps(self, scenario: Scenario, threads: int) -> tuple[list[float], float]:
        """|τ(u_ψ) − (τ(μ) + τ(v_ψ))| per sensor, for a delayed source and h positive inside the domain."""

        settings = self.settings
        problem = build_problem(scenario)
        grid = problem.grid
        mu = sine_edge(grid, settings.onset, settings.width)
        h = interior_sine(problem)
        method = kernel_method(problem)
        eig = eigensystem_for(problem, method)

        n_sensors = scenario.observation.n_sensors if scenario.observation is not None else 3
        spec = ObservationSpec.build(problem.op, observation_region(scenario), 0.0, grid.t_end, n_sensors)
        data = observe(solve(problem, mu, h, method, eig, threads), spec)
        k1, _ = observed_kernel_antiderivatives(
            problem.op, problem.order, h[:, None], spec, grid, method, eig=eig, theta=scenario.solver.theta, threads=threads
        )

        threshold_rel = scenario.solver.support_threshold
        a = support_infimum(mu, threshold_rel)
        gaps = []
        for j, observed in enumerate(data):
            b = support_infimum(TimeSignal(grid=grid, values=k1[:, j, 0]), threshold_rel)
            c = support_infimum(observed, threshold_rel)
            gaps.append(abs(c - (a + b)))
        return gaps, grid.dt

    def run(self, scenario: Scenario, *, threads: int = 1) -> SuiteResult:
        settings = self.settings
        threshold_rel = scenario.solver.support_threshold
        reports = self.random_pairs(threshold_rel)
        gaps = [report.gap for report in reports if report.gap is not None]
        tolerance = 2 * settings.dt

        checks = [
            CheckResult.holds(
                "random_pairs_consistent",
                all(report.consistent for report in reports),
                detail=f"{sum(r.consistent for r in reports)}/{len(reports)} trials",
            ),
            CheckResult.at_most("random_pairs_max_gap", max(gaps) if gaps else 0.0, tolerance),
            CheckResult.holds("no_anomalies", not any(report.anomaly for report in reports)),
        ]

        forward, dt = self.forward_gaps(scenario, threads)
        checks.append(CheckResult.at_most("forward_onset_gap", max(forward), 2 * dt, detail=f"{len(forward)} sensors"))
        logger.info(f"Titchmarsh: max random gap {max(gaps):.2e}, max forward gap {max(forward):.2e}")

        return SuiteResult(
            name=self.display_name,
            settings=settings.dict(),
            checks=checks,
            details={"forward_gaps": forward, "support_threshold": threshold_rel},
        )
