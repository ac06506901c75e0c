import logging

import numpy as np
import pydantic as pd

from fracsource.core.abstract.suites import BaseSuite, SuiteSettings
from fracsource.core.models.enum import Experiment, SolveMethod
from fracsource.core.models.result import CheckResult, SuiteResult
from fracsource.core.models.scenario import Problem, Scenario, build_problem
from fracsource.core.numerics.forward import duhamel_solve, timestep_solve_L1
from fracsource.core.numerics.grid_elliptic import eigensystem
from fracsource.core.numerics.solution_operators import (
    analyticity_surrogate,
    apply_S_contour,
    apply_S_spectral,
    contour_for_times,
    operator_norm_estimate,
)
from fracsource.core.numerics.special_functions import mittag_leffler_array, mittag_leffler_real, ml_bound_check
from fracsource.suites.common import interior_sine, observation_region
from fracsource.utils.progress_bar import ProgressBar

logger = logging.getLogger("fracsource")


class OperatorsSuiteSettings(SuiteSettings):
    special_tolerance: float = pd.Field(1e-10, gt=0, description="Tolerance of the closed-form Mittag-Leffler cases.")
    bound_ratio: float = pd.Field(10.0, gt=0, description="Largest accepted constant of the Mittag-Leffler decay bound.")
    residue_tolerance: float = pd.Field(1e-8, gt=0, description="Tolerance of the contour residue tests.")
    operator_tolerance: float = pd.Field(1e-6, gt=0, description="Spectral against contour solution operator.")
    delta_tolerance: float = pd.Field(1e-8, gt=0, description="Spread of S(t)h over the arc radii.")
    times: list[float] = pd.Field([0.1, 0.5, 1.0, 2.0], description="Times of the solution operator comparisons.")
    delta_scales: list[float] = pd.Field([0.5, 1.0, 2.0], description="Arc radii, relative to 1/t.")
    orders: tuple[float, float] = pd.Field((0.4, 0.6), description="Orders of the two-subdomain variable-order field.")
    slope_slack: float = pd.Field(0.1, ge=0, description="Allowed shortfall of the small-t slope under its bound.")
    analyticity_window: tuple[float, float] = pd.Field((1.0, 2.0), description="Window of the analyticity fit.")
    analyticity_tolerance: float = pd.Field(1e-6, gt=0, description="Largest Chebyshev residual of (S(t)h, ψ).")
    l1_tolerance: float = pd.Field(5e-3, gt=0, description="Relative gap between contour Duhamel and L1 stepping.")


class OperatorsSuite(BaseSuite[OperatorsSuiteSettings]):
    """Solution operators: Mittag-Leffler functions, contour quadrature and S(t) for constant and variable orders.

    Closed forms of E_{α,β} and the C/(1 + t^αλ) decay bound come first, then residues of the truncated
    contour, the spectral and contour forms of S(t), the independence of S(t)h from the arc radius, and
    for a two-subdomain order the norm envelope, analyticity in t and agreement of Duhamel with L1 stepping.
    """

    display_name = "operators"

    def special_function_checks(self) -> list[CheckResult]:
        tol = self.settings.special_tolerance

        radius, angle = np.meshgrid(np.linspace(0.0, 5.0, 11), np.linspace(0.0, 2 * np.pi, 16, endpoint=False))
        z = (radius * np.exp(1j * angle)).ravel()
        exp_error = np.max(np.abs(mittag_leffler_array(1.0, 1.0, z) - np.exp(z)) / np.exp(np.abs(z)))

        t = np.linspace(0.0, 10.0, 101)
        cos_error = np.max(np.abs(mittag_leffler_real(2.0, 1.0, -(t**2)) - np.cos(t)))

        bound = max(
            ml_bound_check(alpha, np.logspace(-3, 2, 24), np.logspace(-2, 4, 24)).max_ratio for alpha in (0.3, 0.5, 0.9)
        )
        return [
            CheckResult.at_most("E11_matches_exp", float(exp_error), tol),
            CheckResult.at_most("E21_matches_cos", float(cos_error), tol),
            CheckResult.at_most("ml_decay_bound", bound, self.settings.bound_ratio),
        ]

    def residue_checks(self) -> list[CheckResult]:
        tol = self.settings.residue_tolerance
        t = 1.0
        contour = contour_for_times(t, t, delta_scale=0.5)
        first = contour.integrate(lambda p: np.exp(t * p) / p)
        second = contour.integrate(lambda p: np.exp(t * p) / p**2)
        return [
            CheckResult.at_most("residue_one_over_p", abs(first - 1.0), tol),
            CheckResult.at_most("residue_one_over_p2", abs(second - t), tol),
        ]

    def constant_order_checks(self, problem: Problem, threads: int) -> tuple[list[CheckResult], dict]:
        settings = self.settings
        op, order = problem.op, problem.order
        h = interior_sine(problem)
        eig = eigensystem(op, op.n)

        gaps, spreads = [], []
        with ProgressBar(total=len(settings.times), title="Solution operators") as bar:
            for t in settings.times:
                contour_values = [
                    apply_S_contour(op, order, t, h, delta_scale=scale, threads=threads)
                    for scale in settings.delta_scales
                ]
                spectral = apply_S_spectral(eig, order.alpha, t, h / op.rho)
                scale = op.norm(spectral)
                gaps.append(op.norm(contour_values[0] - spectral) / scale)
                spreads.append(max(op.norm(v - contour_values[0]) for v in contour_values[1:]) / scale)
                bar.progress()

        checks = [
            CheckResult.at_most("spectral_vs_contour", max(gaps), settings.operator_tolerance),
            CheckResult.at_most("arc_radius_independence", max(spreads), settings.delta_tolerance),
        ]
        return checks, {"spectral_gaps": gaps, "arc_spreads": spreads}

    def variable_order_problem(self, scenario: Scenario) -> Problem:
        extent = scenario.mesh.extent
        lo, hi = extent[0]
        n = scenario.mesh.n[0]
        # split between two nodes so that the halves stay disjoint
        mid = lo + (n // 2 + 0.5) * (hi - lo) / (n + 1)
        low, high = self.settings.orders
        regions = [[[lo, mid], *map(list, extent[1:])], [[mid, hi], *map(list, extent[1:])]]
        derived = scenario.derive(
            experiment=Experiment.FORWARD.value,
            order={"alpha": None, "partition": [{"region": regions[0], "alpha": low}, {"region": regions[1], "alpha": high}]},
            coefficients={"b": None},
            solver={"method": SolveMethod.CONTOUR.value, "t_end": scenario.t_end},
        )
        return build_problem(derived)

    def variable_order_checks(self, scenario: Scenario, threads: int) -> tuple[list[CheckResult], dict]:
        settings = self.settings
        problem = self.variable_order_problem(scenario)
        op, order = problem.op, problem.order

        norms = operator_norm_estimate(
            op, order, np.logspace(-2, 2, 17), n_iter=scenario.solver.power_iterations, seed=settings.seed, threads=threads
        )

        h = interior_sine(problem)
        psi = op.region_mask(observation_region(scenario)).astype(float)
        t1, t2 = settings.analyticity_window
        analyticity = analyticity_surrogate(op, order, h, psi, t1, t2, threads=threads)

        contour = duhamel_solve(op, order, problem.mu, h, SolveMethod.CONTOUR, threads=threads)
        stepped = timestep_solve_L1(op, order, problem.mu, h)
        t = min(1.0, problem.grid.t_end)
        reference = contour.at(t)
        l1_gap = op.norm(stepped.at(t) - reference) / op.norm(reference)

        checks = [
            CheckResult.at_least(
                "norm_small_t_slope",
                norms.small_t_slope,
                norms.small_t_exponent_bound - settings.slope_slack,
                detail=f"envelope constant {norms.envelope_constant:.3g}",
            ),
            CheckResult.at_most("analyticity_residual", analyticity.max_relative_residual, settings.analyticity_tolerance),
            CheckResult.at_most("duhamel_vs_L1", l1_gap, settings.l1_tolerance, detail=f"t={t:g}"),
        ]
        details = {
            "norm_t": norms.t,
            "norms": norms.norms,
            "large_t_slope": norms.large_t_slope,
            "monotone_violations": norms.monotone_violations,
        }
        return checks, details

    def run(self, scenario: Scenario, *, threads: int = 1) -> SuiteResult:
        checks = self.special_function_checks() + self.residue_checks()

        constant = scenario.derive(
            experiment=Experiment.FORWARD.value,
            order={"alpha": 0.5 if scenario.order.alpha in (None, 2.0) else scenario.order.alpha, "partition": None},
            coefficients={"b": None},
            solver={"t_end": scenario.t_end},
        )
        constant_checks, details = self.constant_order_checks(build_problem(constant), threads)
        checks += constant_checks

        variable_checks, variable_details = self.variable_order_checks(scenario, threads)
        checks += variable_checks
        details.update(variable_details)

        logger.info(f"Operators: {sum(c.passed for c in checks)}/{len(checks)} checks passed")
        return SuiteResult(name=self.display_name, settings=self.settings.dict(), checks=checks, details=details)
