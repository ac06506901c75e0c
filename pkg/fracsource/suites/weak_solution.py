import logging

import numpy as np
import pydantic as pd

from fracsource.core.abstract.suites import BaseSuite, SuiteSettings
from fracsource.core.models.enum import Experiment, SolveMethod
from fracsource.core.models.result import CheckResult, SuiteResult
from fracsource.core.models.scenario import Problem, Scenario, build_problem
from fracsource.core.numerics.forward import duhamel_solve, mollified_mu_convergence, verify_weak_solution
from fracsource.core.numerics.fractional_time import TimeGrid, TimeSignal, smooth_bump, verify_relaxation_ode
from fracsource.core.numerics.grid_elliptic import eigensystem
from fracsource.utils.progress_bar import ProgressBar

logger = logging.getLogger("fracsource")

Interval = tuple[float, float]


class WeakSolutionSuiteSettings(SuiteSettings):
    t_end: float = pd.Field(12.0, gt=0, description="Horizon of the truncated Laplace transforms.")
    dt: float = pd.Field(5e-3, gt=0, description="Time step of the forward solve.")
    source_support: Interval = pd.Field((0.2, 0.5), description="Support of the source profile μ.")
    widths: list[float] = pd.Field([0.04, 0.02, 0.01, 0.005], description="Mollifier half-widths, decreasing.")
    mollification_p: float = pd.Field(1.0, gt=0, description="Laplace variable of the mollification gaps.")
    terminal_gap: float = pd.Field(1e-4, gt=0, description="Largest accepted gap at the smallest mollifier width.")
    relaxation_lambdas: list[float] = pd.Field([1.0, 10.0], description="λ of the scalar relaxation equations.")
    relaxation_dt: float = pd.Field(1e-2, gt=0, description="Coarse time step of the relaxation residuals.")
    min_rate: float = pd.Field(0.5, description="Smallest accepted observed order of the relaxation residual.")


class WeakSolutionSuite(BaseSuite[WeakSolutionSuiteSettings]):
    """Weak solutions: Laplace-domain residuals, scalar relaxation equations and mollified sources.

    The forward solution is checked against (𝓛 + p^αρ)û(p) = μ̂(p)h for every p of the scenario;
    scalar relaxation responses against their weak form on Δt and Δt/2; and solutions driven by
    mollified indicator sources converge to the solution driven by the indicator itself.
    """

    display_name = "weak-solution"

    def problem(self, scenario: Scenario) -> Problem:
        lo, hi = self.settings.source_support
        derived = scenario.derive(
            experiment=Experiment.FORWARD.value,
            source={"mu": [{"kind": "bump", "support": [[lo, hi]]}], "T0": hi},
            solver={"t_end": self.settings.t_end, "dt": self.settings.dt},
        )
        return build_problem(derived)

    def laplace_checks(self, problem: Problem, threads: int) -> tuple[list[CheckResult], dict]:
        scenario = problem.scenario
        if problem.order.is_constant and problem.op.self_adjoint:
            method, eig = SolveMethod.SPECTRAL, eigensystem(problem.op, problem.op.n)
        else:
            method, eig = SolveMethod.CONTOUR, None

        u = duhamel_solve(problem.op, problem.order, problem.mu, problem.h, method, eig=eig, threads=threads)
        report = verify_weak_solution(u, problem.op, problem.order, problem.mu, problem.h, scenario.solver.p_values)

        tolerance = scenario.tolerances.weak_residual
        checks = [
            CheckResult.at_most(f"laplace_residual_p={p:g}", residual, tolerance, detail=f"tail {tail:.1e}")
            for p, residual, tail in zip(report.p, report.residuals, report.tail_bounds)
        ]
        return checks, {"method": method.value, "p0": report.p0}

    def relaxation_checks(self, beta: float) -> list[CheckResult]:
        settings = self.settings
        grid = TimeGrid.uniform(1.0, settings.relaxation_dt)
        h = TimeSignal.from_function(grid, lambda t: smooth_bump(t, 0.4, 0.3))

        checks = []
        with ProgressBar(total=len(settings.relaxation_lambdas), title="Relaxation equations") as bar:
            for lam in settings.relaxation_lambdas:
                report = verify_relaxation_ode(h, beta, lam)
                checks.append(
                    CheckResult.holds(
                        f"relaxation_refines_lambda={lam:g}",
                        report.residual_refined < report.residual,
                        detail=f"{report.residual:.2e} -> {report.residual_refined:.2e}",
                    )
                )
                checks.append(
                    CheckResult.at_least(f"relaxation_rate_lambda={lam:g}", report.rate or 0.0, settings.min_rate)
                )
                bar.progress()
        return checks

    def mollification_checks(self, problem: Problem, threads: int) -> tuple[list[CheckResult], dict]:
        settings = self.settings
        lo, hi = settings.source_support
        grid = problem.grid
        indicator = TimeSignal(grid=grid, values=np.where((grid.t >= lo) & (grid.t <= hi), 1.0, 0.0))

        method = SolveMethod.SPECTRAL if problem.order.is_constant and problem.op.self_adjoint else SolveMethod.CONTOUR
        report = mollified_mu_convergence(
            problem.op,
            problem.order,
            indicator,
            problem.h,
            settings.widths,
            p=settings.mollification_p,
            method=method,
            threads=threads,
        )
        checks = [
            CheckResult.holds("mollification_monotone", report.monotone, detail=", ".join(f"{g:.2e}" for g in report.gaps)),
            CheckResult.at_most("mollification_terminal_gap", report.gaps[-1], settings.terminal_gap),
        ]
        return checks, {"mollification_gaps": report.gaps, "mollification_rate": report.rate}

    def run(self, scenario: Scenario, *, threads: int = 1) -> SuiteResult:
        problem = self.problem(scenario)

        checks, details = self.laplace_checks(problem, threads)
        checks += self.relaxation_checks(problem.order.alphaM if problem.order.alphaM < 2 else 1.0)
        mollification, extra = self.mollification_checks(problem, threads)
        checks += mollification
        details.update(extra)

        logger.info(f"Weak solution: {sum(c.passed for c in checks)}/{len(checks)} checks passed")
        return SuiteResult(name=self.display_name, settings=self.settings.dict(), checks=checks, details=details)
