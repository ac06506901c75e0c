import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from fracsource.core import artifacts
from fracsource.core.abstract.suites import BaseSuite
from fracsource.core.exceptions import FracSourceError, HypothesisViolation, NumericalFailure, ScenarioParseError
from fracsource.core.models.config import settings
from fracsource.core.models.enum import Experiment, SolveMethod
from fracsource.core.models.result import CheckResult, Result, RunManifest
from fracsource.core.models.scenario import (
    Problem,
    Scenario,
    build_problem,
    check_hypotheses,
    load_scenario,
    scenario_hash,
)
from fracsource.core.numerics.forward import (
    SpaceTimeField,
    duhamel_solve,
    timestep_solve_L1,
    wave_arrival_time,
    wave_energy,
    wave_solve,
)
from fracsource.core.numerics.fractional_time import TimeSignal
from fracsource.core.numerics.grid_elliptic import EigenSystem, control_time, eigensystem, riemannian_distance
from fracsource.core.numerics.inverse import (
    InverseReport,
    ObservationSpec,
    build_basis,
    delayed_window_experiment,
    hyperbolic_uniqueness_experiment,
    locality_sweep,
    observe,
    project_onto_basis,
    reconstruct_h,
    reconstruct_mu_h,
    relative_error,
    variable_order_experiment,
)
from fracsource.utils.version import get_version

logger = logging.getLogger("fracsource")

ENERGY_SAMPLES = 64

Outputs = dict[str, Path]


def custom_print(*objects, rich: bool = True, force: bool = False) -> None:
    """
    A wrapper around `rich.print` that prints only if `settings.quiet` is False.
    """
    print_func = settings.logging_console.print if rich else print
    if not settings.quiet or force:
        print_func(*objects)  # type: ignore


class CriticalRunnerException(Exception): ...


def _eigensystem(problem: Problem) -> EigenSystem:
    n_modes = problem.scenario.solver.n_modes or problem.op.n
    return eigensystem(problem.op, min(n_modes, problem.op.n))


def forward_field(problem: Problem, h: Optional[np.ndarray] = None, *, threads: int = 1) -> SpaceTimeField:
    """u on the problem grid for the source μ(t)h, with the solver method of the scenario."""

    h = problem.h if h is None else h
    method = problem.scenario.solver.method
    order = problem.order
    if order.is_constant and order.alpha == 2:
        return wave_solve(_eigensystem(problem), problem.mu, h)
    if method == SolveMethod.L1:
        return timestep_solve_L1(problem.op, order, problem.mu, h)
    eig = _eigensystem(problem) if method == SolveMethod.SPECTRAL else None
    return duhamel_solve(problem.op, order, problem.mu, h, method, eig=eig, threads=threads)


def _observation(problem: Problem) -> ObservationSpec:
    observation = problem.scenario.observation
    assert observation is not None
    return ObservationSpec.build(
        problem.op, observation.omega, observation.t1, observation.T, observation.n_sensors, problem.scenario.source.T0
    )


def _flag_checks(report: InverseReport, skip: tuple[str, ...] = ()) -> list[CheckResult]:
    return [CheckResult.holds(name, value) for name, value in report.flags.items() if name not in skip]


def _relative_l1(estimate: TimeSignal, truth: TimeSignal) -> float:
    reference = truth.values[: estimate.grid.size]
    scale = float(np.sum(np.abs(reference)))
    defect = float(np.sum(np.abs(estimate.values - reference)))
    return defect / scale if scale > 0 else defect


def _run_forward(problem: Problem, out_dir: Optional[Path], threads: int) -> tuple[Result, Outputs]:
    u = forward_field(problem, threads=threads)
    checks = [
        CheckResult.holds("finite", bool(np.all(np.isfinite(u.values)))),
        CheckResult.holds("causal", u.is_causal(), detail=f"source onset {u.onset}"),
    ]
    details = {"method": problem.scenario.solver.method.value, "max_abs": float(np.abs(u.values).max())}

    if problem.order.is_constant and problem.order.alpha == 2 and np.any(problem.h):
        drift = _energy_drift(problem)
        checks.append(CheckResult.at_most("energy_drift", drift, problem.scenario.tolerances.energy))

    outputs: Outputs = {}
    if out_dir is not None:
        outputs["field"] = artifacts.write_field_csv(out_dir / artifacts.FIELD_FILE, u, problem.op)
    return Result(name=Experiment.FORWARD.value, checks=checks, details=details), outputs


def _energy_drift(problem: Problem) -> float:
    t = np.linspace(0.0, problem.grid.t_end, ENERGY_SAMPLES)
    energy = wave_energy(problem.op, _eigensystem(problem), problem.h, t)
    return float(np.max(np.abs(energy - energy[0])) / energy[0])


def _run_invert_h(problem: Problem, out_dir: Optional[Path], threads: int) -> tuple[Result, Outputs]:
    scenario, op = problem.scenario, problem.op
    solver = scenario.solver
    spec = _observation(problem)
    eig = _eigensystem(problem) if solver.method == SolveMethod.SPECTRAL else None

    basis = build_basis(op, solver.basis, solver.n_basis, exclude=spec.omega_mask)
    truth = project_onto_basis(op, basis, problem.h)
    data = observe(forward_field(problem, truth, threads=threads), spec)

    logger.info("Recovering h from the synthetic observations")
    h, report = reconstruct_h(
        op,
        problem.order,
        problem.mu,
        spec,
        data,
        basis=basis,
        method=solver.method,
        eig=eig,
        svd_cutoff=solver.svd_cutoff,
        support_threshold=solver.support_threshold,
        theta=solver.theta,
        threads=threads,
    )
    error = relative_error(op, h, truth)
    report = report.copy(update={"errors": {"h": error, "projection": relative_error(op, truth, problem.h)}})
    checks = [
        CheckResult.at_most("h_error", error, scenario.tolerances.h_error),
        CheckResult.holds("certificate_positive", (report.certificate or 0.0) > 0, f"σ={report.certificate:.3e}"),
        *_flag_checks(report),
    ]

    outputs: Outputs = {}
    if out_dir is not None:
        outputs["h"] = artifacts.write_h_csv(out_dir / artifacts.H_FILE, op, h)
        outputs["singular_values"] = artifacts.write_singular_values_csv(
            out_dir / artifacts.SINGULAR_VALUES_FILE, report.singular_values
        )
    return Result(name=Experiment.INVERT_H.value, checks=checks, report=report), outputs


def _run_invert_mu_h(problem: Problem, out_dir: Optional[Path], threads: int) -> tuple[Result, Outputs]:
    scenario, op = problem.scenario, problem.op
    solver = scenario.solver
    spec = _observation(problem)
    eig = _eigensystem(problem) if solver.method == SolveMethod.SPECTRAL else None

    obstacle = problem.obstacle_mask
    exclude = spec.omega_mask if obstacle is None else spec.omega_mask | obstacle
    basis = build_basis(op, solver.basis, solver.n_basis, exclude=exclude)
    truth = project_onto_basis(op, basis, problem.h)
    data = observe(forward_field(problem, truth, threads=threads), spec)

    logger.info("Recovering μ and h from the synthetic observations")
    mu, h, report = reconstruct_mu_h(
        op,
        problem.order,
        problem.mu,
        spec,
        data,
        basis=basis,
        method=solver.method,
        eig=eig,
        svd_cutoff=solver.svd_cutoff,
        support_threshold=solver.support_threshold,
        deconvolution_cutoff=solver.deconvolution_cutoff,
        obstacle=obstacle,
        theta=solver.theta,
        threads=threads,
    )
    errors = {
        "h": relative_error(op, h, truth),
        "mu": _relative_l1(mu, problem.mu),
        "projection": relative_error(op, truth, problem.h),
    }
    report = report.copy(update={"errors": errors})
    checks = [
        CheckResult.at_most("h_error", errors["h"], scenario.tolerances.h_error),
        CheckResult.at_most("mu_error", errors["mu"], scenario.tolerances.mu_error, detail="relative L¹ on (0, T)"),
        *_flag_checks(report),
    ]

    outputs: Outputs = {}
    if out_dir is not None:
        outputs["h"] = artifacts.write_h_csv(out_dir / artifacts.H_FILE, op, h)
        outputs["mu"] = artifacts.write_mu_csv(out_dir / artifacts.MU_FILE, mu)
        outputs["singular_values"] = artifacts.write_singular_values_csv(
            out_dir / artifacts.SINGULAR_VALUES_FILE, report.singular_values
        )
    return Result(name=Experiment.INVERT_MU_H.value, checks=checks, report=report), outputs


def _run_hyperbolic(problem: Problem, out_dir: Optional[Path], threads: int) -> tuple[Result, Outputs]:
    scenario, op = problem.scenario, problem.op
    observation, solver = scenario.observation, scenario.solver
    assert observation is not None
    T0 = scenario.source.T0
    eig = _eigensystem(problem)

    report = hyperbolic_uniqueness_experiment(
        op,
        problem.mu,
        observation.omega,
        T0=T0,
        factors=solver.factors,
        n_sensors=observation.n_sensors,
        basis_kind=solver.basis,
        n_basis=solver.n_basis,
        eig=eig,
        svd_cutoff=solver.svd_cutoff,
        support_threshold=solver.support_threshold,
        min_ratio=scenario.tolerances.certificate_ratio,
    )
    checks = [
        CheckResult.at_least("certificate_ratio", report.markers["ratio"], scenario.tolerances.certificate_ratio),
        *_flag_checks(report, skip=("certificate_growth",)),
    ]
    details: dict = {}

    if np.any(problem.h):
        checks.append(CheckResult.at_most("energy_drift", _energy_drift(problem), scenario.tolerances.energy))

        u = wave_solve(eig, problem.mu, problem.h)
        inside = np.abs(problem.h) > 0
        coords = op.mesh.x[op.dofs][inside]
        details["arrival_time"] = wave_arrival_time(u, op.region_mask(observation.omega))
        details["travel_time"] = float(riemannian_distance(op.mesh, op.coeffs, coords, observation.omega).min())

    if observation.h_region is not None:
        T_star = control_time(op.mesh, op.coeffs, observation.omega, T0)
        locality = locality_sweep(
            op,
            problem.mu,
            observation.omega,
            observation.h_region,
            [factor * T_star for factor in solver.factors],
            T0=T0,
            n_sensors=observation.n_sensors,
            n_basis=solver.n_basis,
            eig=eig,
            svd_cutoff=solver.svd_cutoff,
        )
        details["locality"] = locality.dict(include={"markers", "sweep"})

    return Result(name=Experiment.HYPERBOLIC.value, checks=checks, report=report, details=details), {}


def _run_variable_order(problem: Problem, out_dir: Optional[Path], threads: int) -> tuple[Result, Outputs]:
    scenario = problem.scenario
    observation, solver = scenario.observation, scenario.solver
    assert observation is not None and observation.obstacle is not None

    report = variable_order_experiment(
        problem.op,
        problem.order,
        problem.mu,
        observation.omega,
        observation.obstacle,
        problem.h,
        t1=observation.t1,
        T=observation.T,
        T0=scenario.source.T0,
        n_sensors=observation.n_sensors,
        n_basis=solver.n_basis,
        svd_cutoff=solver.svd_cutoff,
        support_threshold=solver.support_threshold,
        tolerance=scenario.tolerances.variable_order_error,
        theta=solver.theta,
        threads=threads,
    )
    checks = [
        CheckResult.at_most("h_error", report.errors["h"], scenario.tolerances.variable_order_error),
        *_flag_checks(report, skip=("recovery",)),
    ]

    outputs: Outputs = {}
    if out_dir is not None and report.h is not None:
        outputs["h"] = artifacts.write_h_csv(out_dir / artifacts.H_FILE, problem.op, report.h)
        outputs["singular_values"] = artifacts.write_singular_values_csv(
            out_dir / artifacts.SINGULAR_VALUES_FILE, report.singular_values
        )
    return Result(name=Experiment.VARIABLE_ORDER.value, checks=checks, report=report), outputs


def _run_delayed_window(problem: Problem, out_dir: Optional[Path], threads: int) -> tuple[Result, Outputs]:
    scenario = problem.scenario
    observation, solver = scenario.observation, scenario.solver
    assert observation is not None

    report = delayed_window_experiment(
        problem.op,
        problem.order,
        problem.mu,
        observation.omega,
        T=observation.T,
        T0=scenario.source.T0,
        t1_values=solver.t1_values,
        n_sensors=observation.n_sensors,
        n_basis=solver.n_basis,
        method=solver.method,
        eig=_eigensystem(problem) if solver.method == SolveMethod.SPECTRAL else None,
        svd_cutoff=solver.svd_cutoff,
        support_threshold=solver.support_threshold,
        threads=threads,
    )
    return Result(name=Experiment.DELAYED_WINDOW.value, checks=_flag_checks(report), report=report), {}


EXPERIMENTS: dict[Experiment, Callable[[Problem, Optional[Path], int], tuple[Result, Outputs]]] = {
    Experiment.FORWARD: _run_forward,
    Experiment.INVERT_H: _run_invert_h,
    Experiment.INVERT_MU_H: _run_invert_mu_h,
    Experiment.HYPERBOLIC: _run_hyperbolic,
    Experiment.VARIABLE_ORDER: _run_variable_order,
    Experiment.DELAYED_WINDOW: _run_delayed_window,
}


def run_experiment(scenario: Scenario, *, out_dir: Optional[Path] = None, threads: int = 1) -> tuple[Result, Outputs]:
    """Validate the scenario's hypotheses, dispatch to its experiment and write the artifacts.

    `report.json` is written last, so that an interrupted run leaves no report behind.
    """

    problem = build_problem(scenario)
    hypotheses = check_hypotheses(problem)
    logger.info(f"Running {scenario.experiment.value} on {problem.op.n} unknowns, {problem.grid.size} time nodes")

    result, outputs = EXPERIMENTS[scenario.experiment](problem, out_dir, threads)
    result = result.copy(
        update={
            "experiment": scenario.experiment,
            "description": f"{scenario.experiment.value} ({scenario.solver.method.value})",
            "scenario_hash": scenario_hash(scenario),
            "seed": scenario.seed,
            "hypotheses": hypotheses,
        }
    )
    if out_dir is not None:
        outputs["report"] = artifacts.write_json(out_dir / artifacts.REPORT_FILE, result)
    return result, outputs


def run_suite(name: str, scenario: Optional[Scenario] = None, *, seed: int = 0, threads: int = 1) -> Result:
    SuiteType = BaseSuite.find(name)
    suite = SuiteType(SuiteType.get_settings_type()(seed=seed))
    scenario = scenario if scenario is not None else suite.default_scenario()

    logger.info(f"Running the {suite} suite")
    suite_result = suite.run(scenario, threads=threads)
    return Result(
        name=f"verify {suite}",
        description=suite.description,
        scenario_hash=scenario_hash(scenario),
        seed=seed,
        suites=[suite_result],
    )


class Runner:
    """One CLI invocation: a verification suite when `suite` is given, otherwise an experiment.

    `experiment` overrides the experiment of the scenario file; without it the file decides.
    """

    EXIT_CODES: tuple[tuple[type[BaseException], int], ...] = (
        (HypothesisViolation, 2),
        (ScenarioParseError, 2),
        (ValueError, 2),
        (NumericalFailure, 3),
        (ArithmeticError, 3),
        (CriticalRunnerException, 1),
    )

    def __init__(self, command: str, *, experiment: Optional[Experiment] = None, suite: Optional[str] = None) -> None:
        if experiment is not None and suite is not None:
            raise ValueError("A run is either an experiment or a suite")
        self.command = command
        self.experiment = experiment
        self.suite = suite
        self.manifest = RunManifest(
            command=command,
            scenario_path=str(settings.scenario_path) if settings.scenario_path else None,
            version=get_version(),
            threads=settings.threads,
            started_at=datetime.now(timezone.utc),
        )

    def _greet(self) -> None:
        custom_print(f"Running fracsource {self.manifest.version}: {self.command}")
        custom_print(f"Using formatter: {settings.format}, threads: {settings.threads}")
        custom_print("")

    def _load_scenario(self) -> Optional[Scenario]:
        if settings.scenario_path is None:
            if self.suite is None:
                raise CriticalRunnerException(f"{self.command} needs --scenario")
            return None

        scenario = load_scenario(settings.scenario_path, self.experiment)
        if settings.seed is not None:
            scenario = scenario.copy(update={"seed": settings.seed})
        self.manifest.scenario_hash = scenario_hash(scenario)
        self.manifest.seed = scenario.seed
        return scenario

    def _collect_result(self) -> Result:
        scenario = self._load_scenario()
        out_dir = settings.out_dir

        if self.suite is not None:
            seed = settings.seed if settings.seed is not None else scenario.seed if scenario is not None else 0
            self.manifest.seed = seed
            result = run_suite(self.suite, scenario, seed=seed, threads=settings.threads)
            if out_dir is not None:
                self.manifest.outputs["report"] = str(artifacts.write_json(out_dir / artifacts.REPORT_FILE, result))
            return result

        assert scenario is not None
        result, outputs = run_experiment(scenario, out_dir=out_dir, threads=settings.threads)
        self.manifest.outputs.update({name: str(path) for name, path in outputs.items()})
        self.manifest.validation_log = result.hypotheses
        return result

    def _process_result(self, result: Result) -> None:
        formatter = settings.formatter
        formatted = result.format(formatter)
        rich = getattr(formatter, "__rich_console__", False)
        custom_print(formatted, rich=rich, force=True)

    def _exit_code(self, error: BaseException) -> int:
        return next((code for kind, code in self.EXIT_CODES if isinstance(error, kind)), 1)

    def _finish(self, exit_code: int) -> int:
        self.manifest.exit_code = exit_code
        self.manifest.finished_at = datetime.now(timezone.utc)
        if settings.out_dir is not None:
            artifacts.write_json(settings.out_dir / artifacts.MANIFEST_FILE, self.manifest)
        return exit_code

    def run(self) -> int:
        """Run the Runner. The return value is the exit code of the program."""
        self._greet()
        try:
            result = self._collect_result()
            logger.info("Result collected, displaying...")
            self._process_result(result)
        except (FracSourceError, CriticalRunnerException, ValueError, ArithmeticError) as e:
            logger.critical(e)
            self.manifest.errors.append({"type": type(e).__name__, "message": str(e)})
            return self._finish(self._exit_code(e))
        except Exception as e:
            logger.exception("An unexpected error occurred")
            self.manifest.errors.append({"type": type(e).__name__, "message": str(e)})
            return self._finish(1)
        else:
            if not result.passed:
                failed = [check.name for _, check in result.all_checks if not check.passed]
                logger.error(f"Checks failed: {', '.join(failed)}")
            return self._finish(0 if result.passed else 1)


__all__ = ["custom_print", "CriticalRunnerException", "forward_field", "run_experiment", "run_suite", "Runner"]
