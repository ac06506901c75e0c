"""Scenario files: the YAML description of one experiment, its validation and its canonical form."""

from __future__ import annotations

import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Any, Optional, Sequence, Union

import numpy as np
import pydantic as pd
import yaml

from fracsource.core.exceptions import HypothesisViolation, ScenarioParseError
from fracsource.core.models.arrays import ArrayModel, FloatArray
from fracsource.core.models.enum import BasisKind, BoundaryCondition, Experiment, ProfileKind, SolveMethod
from fracsource.core.numerics.fractional_time import TimeGrid, TimeSignal, smooth_bump
from fracsource.core.numerics.grid_elliptic import (
    CoefficientSet,
    DiscreteOperator,
    SpatialMesh,
    assemble_operator,
    control_time,
)
from fracsource.core.numerics.inverse import (
    DECONVOLUTION_CUTOFF,
    DEFAULT_BASIS_SIZE,
    DEFAULT_SENSORS,
    SUPPORT_THRESHOLD,
    SVD_CUTOFF,
    check_variable_order_geometry,
)
from fracsource.core.numerics.solution_operators import DEFAULT_POWER_ITERATIONS, DEFAULT_THETA, OrderField

logger = logging.getLogger("fracsource")

Interval = tuple[float, float]


def _as_intervals(v: Any) -> Any:
    # a single [lo, hi] pair is shorthand for a one-element list
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return [v]
    return v


def _as_terms(v: Any) -> Any:
    if isinstance(v, (int, float)):
        return [{"kind": ProfileKind.CONSTANT.value, "value": v}]
    if isinstance(v, dict):
        return [v]
    return v


def _merge(target: dict, updates: dict) -> None:
    for key, value in updates.items():
        if isinstance(value, dict) and isinstance(target.get(key), dict):
            _merge(target[key], value)
        else:
            target[key] = value


def _check_intervals(v: Optional[list[Interval]]) -> Optional[list[Interval]]:
    for lo, hi in v or []:
        if hi <= lo:
            raise ValueError(f"Empty interval [{lo}, {hi}]")
    return v


class Profile(pd.BaseModel):
    """Named closed-form profile. Fields given as a list of profiles are their sum.

    - constant: `value`
    - affine: `value + Σ slope_k x_k`
    - bump: `value` times the smooth bump of the box `support`
    - indicator: `value` on the box `support`, zero elsewhere
    - sine: `offset + value Π sin(frequency π x_k)`, cut to `support` when given
    - table: nodal `values`, one per mesh node
    """

    kind: ProfileKind = ProfileKind.CONSTANT
    value: float = 1.0
    slope: list[float] = []
    support: Optional[list[Interval]] = None
    frequency: float = 1.0
    offset: float = 0.0
    values: Optional[list[float]] = None

    class Config:
        extra = pd.Extra.forbid

    _support_shorthand = pd.validator("support", pre=True, allow_reuse=True)(_as_intervals)
    _support_nonempty = pd.validator("support", allow_reuse=True)(_check_intervals)

    @pd.root_validator(skip_on_failure=True)
    def validate_kind(cls, values: dict) -> dict:
        kind = values["kind"]
        if kind in (ProfileKind.BUMP, ProfileKind.INDICATOR) and not values.get("support"):
            raise ValueError(f"A {kind.value} profile needs a support")
        if kind == ProfileKind.AFFINE and not values.get("slope"):
            raise ValueError("An affine profile needs a slope")
        if kind == ProfileKind.TABLE and values.get("values") is None:
            raise ValueError("A table profile needs nodal values")
        return values

    @property
    def support_end(self) -> Optional[float]:
        """Right end of the support along the first axis, None for profiles without one."""
        if self.kind in (ProfileKind.BUMP, ProfileKind.INDICATOR, ProfileKind.SINE) and self.support:
            return self.support[0][1]
        return None

    def _boxes(self, n_axes: int) -> list[Interval]:
        assert self.support is not None
        if len(self.support) != n_axes:
            raise ValueError(f"Support {self.support} does not match {n_axes} coordinate axes")
        return self.support

    def evaluate(self, *coords: np.ndarray) -> FloatArray:
        coords = tuple(np.asarray(x, dtype=float) for x in coords)
        shape = coords[0].shape

        if self.kind == ProfileKind.CONSTANT:
            return np.full(shape, self.value)

        if self.kind == ProfileKind.AFFINE:
            if len(self.slope) != len(coords):
                raise ValueError(f"Affine slope {self.slope} does not match {len(coords)} coordinate axes")
            return self.value + sum(s * x for s, x in zip(self.slope, coords))

        if self.kind == ProfileKind.BUMP:
            out = np.full(shape, self.value)
            for x, (lo, hi) in zip(coords, self._boxes(len(coords))):
                out *= smooth_bump(x, 0.5 * (lo + hi), 0.5 * (hi - lo))
            return out

        if self.kind == ProfileKind.INDICATOR:
            inside = np.ones(shape, dtype=bool)
            for x, (lo, hi) in zip(coords, self._boxes(len(coords))):
                inside &= (x >= lo) & (x <= hi)
            return np.where(inside, self.value, 0.0)

        if self.kind == ProfileKind.SINE:
            out = np.full(shape, self.value)
            for x in coords:
                out *= np.sin(self.frequency * np.pi * x)
            out += self.offset
            if self.support:
                for x, (lo, hi) in zip(coords, self._boxes(len(coords))):
                    out[(x < lo) | (x > hi)] = 0.0
            return out

        values = np.asarray(self.values, dtype=float)
        if values.shape != shape:
            raise ValueError(f"Table has {values.size} values, expected {shape[0]}")
        return values


def evaluate_terms(terms: Sequence[Profile], *coords: np.ndarray) -> FloatArray:
    return sum((term.evaluate(*coords) for term in terms), np.zeros(np.shape(coords[0])))


class MeshSpec(pd.BaseModel):
    dimension: int = pd.Field(1, ge=1, le=2)
    extent: list[Interval] = [(0.0, 1.0)]
    n: list[int] = pd.Field([48], description="Interior nodes per axis; one value applies to every axis.")

    class Config:
        extra = pd.Extra.forbid

    _extent_shorthand = pd.validator("extent", pre=True, allow_reuse=True)(_as_intervals)
    _extent_nonempty = pd.validator("extent", allow_reuse=True)(_check_intervals)

    @pd.validator("n", pre=True)
    def validate_n(cls, v: Union[int, list[int]]) -> list[int]:
        return [v] if isinstance(v, int) else v

    @pd.root_validator(skip_on_failure=True)
    def validate_axes(cls, values: dict) -> dict:
        if len(values["extent"]) != values["dimension"]:
            raise ValueError(f"Need one extent interval per axis, got {len(values['extent'])}")
        if len(values["n"]) not in (1, values["dimension"]) or min(values["n"]) < 1:
            raise ValueError(f"Invalid node counts {values['n']}")
        return values

    def build(self) -> SpatialMesh:
        n = self.n * self.dimension if len(self.n) == 1 else self.n
        return SpatialMesh.uniform(self.extent, n)


class CoefficientSpec(pd.BaseModel):
    a: list[Profile] = [Profile()]
    b: Optional[list[Profile]] = None
    c: list[Profile] = [Profile()]
    rho: list[Profile] = [Profile()]
    kappa: Optional[float] = pd.Field(None, gt=0)
    q: Optional[float] = pd.Field(None, description="Integrability exponent of c; recorded, not used.")
    boundary: BoundaryCondition = BoundaryCondition.DIRICHLET

    class Config:
        extra = pd.Extra.forbid

    _terms = pd.validator("a", "b", "c", "rho", pre=True, allow_reuse=True)(_as_terms)


class OrderRegion(pd.BaseModel):
    region: list[Interval]
    alpha: float

    _region_shorthand = pd.validator("region", pre=True, allow_reuse=True)(_as_intervals)
    _region_nonempty = pd.validator("region", allow_reuse=True)(_check_intervals)


class OrderSpec(pd.BaseModel):
    """Either a constant order `alpha` or a `partition` into subdomains with one order each."""

    alpha: Optional[float] = None
    partition: Optional[list[OrderRegion]] = None

    class Config:
        extra = pd.Extra.forbid

    @pd.root_validator(skip_on_failure=True)
    def validate_choice(cls, values: dict) -> dict:
        alpha, partition = values.get("alpha"), values.get("partition")
        if (alpha is None) == (partition is None):
            raise ValueError("Give exactly one of alpha and partition")
        if alpha is not None and not 0 < alpha <= 2:
            raise HypothesisViolation("order-regime", "a constant order must lie in (0, 2]", alpha)
        return values

    @property
    def is_constant(self) -> bool:
        return self.alpha is not None or len({r.alpha for r in self.partition or []}) == 1

    def build(self, mesh: SpatialMesh) -> OrderField:
        if self.alpha is not None:
            return OrderField.constant(mesh, self.alpha)
        assert self.partition is not None
        return OrderField.piecewise(mesh, [r.region for r in self.partition], [r.alpha for r in self.partition])


class SourceSpec(pd.BaseModel):
    mu: list[Profile]
    h: list[Profile]
    T0: float = pd.Field(..., gt=0, description="μ ≢ 0 on (0, T₀) and μ is known there.")

    class Config:
        extra = pd.Extra.forbid

    _terms = pd.validator("mu", "h", pre=True, allow_reuse=True)(_as_terms)


class ObservationSettings(pd.BaseModel):
    omega: list[Interval]
    obstacle: Optional[list[Interval]] = pd.Field(None, description="The set 𝒪 of the variable-order results.")
    h_region: Optional[list[Interval]] = pd.Field(None, description="Source region of the locality sweep.")
    t1: float = pd.Field(0.0, ge=0)
    T: float = pd.Field(..., gt=0)
    n_sensors: int = pd.Field(DEFAULT_SENSORS, ge=1)

    class Config:
        extra = pd.Extra.forbid

    _shorthand = pd.validator("omega", "obstacle", "h_region", pre=True, allow_reuse=True)(_as_intervals)
    _nonempty = pd.validator("omega", "obstacle", "h_region", allow_reuse=True)(_check_intervals)

    @pd.root_validator(skip_on_failure=True)
    def validate_window(cls, values: dict) -> dict:
        if values["t1"] >= values["T"]:
            raise HypothesisViolation("window", "the observation window needs T₁ < T", (values["t1"], values["T"]))
        return values


class SolverSpec(pd.BaseModel):
    method: SolveMethod = SolveMethod.CONTOUR
    dt: float = pd.Field(1e-3, gt=0)
    t_end: Optional[float] = pd.Field(None, gt=0, description="Defaults to the end of the observation window.")
    theta: float = pd.Field(DEFAULT_THETA, gt=math.pi / 2, lt=math.pi)
    n_modes: Optional[int] = pd.Field(None, ge=1, description="Eigenpairs of the spectral method; all by default.")
    basis: BasisKind = BasisKind.EIGEN
    n_basis: int = pd.Field(DEFAULT_BASIS_SIZE, ge=1)
    svd_cutoff: float = pd.Field(SVD_CUTOFF, gt=0, lt=1)
    deconvolution_cutoff: float = pd.Field(DECONVOLUTION_CUTOFF, gt=0, lt=1)
    support_threshold: float = pd.Field(SUPPORT_THRESHOLD, gt=0, lt=1)
    power_iterations: int = pd.Field(DEFAULT_POWER_ITERATIONS, ge=1)
    p_values: list[float] = [1.0, 2.0, 4.0]
    t1_values: Optional[list[float]] = None
    factors: list[float] = [0.5, 1.0, 1.5]

    class Config:
        extra = pd.Extra.forbid


class ToleranceSpec(pd.BaseModel):
    h_error: float = pd.Field(1e-2, gt=0)
    mu_error: float = pd.Field(5e-2, gt=0)
    variable_order_error: float = pd.Field(2e-2, gt=0)
    weak_residual: float = pd.Field(1e-3, gt=0)
    certificate_ratio: float = pd.Field(10.0, gt=0)
    energy: float = pd.Field(1e-8, gt=0)

    class Config:
        extra = pd.Extra.forbid


_OBSERVED = (
    Experiment.INVERT_H,
    Experiment.INVERT_MU_H,
    Experiment.HYPERBOLIC,
    Experiment.VARIABLE_ORDER,
    Experiment.DELAYED_WINDOW,
)


class Scenario(pd.BaseModel):
    experiment: Experiment = Experiment.FORWARD
    seed: int = pd.Field(0, ge=0)
    mesh: MeshSpec = MeshSpec()
    coefficients: CoefficientSpec = CoefficientSpec()
    order: OrderSpec
    source: SourceSpec
    observation: Optional[ObservationSettings] = None
    solver: SolverSpec = SolverSpec()
    tolerances: ToleranceSpec = ToleranceSpec()

    class Config:
        extra = pd.Extra.forbid

    @pd.root_validator(skip_on_failure=True)
    def validate_experiment(cls, values: dict) -> dict:
        experiment, order, source = values["experiment"], values["order"], values["source"]
        observation, solver = values.get("observation"), values["solver"]

        if solver.method == SolveMethod.L1 and experiment != Experiment.FORWARD:
            raise ValueError("L1 time stepping is a forward solver only")

        if observation is None:
            if experiment in _OBSERVED:
                raise ValueError(f"The {experiment.value} experiment needs an observation section")
            if solver.t_end is None:
                raise ValueError("Give solver.t_end or an observation window")
            return values

        if experiment in _OBSERVED and observation.T < source.T0:
            raise HypothesisViolation("window", "the observation must not end before T₀", (observation.T, source.T0))
        if experiment == Experiment.INVERT_MU_H and observation.t1 >= source.T0:
            raise HypothesisViolation("c2a", "μ is only known on (0, T₀), so T₁ < T₀ is needed", observation.t1)
        if experiment == Experiment.VARIABLE_ORDER and not 0 < observation.t1 < source.T0:
            raise HypothesisViolation("window", "the delayed window needs 0 < T₁ < T₀", observation.t1)

        if experiment == Experiment.HYPERBOLIC:
            if order.alpha != 2:
                raise HypothesisViolation("order-regime", "the hyperbolic experiment needs α = 2", order.alpha)
            if values["mesh"].dimension != 1:
                raise ValueError("The hyperbolic experiment runs on 1D meshes")
        if experiment == Experiment.DELAYED_WINDOW and order.alpha is None:
            raise ValueError("The delayed-window experiment needs a constant order")

        needs_obstacle = experiment == Experiment.VARIABLE_ORDER or (
            experiment == Experiment.INVERT_MU_H and not order.is_constant
        )
        if needs_obstacle and observation.obstacle is None:
            raise HypothesisViolation("t3b", "variable-order recovery needs the set 𝒪 (observation.obstacle)")
        return values

    def derive(self, **updates: Any) -> Scenario:
        """Validated copy; mapping updates merge into the matching sections, other values replace them."""
        data = json.loads(self.json())
        _merge(data, updates)
        return Scenario.parse_obj(data)

    @property
    def t_end(self) -> float:
        if self.solver.t_end is not None:
            return self.solver.t_end
        assert self.observation is not None
        return self.observation.T

    @classmethod
    def default(cls, experiment: Experiment = Experiment.FORWARD) -> Scenario:
        """Constant order 1/2 on (0, 1), μ a bump on (0, 0.5), h a bump on (0.1, 0.4), ω = (0.8, 1)."""

        return cls(
            experiment=experiment,
            order=OrderSpec(alpha=0.5),
            source=SourceSpec(
                mu=[Profile(kind=ProfileKind.BUMP, support=[(0.0, 0.5)])],
                h=[Profile(kind=ProfileKind.BUMP, support=[(0.1, 0.4)])],
                T0=0.5,
            ),
            observation=ObservationSettings(omega=[(0.8, 1.0)], T=1.0),
        )


class Problem(ArrayModel):
    """Discrete objects of a scenario: mesh, operator, order field, source signal and nodal h."""

    scenario: Scenario
    op: DiscreteOperator
    order: OrderField
    mu: TimeSignal
    h: np.ndarray

    @property
    def mesh(self) -> SpatialMesh:
        return self.op.mesh

    @property
    def grid(self) -> TimeGrid:
        return self.mu.grid

    @property
    def omega_mask(self) -> np.ndarray:
        assert self.scenario.observation is not None
        return self.op.region_mask(self.scenario.observation.omega)

    @property
    def obstacle_mask(self) -> Optional[np.ndarray]:
        observation = self.scenario.observation
        if observation is None or observation.obstacle is None:
            return None
        return self.op.region_mask(observation.obstacle)


def _build_coefficients(spec: CoefficientSpec, mesh: SpatialMesh) -> CoefficientSet:
    coords = [mesh.nodes[:, k] for k in range(mesh.dimension)]
    a = evaluate_terms(spec.a, *coords)
    c = evaluate_terms(spec.c, *coords)
    rho = evaluate_terms(spec.rho, *coords)
    if spec.b is not None and mesh.dimension != 1:
        raise ValueError("A drift b is only supported on 1D meshes")
    b = None if spec.b is None else evaluate_terms(spec.b, *coords)

    if float(a.min()) <= 0:
        raise HypothesisViolation("ellipticity", "a must be bounded below by a positive constant", float(a.min()))
    if spec.kappa is None and float(c.min()) <= 0:
        raise HypothesisViolation("c-kappa", "c must be bounded below by a positive κ", float(c.min()))
    if float(rho.min()) <= 0:
        raise HypothesisViolation("eq-rho", "ρ must be bounded below by a positive constant", float(rho.min()))

    return CoefficientSet.build(mesh, a=a, b=b, c=c, rho=rho, kappa=spec.kappa, boundary=spec.boundary)


def _time_grid(t_end: float, dt: float) -> TimeGrid:
    return TimeGrid(dt=dt, n_steps=max(int(math.ceil(t_end / dt - 1e-9)), 2))


def build_problem(scenario: Scenario) -> Problem:
    mesh = scenario.mesh.build()
    op = assemble_operator(mesh, _build_coefficients(scenario.coefficients, mesh))
    order = scenario.order.build(mesh)

    t_end = scenario.t_end
    if scenario.experiment == Experiment.HYPERBOLIC:
        assert scenario.observation is not None
        T_star = control_time(mesh, op.coeffs, scenario.observation.omega, scenario.source.T0)
        t_end = max(t_end, max(scenario.solver.factors) * T_star)
    grid = _time_grid(t_end, scenario.solver.dt)

    source = scenario.source
    ends = [term.support_end for term in source.mu]
    bound = max(ends) if ends and all(end is not None for end in ends) else None  # type: ignore[type-var]
    mu = TimeSignal.from_function(grid, lambda t: evaluate_terms(source.mu, t), T0=source.T0, support_bound=bound)

    coords = [mesh.nodes[:, k] for k in range(mesh.dimension)]
    h = op.restrict(evaluate_terms(source.h, *coords))
    logger.debug(f"Built problem: {op.n} unknowns, {grid.size} time nodes, orders {order.orders}")
    return Problem(scenario=scenario, op=op, order=order, mu=mu, h=h)


def check_hypotheses(problem: Problem) -> list[str]:
    """Validate the hypotheses of the scenario's experiment; returns the log of conditions that hold."""

    scenario, op = problem.scenario, problem.op
    experiment = scenario.experiment
    log = [
        f"ellipticity: a ≥ κ = {op.coeffs.kappa:.6g}",
        f"c-kappa: min c = {float(op.coeffs.c.min()):.6g}",
        f"eq-rho: ρ ∈ [{float(op.coeffs.rho.min()):.6g}, {float(op.coeffs.rho.max()):.6g}]",
    ]
    if not problem.order.is_constant:
        log.append(f"vo: orders {problem.order.orders}")
    if experiment == Experiment.FORWARD:
        return log

    T0 = scenario.source.T0
    if not np.any(problem.mu.values[problem.grid.window(0.0, T0)]):
        raise HypothesisViolation("t1b", f"μ vanishes identically on (0, {T0:g})")
    log.append(f"t1b: μ ≢ 0 on (0, {T0:g})")

    assert scenario.observation is not None
    omega_mask = problem.omega_mask
    h = problem.h

    if experiment in (Experiment.INVERT_H, Experiment.INVERT_MU_H) and problem.order.is_constant:
        alpha = problem.order.alpha
        if alpha <= 1 and not np.allclose(op.coeffs.rho, 1.0):
            raise HypothesisViolation("order-regime", "orders in (0, 1] need ρ ≡ 1", alpha)
        if 1 < alpha < 2 and not op.self_adjoint:
            raise HypothesisViolation("order-regime", "orders in (1, 2) need b ≡ 0", alpha)
        if alpha == 1 and experiment == Experiment.INVERT_H and scenario.observation.t1 > 0:
            raise HypothesisViolation("tt2aa", "α = 1 needs T₁ = 0; sweep T₁ with the delayed-window experiment")
        log.append(f"order-regime: α = {alpha:g}")

    if experiment in (Experiment.INVERT_H, Experiment.INVERT_MU_H, Experiment.VARIABLE_ORDER):
        tag = {Experiment.INVERT_MU_H: "c2aa", Experiment.VARIABLE_ORDER: "t3aa"}.get(experiment, "h-omega")
        if np.any(h[omega_mask]):
            raise HypothesisViolation(tag, "h must vanish in ω")
        log.append(f"{tag}: h = 0 in ω")

    if experiment == Experiment.INVERT_MU_H and not np.any(h):
        raise HypothesisViolation("c2aa", "h must not vanish identically")

    if scenario.observation.obstacle is not None and not problem.order.is_constant:
        check_variable_order_geometry(op, problem.order, scenario.observation.omega, scenario.observation.obstacle)
        log.append("t3b: interfaces inside 𝒪")
        log.append("t3aa: ω ∩ 𝒪 ≠ ∅")
        obstacle_mask = problem.obstacle_mask
        if experiment == Experiment.INVERT_MU_H and np.any(h[obstacle_mask]):
            raise HypothesisViolation("c2aa", "h must vanish in ω ∪ 𝒪")

    if experiment == Experiment.HYPERBOLIC and not op.self_adjoint:
        raise HypothesisViolation("order-regime", "the hyperbolic experiment needs b ≡ 0")
    return log


def _locate(node: Optional[yaml.Node], loc: Sequence[Union[int, str]]) -> tuple[Optional[int], Optional[int]]:
    """Line and column (1-based) of the YAML node at a pydantic error location."""

    if node is None:
        return None, None
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            child = next((value for name, value in node.value if name.value == key), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            child = node.value[key]
        else:
            child = None
        if child is None:
            break
        node = child
    return node.start_mark.line + 1, node.start_mark.column + 1


def parse_scenario(text: str, path: str = "<scenario>", experiment: Optional[Experiment] = None) -> Scenario:
    """Schema validation only; `experiment` replaces the experiment named in the file."""

    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark
        line, column = (mark.line + 1, mark.column + 1) if mark is not None else (None, None)
        raise ScenarioParseError(path, str(e.problem), line, column) from e

    if not isinstance(data, dict):
        raise ScenarioParseError(path, "a scenario must be a mapping", 1, 1)
    if experiment is not None:
        data["experiment"] = experiment.value

    try:
        return Scenario.parse_obj(data)
    except pd.ValidationError as e:
        error = e.errors()[0]
        loc = [part for part in error["loc"] if part != "__root__"]
        line, column = _locate(node, loc)
        where = ".".join(str(part) for part in loc) or "scenario"
        raise ScenarioParseError(path, f"{where}: {error['msg']}", line, column) from e


def load_scenario(path: Union[str, Path], experiment: Optional[Experiment] = None) -> Scenario:
    """Parse and fully validate a scenario file, including the hypotheses of its experiment."""

    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ScenarioParseError(str(path), f"cannot read scenario: {e.strerror}") from e

    scenario = parse_scenario(text, str(path), experiment)
    check_hypotheses(build_problem(scenario))
    logger.debug(f"Loaded scenario {path} ({scenario.experiment.value})")
    return scenario


def dump_scenario(scenario: Scenario) -> str:
    """Canonical YAML with every default filled in."""
    return yaml.safe_dump(json.loads(scenario.json()), sort_keys=False, allow_unicode=True)


def scenario_hash(scenario: Scenario) -> str:
    canonical = scenario.json(sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


__all__ = [
    "Profile",
    "MeshSpec",
    "CoefficientSpec",
    "OrderRegion",
    "OrderSpec",
    "SourceSpec",
    "ObservationSettings",
    "SolverSpec",
    "ToleranceSpec",
    "Scenario",
    "Problem",
    "evaluate_terms",
    "build_problem",
    "check_hypotheses",
    "parse_scenario",
    "load_scenario",
    "dump_scenario",
    "scenario_hash",
]
