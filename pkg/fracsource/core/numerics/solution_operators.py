"""Solution operators S(t) of ρ∂_t^α u + 𝓛u = 0 driven through the resolvent (𝓛 + p^{α(x)}ρ)^{-1}.

S(t)h is the inverse Laplace transform of (𝓛 + p^{α(x)}ρ)^{-1}h, evaluated either as a Mittag-Leffler
sum over eigenmodes (constant order, b ≡ 0) or as a quadrature sum over a truncated contour
γ(δ, θ) = γ₋ ∪ γ₀ ∪ γ₊ shifted by s₀.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, Sequence, Union

import numpy as np
import pydantic as pd
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numpy.polynomial import chebyshev, legendre
from numpy.typing import ArrayLike
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from fracsource.core.exceptions import HypothesisViolation, ResolventError
from fracsource.core.models.arrays import ArrayModel, FloatArray
from fracsource.core.numerics.grid_elliptic import DiscreteOperator, EigenSystem, RegionSpec, SpatialMesh
from fracsource.core.numerics.special_functions import mittag_leffler_real

logger = logging.getLogger("fracsource")

SpatialField = np.ndarray  # degree-of-freedom values of a field on the mesh

DEFAULT_THETA = 3 * np.pi / 4
DEFAULT_EPSILON = 1e-12
DEFAULT_ARC_NODES = 64
DEFAULT_LEG_NODES = 256
DEFAULT_POWER_ITERATIONS = 50

S0_INITIAL = 1.0
S0_ATTEMPTS = 8
# sectorial bound |p|^{α₀}·‖R(p)‖₁ accepted along a trial contour
RESOLVENT_BOUND = 1e4
SPECTRAL_TAIL_TOLERANCE = 1e-10
IMAGINARY_TOLERANCE = 1e-8


class OrderField(ArrayModel):
    """Piecewise-constant order α(x): `labels` maps every mesh node to an index into `orders`."""

    labels: np.ndarray
    orders: tuple[float, ...]

    @pd.root_validator(skip_on_failure=True)
    def validate_orders(cls, values: dict) -> dict:
        labels, orders = values["labels"], values["orders"]
        if not orders:
            raise ValueError("At least one order is required")
        if labels.ndim != 1 or labels.min() < 0 or labels.max() >= len(orders):
            raise ValueError("Every node needs the label of one of the given orders")

        if len(orders) == 1:
            if not 0 < orders[0] <= 2:
                raise ValueError(f"Order must lie in (0, 2], got {orders[0]}")
            return values

        if any(b <= a for a, b in zip(orders, orders[1:])):
            raise ValueError(f"Variable orders must be strictly increasing, got {orders}")
        if orders[0] <= 0 or orders[-1] >= 1:
            raise HypothesisViolation("vo", "variable orders must lie in (0, 1)", orders)
        if orders[-1] >= 2 * orders[0]:
            raise HypothesisViolation("vo", "admissibility α_M < min(2α₀, 1) fails", (orders[0], orders[-1]))
        return values

    @classmethod
    def constant(cls, mesh: SpatialMesh, alpha: float) -> OrderField:
        return cls(labels=np.zeros(mesh.n_nodes, dtype=np.intp), orders=(float(alpha),))

    @classmethod
    def piecewise(cls, mesh: SpatialMesh, regions: Sequence[RegionSpec], orders: Sequence[float]) -> OrderField:
        """Assign orders to disjoint regions covering every node.

        Equal orders are merged, so a partition with a single distinct order is a constant field.
        """

        if len(regions) != len(orders):
            raise ValueError("Need exactly one order per region")

        distinct = sorted(set(float(a) for a in orders))
        labels = np.full(mesh.n_nodes, -1, dtype=np.intp)
        for region, alpha in zip(regions, orders):
            mask = mesh.region_mask(region)
            shared = mask & (labels >= 0)
            if np.any(shared):
                node = mesh.nodes[np.flatnonzero(shared)[0]]
                raise HypothesisViolation("vo", "regions of the order partition must be disjoint", node.tolist())
            labels[mask] = distinct.index(float(alpha))
        if np.any(labels < 0):
            uncovered = mesh.nodes[np.flatnonzero(labels < 0)[0]]
            raise ValueError(f"Order partition does not cover the node at {uncovered}")
        return cls(labels=labels, orders=tuple(distinct))

    @property
    def is_constant(self) -> bool:
        return len(self.orders) == 1

    @property
    def alpha(self) -> float:
        if not self.is_constant:
            raise ValueError("The order field is not constant")
        return self.orders[0]

    @property
    def alpha0(self) -> float:
        return self.orders[0]

    @property
    def alphaM(self) -> float:
        return self.orders[-1]

    @property
    def nodal(self) -> FloatArray:
        return np.asarray(self.orders)[self.labels]

    def on(self, op: DiscreteOperator) -> FloatArray:
        return op.restrict(self.nodal)

    def interfaces(self, mesh: SpatialMesh) -> FloatArray:
        """Midpoints between neighbouring 1D nodes carrying different orders."""
        if mesh.dimension != 1:
            raise ValueError("Interfaces are only located on 1D meshes")
        jumps = np.flatnonzero(np.diff(self.labels) != 0)
        return 0.5 * (mesh.x[jumps] + mesh.x[jumps + 1])


class Contour(ArrayModel):
    s0: float = pd.Field(..., ge=0)
    delta: float = pd.Field(..., gt=0)
    theta: float
    radius: float
    nodes: np.ndarray
    weights: np.ndarray  # include the line element dp/(2πi)
    n_arc: int
    n_leg: int

    @pd.root_validator(skip_on_failure=True)
    def validate_geometry(cls, values: dict) -> dict:
        if not np.pi / 2 < values["theta"] < np.pi:
            raise ValueError(f"Contour angle must lie in (π/2, π), got {values['theta']}")
        if not values["radius"] > values["delta"]:
            raise ValueError(f"Truncation radius {values['radius']} must exceed δ={values['delta']}")
        return values

    @property
    def theta1(self) -> float:
        return self.theta

    @property
    def theta2(self) -> float:
        return (self.theta - np.pi / 2) / 2

    @property
    def theta0(self) -> float:
        return (self.theta + np.pi) / 2

    @property
    def size(self) -> int:
        return len(self.nodes)

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> complex:
        """(1/2πi)∮ f(p) dp over the truncated contour."""
        return complex(np.sum(self.weights * f(self.nodes)))


class ContourSolves(ArrayModel):
    """Resolvent solves R(p_k)rhs at every node of a contour, stacked along the first axis."""

    contour: Contour
    values: np.ndarray

    def evaluate(self, t: ArrayLike, power: int = 0) -> np.ndarray:
        """Σ_k w_k p_k^{−power} e^{t p_k} R(p_k)rhs for every t; complex, t along the first axis."""

        t = np.atleast_1d(np.asarray(t, dtype=float))
        p = self.contour.nodes
        factors = np.exp(np.multiply.outer(t, p)) * (self.contour.weights * p ** (-power))
        return np.tensordot(factors, self.values, axes=(1, 0))


class NormEstimateReport(pd.BaseModel):
    t: list[float]
    norms: list[float]
    alpha0: float
    alphaM: float
    small_t_slope: float
    large_t_slope: float
    small_t_exponent_bound: float
    envelope_constant: float
    monotone_violations: int


class AnalyticityReport(pd.BaseModel):
    t1: float
    t2: float
    degree: int
    max_relative_residual: float


def build_contour(
    s0: float = 0.0,
    delta: float = 1.0,
    theta: float = DEFAULT_THETA,
    radius: Optional[float] = None,
    n_arc: int = DEFAULT_ARC_NODES,
    n_leg: int = DEFAULT_LEG_NODES,
) -> Contour:
    """Gauss-Legendre nodes on the arc (in angle) and on both legs (in u = ln(r/δ)).

    Nodes run along γ₋ inwards, the arc counterclockwise and γ₊ outwards, so conjugate pairs exist.
    """

    if radius is None:
        radius = (40 + math.log(1 / DEFAULT_EPSILON)) / (abs(math.cos(theta)) / delta)
    if not np.pi / 2 < theta < np.pi:
        raise ValueError(f"Contour angle must lie in (π/2, π), got {theta}")
    if not 0 < delta < radius:
        raise ValueError(f"Need 0 < δ < R, got δ={delta}, R={radius}")
    if n_arc < 2 or n_leg < 2:
        raise ValueError("Every contour piece needs at least two nodes")

    x_arc, w_arc = legendre.leggauss(n_arc)
    angle = theta * x_arc
    arc_nodes = s0 + delta * np.exp(1j * angle)
    arc_weights = delta * np.exp(1j * angle) * theta * w_arc / (2 * np.pi)

    x_leg, w_leg = legendre.leggauss(n_leg)
    span = math.log(radius / delta)
    u = span * (x_leg + 1) / 2
    du = span * w_leg / 2
    r = delta * np.exp(u)
    upper = np.exp(1j * theta)

    plus_nodes = s0 + r * upper
    plus_weights = r * upper * du / (2j * np.pi)
    minus_nodes = np.conj(plus_nodes)[::-1]
    minus_weights = np.conj(plus_weights)[::-1]

    return Contour(
        s0=s0,
        delta=delta,
        theta=theta,
        radius=radius,
        nodes=np.concatenate([minus_nodes, arc_nodes, plus_nodes]),
        weights=np.concatenate([minus_weights, arc_weights, plus_weights]),
        n_arc=n_arc,
        n_leg=n_leg,
    )


def contour_for_times(
    t_lo: float,
    t_hi: float,
    *,
    s0: float = 0.0,
    theta: float = DEFAULT_THETA,
    epsilon: float = DEFAULT_EPSILON,
    delta_scale: float = 1.0,
    n_arc: int = DEFAULT_ARC_NODES,
    n_leg: int = DEFAULT_LEG_NODES,
) -> Contour:
    """Contour serving every t ∈ [t_lo, t_hi]: δ = delta_scale/t_hi and R = (40 + ln(1/ε))/(t_lo|cos θ|)."""

    if not 0 < t_lo <= t_hi:
        raise ValueError(f"Need 0 < t_lo ≤ t_hi, got [{t_lo}, {t_hi}]")
    delta = delta_scale / t_hi
    radius = max((40 + math.log(1 / epsilon)) / (t_lo * abs(math.cos(theta))), 2 * delta)
    return build_contour(s0=s0, delta=delta, theta=theta, radius=radius, n_arc=n_arc, n_leg=n_leg)


def admissible_theta(order: OrderField, theta: float = DEFAULT_THETA) -> float:
    """Contour angle keeping the poles at arg p = ±π/α of orders above 1 inside the contour."""

    if order.alphaM <= 1:
        return theta
    limit = np.pi / order.alphaM
    if theta < limit:
        return theta
    adjusted = (np.pi / 2 + limit) / 2
    logger.debug(f"Contour angle lowered from {theta:.4f} to {adjusted:.4f} for α={order.alphaM}")
    return adjusted


def time_windows(times: ArrayLike, ratio: float = 10.0) -> list[tuple[np.ndarray, float, float]]:
    """Group positive times into windows [t_lo, t_hi] with t_hi ≤ ratio·t_lo."""

    times = np.asarray(times, dtype=float)
    if np.any(times <= 0):
        raise ValueError("Contour evaluation needs t > 0")
    order = np.argsort(times, kind="stable")
    windows: list[tuple[np.ndarray, float, float]] = []
    start = 0
    while start < len(order):
        t_lo = times[order[start]]
        stop = start
        while stop + 1 < len(order) and times[order[stop + 1]] <= ratio * t_lo:
            stop += 1
        members = order[start : stop + 1]
        windows.append((members, float(t_lo), float(times[order[stop]])))
        start = stop + 1
    return windows


def _system(op: DiscreteOperator, alpha: FloatArray, p: complex) -> sp.csc_matrix:
    p_alpha = np.exp(alpha * np.log(complex(p)))
    return (op.matrix + sp.diags(p_alpha * op.rho)).tocsc()


def _inverse_norm_estimate(system: sp.csc_matrix, lu: spla.SuperLU) -> float:
    n = system.shape[0]
    inverse = spla.LinearOperator(
        (n, n),
        matvec=lambda x: lu.solve(np.asarray(x, dtype=complex)),
        rmatvec=lambda x: lu.solve(np.asarray(x, dtype=complex), trans="H"),
        dtype=complex,
    )
    return float(spla.onenormest(inverse))


def _factorize(op: DiscreteOperator, alpha: FloatArray, p: complex) -> tuple[sp.csc_matrix, spla.SuperLU]:
    system = _system(op, alpha, p)
    try:
        return system, spla.splu(system)
    except RuntimeError as e:
        raise ResolventError(complex(p), math.inf, f"factorization failed: {e}") from e


def _solve(op: DiscreteOperator, alpha: FloatArray, p: complex, rhs: np.ndarray) -> np.ndarray:
    system, lu = _factorize(op, alpha, p)
    w = lu.solve(np.asarray(rhs, dtype=complex))
    if not np.all(np.isfinite(w)):
        condition = spla.onenormest(system) * _inverse_norm_estimate(system, lu)
        raise ResolventError(complex(p), condition, "solution is not finite")
    return w


def resolvent_solve(op: DiscreteOperator, order: OrderField, p: complex, rhs: ArrayLike) -> np.ndarray:
    """w with (𝓛 + p^{α(x)}ρ)w = rhs on the degrees of freedom, p^{α} on the principal branch.

    `rhs` may hold several right-hand sides as columns. Real p with real data gives a real result.
    """

    rhs = np.asarray(rhs)
    if rhs.shape[0] != op.n:
        raise ValueError(f"Right-hand side has {rhs.shape[0]} rows, operator has {op.n} unknowns")
    w = _solve(op, order.on(op), p, rhs)
    if np.imag(p) == 0 and np.real(p) > 0 and not np.iscomplexobj(rhs):
        return w.real
    return w


def _check_sector(op: DiscreteOperator, alpha: FloatArray, contour: Contour, stride: int = 8) -> None:
    alpha0 = float(alpha.min())
    for p in contour.nodes[::stride]:
        system, lu = _factorize(op, alpha, p)
        scaled = abs(p) ** alpha0 * _inverse_norm_estimate(system, lu)
        if not np.isfinite(scaled) or scaled > RESOLVENT_BOUND:
            raise ResolventError(complex(p), spla.onenormest(system) * scaled / abs(p) ** alpha0, "resolvent unbounded")


def find_shift(op: DiscreteOperator, order: OrderField, make_contour: Callable[[float], Contour]) -> Contour:
    """Smallest s₀ in 0, 1, 2, 4, … whose contour keeps the resolvent bounded; b ≡ 0 needs no search."""

    if op.self_adjoint:
        return make_contour(0.0)

    alpha = order.on(op)
    shifts = [0.0] + [S0_INITIAL * 2**k for k in range(S0_ATTEMPTS - 1)]
    contour = make_contour(0.0)
    for attempt in Retrying(
        retry=retry_if_exception_type(ResolventError), stop=stop_after_attempt(len(shifts)), reraise=True
    ):
        with attempt:
            s0 = shifts[attempt.retry_state.attempt_number - 1]
            contour = make_contour(s0)
            _check_sector(op, alpha, contour)
    logger.debug(f"Contour shift s₀={contour.s0} accepted")
    return contour


def solve_on_contour(
    op: DiscreteOperator, order: OrderField, contour: Contour, rhs: ArrayLike, threads: int = 1
) -> ContourSolves:
    rhs = np.asarray(rhs)
    alpha = order.on(op)

    def solve(p: complex) -> np.ndarray:
        return _solve(op, alpha, p, rhs)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            values = list(executor.map(solve, contour.nodes))
    else:
        values = [solve(p) for p in contour.nodes]
    return ContourSolves(contour=contour, values=np.stack(values))


def _window_contour(
    op: DiscreteOperator, order: OrderField, t_lo: float, t_hi: float, theta: float, delta_scale: float = 1.0
) -> Contour:
    theta = admissible_theta(order, theta)
    return find_shift(
        op, order, lambda s0: contour_for_times(t_lo, t_hi, s0=s0, theta=theta, delta_scale=delta_scale)
    )


def contour_action(
    op: DiscreteOperator,
    order: OrderField,
    t: ArrayLike,
    h: ArrayLike,
    *,
    power: int = 0,
    contour: Optional[Contour] = None,
    theta: float = DEFAULT_THETA,
    delta_scale: float = 1.0,
    threads: int = 1,
) -> np.ndarray:
    """Complex Σ_k w_k p_k^{−power} e^{t p_k}(𝓛 + p_k^{α}ρ)^{-1}h, t along the first axis.

    power = 0 gives S(t)h, powers 1 and 2 its first and second time antiderivatives. Without an
    explicit contour the times are split into decade windows with one contour each.
    """

    t = np.atleast_1d(np.asarray(t, dtype=float))
    h = np.asarray(h)
    out = np.zeros((len(t), *h.shape), dtype=complex)
    if not np.any(h):
        return out

    if contour is not None:
        return solve_on_contour(op, order, contour, h, threads).evaluate(t, power)

    for members, t_lo, t_hi in time_windows(t):
        window = _window_contour(op, order, t_lo, t_hi, theta, delta_scale)
        out[members] = solve_on_contour(op, order, window, h, threads).evaluate(t[members], power)
    return out


def imaginary_ratio(values: np.ndarray) -> float:
    """max|Im| / max|Re| of a contour result; small for real data by conjugate symmetry."""
    scale = float(np.abs(values.real).max(initial=0.0))
    return float(np.abs(values.imag).max(initial=0.0)) / scale if scale > 0 else 0.0


def _real_part(values: np.ndarray, what: str) -> np.ndarray:
    ratio = imaginary_ratio(values)
    if ratio > IMAGINARY_TOLERANCE:
        logger.warning(f"{what}: imaginary part at {ratio:.2e} of the real part exceeds tolerance")
    return values.real


def apply_S_contour(
    op: DiscreteOperator,
    order: OrderField,
    t: Union[float, ArrayLike],
    h: ArrayLike,
    *,
    contour: Optional[Contour] = None,
    theta: float = DEFAULT_THETA,
    delta_scale: float = 1.0,
    threads: int = 1,
) -> np.ndarray:
    """S(t)h = (1/2πi)∮ e^{tp}(𝓛 + p^{α(x)}ρ)^{-1}h dp; scalar t gives one field, an array of t a stack."""

    scalar = np.ndim(t) == 0
    values = contour_action(
        op, order, t, h, contour=contour, theta=theta, delta_scale=delta_scale, threads=threads
    )
    real = _real_part(values, "S(t)h")
    return real[0] if scalar else real


def spectral_tail_bound(eig: EigenSystem, alpha: float, t: float, h: ArrayLike) -> float:
    """Bound on ‖tail‖_ρ / ‖h‖_ρ of the truncated spectral sum, from the largest retained eigenvalue."""

    h = np.asarray(h, dtype=float)
    coefficients = eig.coefficients(h)
    norm_h = math.sqrt(float(np.sum(eig.weights * eig.rho * h**2)))
    if norm_h == 0:
        return 0.0
    residual = max(norm_h**2 - float(np.sum(coefficients**2)), 0.0)
    x_last = t**alpha * eig.eigenvalues[-1]
    envelope = np.abs(mittag_leffler_real(alpha, alpha, -np.linspace(x_last, 4 * x_last + 1, 64))).max()
    return float(t ** (alpha - 1) * envelope * math.sqrt(residual) / norm_h)


def apply_S_spectral(eig: EigenSystem, alpha: float, t: float, h: ArrayLike) -> np.ndarray:
    """t^{α−1} Σ_n E_{α,α}(−t^α λ_n)(h, φ_n)_ρ φ_n over the retained modes; h may hold columns."""

    if not 0 < alpha < 2:
        raise ValueError(f"Spectral solution operator needs α ∈ (0, 2), got {alpha}")
    if t <= 0:
        raise ValueError(f"Need t > 0, got {t}")

    h = np.asarray(h, dtype=float)
    modal = t ** (alpha - 1) * mittag_leffler_real(alpha, alpha, -(t**alpha) * eig.eigenvalues)
    coefficients = eig.coefficients(h.T) * modal
    result = eig.synthesize(coefficients).T

    if h.ndim == 1:
        bound = spectral_tail_bound(eig, alpha, t, h)
        if bound > SPECTRAL_TAIL_TOLERANCE:
            logger.warning(f"Spectral truncation at {eig.n_modes} modes leaves tail bound {bound:.2e} at t={t}")
    return result


def spectral_kernel_antiderivatives(eig: EigenSystem, alpha: float, s: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    """Per-mode K₁(s) = s^α E_{α,α+1}(−λs^α) and K₂(s) = s^{α+1}E_{α,α+2}(−λs^α), shape (len(s), modes)."""

    s = np.asarray(s, dtype=float)
    x = -np.multiply.outer(s**alpha, eig.eigenvalues)
    k1 = (s**alpha)[:, None] * mittag_leffler_real(alpha, alpha + 1, x)
    k2 = (s ** (alpha + 1))[:, None] * mittag_leffler_real(alpha, alpha + 2, x)
    return k1, k2


def contour_kernel_antiderivatives(
    op: DiscreteOperator,
    order: OrderField,
    h: ArrayLike,
    s: ArrayLike,
    *,
    theta: float = DEFAULT_THETA,
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """∫₀ˢ S(σ)h dσ and its antiderivative at every s, zero at s = 0; shape (len(s), *h.shape)."""

    s = np.asarray(s, dtype=float)
    h = np.asarray(h)
    k1 = np.zeros((len(s), *h.shape))
    k2 = np.zeros((len(s), *h.shape))
    positive = np.flatnonzero(s > 0)
    if positive.size == 0 or not np.any(h):
        return k1, k2

    for members, t_lo, t_hi in time_windows(s[positive]):
        idx = positive[members]
        window = _window_contour(op, order, t_lo, t_hi, theta)
        solves = solve_on_contour(op, order, window, h, threads)
        k1[idx] = _real_part(solves.evaluate(s[idx], power=1), "∫S(t)h")
        k2[idx] = _real_part(solves.evaluate(s[idx], power=2), "∬S(t)h")
    return k1, k2


def _weighted_norm(b: np.ndarray, n_iter: int, rng: np.random.Generator) -> float:
    x = rng.standard_normal(b.shape[1])
    x /= np.linalg.norm(x)
    for _ in range(n_iter):
        y = b.T @ (b @ x)
        size = np.linalg.norm(y)
        if size == 0:
            return 0.0
        x = y / size
    return float(np.linalg.norm(b @ x))


def _loglog_slope(t: FloatArray, norms: FloatArray) -> float:
    keep = norms > 0
    if keep.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(t[keep]), np.log(norms[keep]), 1)[0])


def operator_norm_estimate(
    op: DiscreteOperator,
    order: OrderField,
    t_grid: ArrayLike,
    *,
    n_iter: int = DEFAULT_POWER_ITERATIONS,
    seed: int = 0,
    threads: int = 1,
) -> NormEstimateReport:
    """‖S(t)‖ in the discrete L² norm by power iteration on the assembled S(t), with fitted tails.

    The small-t slope is fitted on the first decade of t_grid, the large-t slope on the last one.
    The envelope is max(t^{2α_M−α₀−1}, t^{2α₀−α_M−1}, 1).
    """

    t = np.sort(np.asarray(t_grid, dtype=float))
    if t[0] >= 1 or t[-1] <= 1:
        raise ValueError("t_grid must reach below and above t = 1")

    rng = np.random.default_rng(seed)
    sqrt_w = np.sqrt(op.weights)
    matrices = apply_S_contour(op, order, t, np.eye(op.n), threads=threads)

    norms = np.array([_weighted_norm(sqrt_w[:, None] * m / sqrt_w[None, :], n_iter, rng) for m in matrices])

    a0, aM = order.alpha0, order.alphaM
    envelope = np.maximum.reduce([t ** (2 * aM - a0 - 1), t ** (2 * a0 - aM - 1), np.ones_like(t)])
    small = t <= 10 * t[0]
    large = t >= t[-1] / 10

    late = norms[t >= 1]
    violations = int(np.sum(late[1:] > late[:-1] * (1 + 1e-8)))

    report = NormEstimateReport(
        t=t.tolist(),
        norms=norms.tolist(),
        alpha0=a0,
        alphaM=aM,
        small_t_slope=_loglog_slope(t[small], norms[small]),
        large_t_slope=_loglog_slope(t[large], norms[large]),
        small_t_exponent_bound=2 * a0 - aM - 1,
        envelope_constant=float(np.max(norms / envelope)),
        monotone_violations=violations,
    )
    logger.debug(f"‖S(t)‖ slopes: small-t {report.small_t_slope:.3f}, large-t {report.large_t_slope:.3f}")
    return report


def analyticity_surrogate(
    op: DiscreteOperator,
    order: OrderField,
    h: ArrayLike,
    psi: ArrayLike,
    t1: float,
    t2: float,
    *,
    degree: int = 12,
    n_samples: int = 64,
    threads: int = 1,
) -> AnalyticityReport:
    """Max relative residual of a degree-`degree` Chebyshev fit of t ↦ (S(t)h, ψ) on [t1, t2]."""

    if not 0 < t1 < t2:
        raise ValueError(f"Need 0 < t1 < t2, got [{t1}, {t2}]")

    nodes = chebyshev.chebpts2(n_samples)
    t = t1 + (t2 - t1) * (nodes + 1) / 2
    fields = apply_S_contour(op, order, t, h, threads=threads)
    pairing = np.array([op.inner(field, psi) for field in fields])

    fit = chebyshev.Chebyshev.fit(t, pairing, degree, domain=[t1, t2])
    scale = np.abs(pairing).max()
    residual = float(np.abs(fit(t) - pairing).max() / scale) if scale > 0 else 0.0
    return AnalyticityReport(t1=t1, t2=t2, degree=degree, max_relative_residual=residual)


__all__ = [
    "SpatialField",
    "OrderField",
    "Contour",
    "ContourSolves",
    "NormEstimateReport",
    "AnalyticityReport",
    "build_contour",
    "contour_for_times",
    "admissible_theta",
    "time_windows",
    "resolvent_solve",
    "find_shift",
    "solve_on_contour",
    "contour_action",
    "imaginary_ratio",
    "apply_S_contour",
    "apply_S_spectral",
    "spectral_tail_bound",
    "spectral_kernel_antiderivatives",
    "contour_kernel_antiderivatives",
    "operator_norm_estimate",
    "analyticity_surrogate",
]
