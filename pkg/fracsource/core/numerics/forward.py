"""Forward solvers for ρ∂_t^α u + 𝓛u = μ(t)h(x) with zero initial data.

The weak solution is the causal convolution u = μ * (S(·)h). Both Duhamel variants integrate the
kernel exactly against piecewise-linear μ through its first two time antiderivatives, so a μ that
vanishes on [0, τ) produces a u that vanishes there exactly.
"""

from __future__ import annotations

import logging
import math
from typing import Optional, Sequence

import numpy as np
import pydantic as pd
import scipy.sparse as sp
import scipy.sparse.linalg as spla
import scipy.special
from numpy.typing import ArrayLike

from fracsource.core.models.arrays import ArrayModel, FloatArray
from fracsource.core.models.enum import SolveMethod
from fracsource.core.numerics.fractional_time import (
    TimeGrid,
    TimeSignal,
    causal_convolve,
    product_trapezoid_weights,
    smooth_bump,
)
from fracsource.core.numerics.grid_elliptic import DiscreteOperator, EigenSystem, eigensystem
from fracsource.core.numerics.solution_operators import (
    DEFAULT_THETA,
    OrderField,
    contour_kernel_antiderivatives,
    resolvent_solve,
    spectral_kernel_antiderivatives,
)

logger = logging.getLogger("fracsource")


class SpaceTimeField(ArrayModel):
    """u(t_j, ·) on the degrees of freedom, one row per time node."""

    grid: TimeGrid
    values: np.ndarray
    onset: Optional[float] = pd.Field(None, description="First time the driving source is nonzero.")

    @pd.root_validator(skip_on_failure=True)
    def validate_shape(cls, values: dict) -> dict:
        if values["values"].ndim != 2 or values["values"].shape[0] != values["grid"].size:
            raise ValueError(f"Expected {values['grid'].size} time rows, got shape {values['values'].shape}")
        return values

    @property
    def t(self) -> FloatArray:
        return self.grid.t

    def at(self, t: float) -> FloatArray:
        """Row of the time node closest to t."""
        return self.values[int(round((t - self.grid.t_start) / self.grid.dt))]

    def is_causal(self) -> bool:
        """True when u vanishes identically before the source onset."""
        if self.onset is None:
            return True
        return not np.any(self.values[self.t < self.onset])


class DuhamelKernel(ArrayModel):
    """Product-trapezoid weights of s ↦ S(s)h, either per eigenmode (with `basis`) or per degree of freedom."""

    grid: TimeGrid
    c: np.ndarray
    e: np.ndarray
    basis: Optional[np.ndarray] = None  # (n_dof, n_modes) columns (h, φ_n)φ_n

    def apply(self, mu: ArrayLike) -> np.ndarray:
        mu = np.asarray(mu, dtype=float)
        if len(mu) != self.grid.size:
            raise ValueError(f"μ has {len(mu)} samples, kernel grid has {self.grid.size}")
        convolved = causal_convolve(self.c, self.e, mu)
        return convolved @ self.basis.T if self.basis is not None else convolved


class WeakSolutionReport(pd.BaseModel):
    p: list[float]
    residuals: list[float]
    relative: list[bool]
    tail_bounds: list[float]
    p0: float


class MollificationReport(pd.BaseModel):
    p: float
    widths: list[float]
    gaps: list[float]
    monotone: bool
    rate: Optional[float]


def _source_onset(mu: TimeSignal) -> Optional[float]:
    nonzero = np.flatnonzero(mu.values)
    return float(mu.t[nonzero[0]]) if nonzero.size else None


def _x_minus_sin(x: FloatArray) -> FloatArray:
    small = np.abs(x) < 1e-2
    out = x - np.sin(x)
    xs = x[small]
    out[small] = xs**3 / 6 - xs**5 / 120 + xs**7 / 5040
    return out


def wave_kernel_antiderivatives(eig: EigenSystem, s: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    """Per-mode antiderivatives of sin(ωs)/ω, ω = √λ: (1 − cos ωs)/ω² and (s − sin(ωs)/ω)/ω²."""

    s = np.asarray(s, dtype=float)
    omega = np.sqrt(np.maximum(eig.eigenvalues, 0.0))
    x = np.multiply.outer(s, omega)
    with np.errstate(divide="ignore", invalid="ignore"):
        k1 = np.where(omega > 0, 2 * np.sin(x / 2) ** 2 / omega**2, s[:, None] ** 2 / 2)
        k2 = np.where(omega > 0, _x_minus_sin(x) / omega**3, s[:, None] ** 3 / 6)
    return k1, k2


def modal_kernel_antiderivatives(eig: EigenSystem, alpha: float, s: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    """Mittag-Leffler kernels for α ∈ (0, 2), the wave kernel for α = 2."""
    if alpha == 2:
        return wave_kernel_antiderivatives(eig, s)
    return spectral_kernel_antiderivatives(eig, alpha, s)


def spectral_duhamel_kernel(eig: EigenSystem, alpha: float, h: ArrayLike, grid: TimeGrid) -> DuhamelKernel:
    """Kernel of u = μ * S(·)ρ⁻¹h per eigenmode; (ρ⁻¹h, φ_n)_ρ = (h, φ_n)."""

    h = np.asarray(h, dtype=float)
    s = grid.dt * np.arange(grid.size)
    k1, k2 = modal_kernel_antiderivatives(eig, alpha, s)
    c, e = product_trapezoid_weights(lambda _: k1, lambda _: k2, grid)
    coefficients = (eig.weights * h) @ eig.eigenvectors
    return DuhamelKernel(grid=grid, c=c, e=e, basis=eig.eigenvectors * coefficients)


def contour_duhamel_kernel(
    op: DiscreteOperator,
    order: OrderField,
    h: ArrayLike,
    grid: TimeGrid,
    *,
    theta: float = DEFAULT_THETA,
    threads: int = 1,
) -> DuhamelKernel:
    s = grid.dt * np.arange(grid.size)
    k1, k2 = contour_kernel_antiderivatives(op, order, h, s, theta=theta, threads=threads)
    c, e = product_trapezoid_weights(lambda _: k1, lambda _: k2, grid)
    return DuhamelKernel(grid=grid, c=c, e=e)


def duhamel_kernel(
    op: DiscreteOperator,
    order: OrderField,
    h: ArrayLike,
    grid: TimeGrid,
    method: SolveMethod,
    *,
    eig: Optional[EigenSystem] = None,
    threads: int = 1,
) -> DuhamelKernel:
    grid.require_origin()
    if method == SolveMethod.SPECTRAL:
        if not order.is_constant or not op.self_adjoint:
            raise ValueError("The spectral method needs a constant order and b ≡ 0")
        return spectral_duhamel_kernel(eig or eigensystem(op, op.n), order.alpha, h, grid)
    if method == SolveMethod.CONTOUR:
        if order.alphaM >= 2:
            raise ValueError("The contour method needs orders below 2")
        return contour_duhamel_kernel(op, order, h, grid, threads=threads)
    raise ValueError(f"Duhamel solves support spectral and contour methods, not {method.value}")


def duhamel_solve(
    op: DiscreteOperator,
    order: OrderField,
    mu: TimeSignal,
    h: ArrayLike,
    method: SolveMethod = SolveMethod.CONTOUR,
    *,
    eig: Optional[EigenSystem] = None,
    threads: int = 1,
) -> SpaceTimeField:
    """u(t) = ∫₀ᵗ μ(t−τ)S(τ)h dτ on μ's grid."""

    h = np.asarray(h, dtype=float)
    if h.shape != (op.n,):
        raise ValueError(f"h has shape {h.shape}, expected ({op.n},)")

    onset = _source_onset(mu)
    if onset is None or not np.any(h):
        return SpaceTimeField(grid=mu.grid, values=np.zeros((mu.grid.size, op.n)), onset=onset)

    kernel = duhamel_kernel(op, order, h, mu.grid, method, eig=eig, threads=threads)
    values = kernel.apply(mu.values)
    logger.debug(f"Duhamel ({method.value}) solve on {mu.grid.size} time nodes, {op.n} unknowns")
    return SpaceTimeField(grid=mu.grid, values=values, onset=onset)


def wave_solve(eig: EigenSystem, mu: TimeSignal, h: ArrayLike) -> SpaceTimeField:
    """Solution of ρu_tt + 𝓐u = μ(t)h as μ * v, v(s) = Σ (h, φ_n) sin(√λ_n s)/√λ_n φ_n."""

    mu.grid.require_origin()
    h = np.asarray(h, dtype=float)
    onset = _source_onset(mu)
    if onset is None or not np.any(h):
        return SpaceTimeField(grid=mu.grid, values=np.zeros((mu.grid.size, len(h))), onset=onset)
    values = spectral_duhamel_kernel(eig, 2.0, h, mu.grid).apply(mu.values)
    return SpaceTimeField(grid=mu.grid, values=values, onset=onset)


def wave_energy(op: DiscreteOperator, eig: EigenSystem, h: ArrayLike, t: ArrayLike) -> FloatArray:
    """‖∂_t v‖²_ρ + (𝓐v, v) of the free wave v at the given times, from nodal fields."""

    h = np.asarray(h, dtype=float)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    omega = np.sqrt(eig.eigenvalues)
    coefficients = (eig.weights * h) @ eig.eigenvectors

    phase = np.multiply.outer(t, omega)
    v = (np.sin(phase) / omega * coefficients) @ eig.eigenvectors.T
    v_t = (np.cos(phase) * coefficients) @ eig.eigenvectors.T

    kinetic = np.sum(op.weights * op.rho * v_t**2, axis=1)
    potential = np.einsum("ij,ij->i", v * op.weights, (op.matrix @ v.T).T)
    return kinetic + potential


def timestep_solve_L1(op: DiscreteOperator, order: OrderField, mu: TimeSignal, h: ArrayLike) -> SpaceTimeField:
    """Implicit L1 time stepping with node-wise orders α(x) ∈ (0, 1):

    (ρc + 𝓛)uⁿ = μ(tₙ)h + ρc[uⁿ⁻¹ − Σ_{k=1}^{n−1} b_k(uⁿ⁻ᵏ − uⁿ⁻ᵏ⁻¹)], c = Δt^{−α}/Γ(2−α),
    b_k = (k+1)^{1−α} − k^{1−α}.
    """

    mu.grid.require_origin()
    alpha = order.on(op)
    if np.any(alpha >= 1) or np.any(alpha <= 0):
        raise ValueError("L1 time stepping needs every order in (0, 1)")

    h = np.asarray(h, dtype=float)
    dt, n_steps = mu.grid.dt, mu.grid.n_steps
    scale = op.rho * dt**-alpha / scipy.special.gamma(2 - alpha)
    lu = spla.splu((op.matrix + sp.diags(scale)).tocsc())

    k = np.arange(n_steps, dtype=float)[:, None]
    b = (k + 1) ** (1 - alpha) - k ** (1 - alpha)  # (n_steps, n_dof)

    u = np.zeros((n_steps + 1, op.n))
    increments = np.zeros((n_steps, op.n))  # increments[j] = u^{j+1} − u^j
    for n in range(1, n_steps + 1):
        history = np.sum(b[1:n] * increments[n - 2 :: -1][: n - 1], axis=0) if n > 1 else 0.0
        rhs = mu.values[n] * h + scale * (u[n - 1] - history)
        u[n] = lu.solve(rhs)
        increments[n - 1] = u[n] - u[n - 1]

    return SpaceTimeField(grid=mu.grid, values=u, onset=_source_onset(mu))


def laplace_weights(grid: TimeGrid, p: complex) -> np.ndarray:
    """Weights w_j with Σ w_j f_j = ∫₀^T e^{−pt} f(t) dt exactly for piecewise-linear f."""

    grid.require_origin()
    dt = grid.dt
    z = p * dt
    if abs(z) < 1e-4:
        interior = dt * (1 + z**2 / 12)
        first = dt * (0.5 - z / 6 + z**2 / 24)
        last = dt * (0.5 + z / 6 + z**2 / 24)
    else:
        interior = (2 * np.cosh(z) - 2) / (p**2 * dt)
        first = (z - 1 + np.exp(-z)) / (p**2 * dt)
        last = (np.exp(z) - 1 - z) / (p**2 * dt)

    w = interior * np.exp(-p * grid.t)
    w[0] = first
    w[-1] = last * np.exp(-p * grid.t_end)
    return w


def laplace_transform(values: ArrayLike, grid: TimeGrid, p: complex) -> np.ndarray:
    """Truncated Laplace transform of samples along the first axis."""
    return np.tensordot(laplace_weights(grid, p), np.asarray(values), axes=(0, 0))


def _decay_abscissa(u: SpaceTimeField, op: DiscreteOperator) -> float:
    norms = np.sqrt(np.sum(op.weights * u.values**2, axis=1))
    tail = slice(3 * u.grid.size // 4, None)
    keep = norms[tail] > 0
    if keep.sum() < 2:
        return 0.0
    slope = np.polyfit(u.t[tail][keep], np.log(norms[tail][keep]), 1)[0]
    return max(float(slope), 0.0)


def verify_weak_solution(
    u: SpaceTimeField,
    op: DiscreteOperator,
    order: OrderField,
    mu: TimeSignal,
    h: ArrayLike,
    p_list: Sequence[float],
) -> WeakSolutionReport:
    """‖(𝓛 + p^αρ)û(p) − μ̂(p)h‖ / ‖μ̂(p)h‖ for every p, with truncated transforms on [0, t_end].

    When ‖μ̂(p)h‖ vanishes the absolute residual is reported. The tail bound is ‖u(T)‖e^{−pT}/(p − p₀),
    p₀ being the exponential growth rate fitted on the last quarter of the trajectory.
    """

    h = np.asarray(h, dtype=float)
    p0 = _decay_abscissa(u, op)
    final = op.norm(u.values[-1])

    residuals, relative, tails = [], [], []
    for p in p_list:
        if p <= p0:
            logger.warning(f"p={p} does not exceed the estimated abscissa p₀={p0:.3g}")
        u_hat = laplace_transform(u.values, u.grid, p)
        mu_hat = complex(laplace_transform(mu.values, mu.grid, p))
        target = mu_hat * h
        defect = op.matrix @ u_hat + np.exp(order.on(op) * math.log(p)) * op.rho * u_hat - target

        scale = op.norm(target)
        is_relative = scale > 1e-14 * max(op.norm(h), 1.0)
        if not is_relative:
            logger.warning(f"μ̂({p}) ≈ 0, reporting the absolute residual")
        residuals.append(op.norm(defect) / scale if is_relative else op.norm(defect))
        relative.append(is_relative)
        tails.append(final * math.exp(-p * u.grid.t_end) / (p - p0) if p > p0 else math.inf)

    return WeakSolutionReport(p=list(p_list), residuals=residuals, relative=relative, tail_bounds=tails, p0=p0)


def mollify(mu: TimeSignal, width: float) -> TimeSignal:
    """Convolution with a normalized smooth bump of half-width `width`; samples before t = 0 are zero."""

    dt = mu.grid.dt
    reach = int(width / dt)
    if reach < 1:
        return mu.with_values(mu.values)
    offsets = dt * np.arange(-reach, reach + 1)
    kernel = smooth_bump(offsets, 0.0, width)
    kernel /= kernel.sum()
    return mu.with_values(np.convolve(mu.values, kernel, mode="same"))


def mollified_mu_convergence(
    op: DiscreteOperator,
    order: OrderField,
    mu: TimeSignal,
    h: ArrayLike,
    widths: Sequence[float],
    *,
    p: float = 1.0,
    method: SolveMethod = SolveMethod.CONTOUR,
    eig: Optional[EigenSystem] = None,
    threads: int = 1,
) -> MollificationReport:
    """‖û_w(p) − û(p)‖ for solutions driven by mollified sources μ_w, one per smoothing width."""

    kernel = duhamel_kernel(op, order, h, mu.grid, method, eig=eig, threads=threads)
    reference = laplace_transform(kernel.apply(mu.values), mu.grid, p)

    gaps = []
    for width in widths:
        smoothed = kernel.apply(mollify(mu, width).values)
        gaps.append(op.norm(laplace_transform(smoothed, mu.grid, p) - reference))

    ordered = sorted(zip(widths, gaps), reverse=True)
    monotone = all(b[1] < a[1] for a, b in zip(ordered, ordered[1:]))
    positive = [(w, g) for w, g in ordered if g > 0]
    rate = None
    if len(positive) >= 2:
        w, g = np.array(positive).T
        rate = float(np.polyfit(np.log(w), np.log(g), 1)[0])
    return MollificationReport(p=p, widths=list(widths), gaps=gaps, monotone=monotone, rate=rate)


def wave_arrival_time(u: SpaceTimeField, mask: ArrayLike, threshold_rel: float = 1e-6) -> Optional[float]:
    """First time max_{x∈ω}|u(t, x)| exceeds threshold_rel·‖u‖_∞; `mask` selects ω on the degrees of freedom."""

    mask = np.asarray(mask, dtype=bool)
    peak = np.abs(u.values).max()
    if peak == 0:
        return None
    observed = np.abs(u.values[:, mask]).max(axis=1)
    above = np.flatnonzero(observed > threshold_rel * peak)
    return float(u.t[above[0]]) if above.size else None


__all__ = [
    "SpaceTimeField",
    "DuhamelKernel",
    "WeakSolutionReport",
    "MollificationReport",
    "spectral_duhamel_kernel",
    "contour_duhamel_kernel",
    "duhamel_kernel",
    "duhamel_solve",
    "wave_kernel_antiderivatives",
    "modal_kernel_antiderivatives",
    "wave_solve",
    "wave_energy",
    "timestep_solve_L1",
    "laplace_weights",
    "laplace_transform",
    "verify_weak_solution",
    "mollify",
    "mollified_mu_convergence",
    "wave_arrival_time",
]
