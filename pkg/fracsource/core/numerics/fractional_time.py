"""Riemann-Liouville and Caputo operators on uniform time grids.

Signals are piecewise linear between samples. Every Volterra convolution ∫₀ᵗ K(t−τ)f(τ)dτ is integrated
exactly against that interpolant through the antiderivatives K₁(s) = ∫₀ˢK and K₂(s) = ∫₀ˢK₁, which makes
the quadrature second order and strictly causal.
"""

from __future__ import annotations

import logging
import math
from typing import Callable, Optional

import numpy as np
import pydantic as pd
import scipy.special
from numpy.typing import ArrayLike
from scipy.integrate import trapezoid

from fracsource.core.models.arrays import ArrayModel, FloatArray
from fracsource.core.numerics.special_functions import mittag_leffler_real

logger = logging.getLogger("fracsource")

Antiderivative = Callable[[FloatArray], np.ndarray]


class TimeGrid(pd.BaseModel):
    """t_j = t_start + jΔt for j = 0..M."""

    dt: float = pd.Field(..., gt=0)
    n_steps: int = pd.Field(..., ge=2)
    t_start: float = pd.Field(0.0, ge=0)

    class Config:
        allow_mutation = False

    @classmethod
    def uniform(cls, t_end: float, dt: float) -> TimeGrid:
        n_steps = int(round(t_end / dt))
        if not math.isclose(n_steps * dt, t_end, rel_tol=1e-9):
            raise ValueError(f"t_end={t_end} is not a multiple of Δt={dt}")
        return cls(dt=dt, n_steps=n_steps)

    @property
    def t(self) -> FloatArray:
        return self.t_start + self.dt * np.arange(self.n_steps + 1)

    @property
    def t_end(self) -> float:
        return self.t_start + self.dt * self.n_steps

    @property
    def size(self) -> int:
        return self.n_steps + 1

    def refine(self, factor: int = 2) -> TimeGrid:
        return TimeGrid(dt=self.dt / factor, n_steps=self.n_steps * factor, t_start=self.t_start)

    def window(self, t_from: float, t_to: float) -> slice:
        """Index slice of the samples with t_from ≤ t_j ≤ t_to."""
        tol = 1e-9 * self.dt
        first = int(np.ceil((t_from - self.t_start - tol) / self.dt))
        last = int(np.floor((t_to - self.t_start + tol) / self.dt))
        return slice(max(first, 0), min(last, self.n_steps) + 1)

    def require_origin(self) -> None:
        if self.t_start != 0:
            raise ValueError("Causal time operators need a grid starting at t = 0")


class TimeSignal(ArrayModel):
    grid: TimeGrid
    values: np.ndarray
    T0: Optional[float] = pd.Field(None, ge=0, description="Source marker: μ ≢ 0 on (0, T₀).")
    support_bound: Optional[float] = pd.Field(None, ge=0, description="The signal vanishes for t beyond this time.")

    @pd.root_validator(skip_on_failure=True)
    def validate_length(cls, values: dict) -> dict:
        samples, grid = values["values"], values["grid"]
        if samples.ndim != 1 or len(samples) != grid.size:
            raise ValueError(f"Expected {grid.size} samples, got shape {samples.shape}")
        bound = values.get("support_bound")
        if bound is not None:
            beyond = grid.t > bound + 1e-9 * grid.dt
            if np.any(samples[beyond] != 0):
                raise ValueError(f"Signal does not vanish beyond its support bound {bound}")
        return values

    @classmethod
    def from_function(
        cls,
        grid: TimeGrid,
        f: Callable[[FloatArray], ArrayLike],
        *,
        T0: Optional[float] = None,
        support_bound: Optional[float] = None,
    ) -> TimeSignal:
        values = np.broadcast_to(np.asarray(f(grid.t), dtype=float), (grid.size,)).copy()
        if support_bound is not None:
            values[grid.t > support_bound] = 0.0
        return cls(grid=grid, values=values, T0=T0, support_bound=support_bound)

    @classmethod
    def zeros(cls, grid: TimeGrid) -> TimeSignal:
        return cls(grid=grid, values=np.zeros(grid.size))

    @property
    def t(self) -> FloatArray:
        return self.grid.t

    def with_values(self, values: ArrayLike) -> TimeSignal:
        return TimeSignal(grid=self.grid, values=np.asarray(values, dtype=float), T0=self.T0)

    def resample(self, grid: TimeGrid) -> TimeSignal:
        """Piecewise-linear interpolation onto another grid."""
        return TimeSignal(
            grid=grid,
            values=np.interp(grid.t, self.t, self.values, right=0.0),
            T0=self.T0,
            support_bound=self.support_bound,
        )

    def l1_norm(self) -> float:
        return float(trapezoid(np.abs(self.values), dx=self.grid.dt))


class RelaxationResidualReport(pd.BaseModel):
    beta: float
    lam: float
    dt: float
    residual: float
    residual_refined: float
    rate: Optional[float]


def smooth_bump(t: ArrayLike, center: float, half_width: float) -> np.ndarray:
    """C^∞ bump exp(1 − 1/(1 − r²)) with r = (t − center)/half_width, equal to 1 at the center."""

    r = (np.asarray(t, dtype=float) - center) / half_width
    out = np.zeros_like(r)
    inside = np.abs(r) < 1
    out[inside] = np.exp(1 - 1 / (1 - r[inside] ** 2))
    return out


def product_trapezoid_weights(k1: Antiderivative, k2: Antiderivative, grid: TimeGrid) -> tuple[np.ndarray, np.ndarray]:
    """Weights of ∫₀^{t_n} K(s) f(t_n − s) ds for piecewise-linear f.

    Returns (c, e) with y_n = Σ_{m=0}^{n−1} c_m f_{n−m} + e_n f_0. The kernel may be vector valued:
    k1 and k2 map an array of s values to arrays with s along the first axis.
    """

    dt, n = grid.dt, grid.n_steps
    s = dt * np.arange(n + 1)
    K1 = np.asarray(k1(s))
    K2 = np.asarray(k2(s))
    if K1.shape[0] != n + 1 or K2.shape != K1.shape:
        raise ValueError("Antiderivatives must return one value per time node")

    c = np.empty((n, *K2.shape[1:]), dtype=K2.dtype)
    c[0] = K2[1] / dt
    c[1:] = (K2[2:] - 2 * K2[1:-1] + K2[:-2]) / dt

    e = np.zeros_like(K1)
    e[1:] = K1[1:] - (K2[1:] - K2[:-1]) / dt
    return c, e


def causal_convolve(c: np.ndarray, e: np.ndarray, f: ArrayLike) -> np.ndarray:
    """Apply product-trapezoid weights from `product_trapezoid_weights` to the samples f."""

    f = np.asarray(f)
    n = len(f) - 1
    if c.shape[0] != n:
        raise ValueError(f"Weights cover {c.shape[0]} steps, signal has {n}")

    trailing = c.shape[1:]
    flat = c.reshape(n, -1)
    out = np.zeros((n + 1, flat.shape[1]), dtype=np.result_type(c, f))
    for j in range(flat.shape[1]):
        out[1:, j] = np.convolve(flat[:, j], f[1:])[:n]
    out = out.reshape((n + 1, *trailing))
    return out + e * f[0]


def convolve_kernel(k1: Antiderivative, k2: Antiderivative, f: TimeSignal) -> np.ndarray:
    """∫₀^{t_n} K(t_n − τ) f(τ) dτ at every node, for a kernel given through K₁ and K₂."""

    f.grid.require_origin()
    c, e = product_trapezoid_weights(k1, k2, f.grid)
    return causal_convolve(c, e, f.values)


def convolve(f: TimeSignal, g: TimeSignal) -> TimeSignal:
    """(f*g)(t_n) = ∫₀^{t_n} f(t_n − τ)g(τ)dτ by the trapezoid rule on the shared grid."""

    if f.grid != g.grid:
        raise ValueError("Signals live on different grids")
    f.grid.require_origin()
    full = np.convolve(f.values, g.values)[: f.grid.size]
    # trapezoid: end points of every partial sum carry half weight
    ends = np.zeros_like(full)
    ends[1:] = 0.5 * (f.values[1:] * g.values[0] + f.values[0] * g.values[1:])
    ends[0] = f.values[0] * g.values[0]
    return TimeSignal(grid=f.grid, values=f.grid.dt * (full - ends))


def rl_integral(f: TimeSignal, beta: float) -> TimeSignal:
    """I^β f = (1/Γ(β)) ∫₀ᵗ (t−τ)^{β−1} f(τ) dτ; β = 0 is the identity."""

    if beta < 0:
        raise ValueError(f"Fractional integral order must be non-negative, got {beta}")
    if beta == 0:
        return f.with_values(f.values)

    g1, g2 = scipy.special.gamma(beta + 1), scipy.special.gamma(beta + 2)
    values = convolve_kernel(lambda s: s**beta / g1, lambda s: s ** (beta + 1) / g2, f)
    return f.with_values(values)


def _first_derivative(values: FloatArray, dt: float) -> FloatArray:
    return np.gradient(values, dt, edge_order=2)


def _second_derivative(values: FloatArray, dt: float) -> FloatArray:
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - 2 * values[1:-1] + values[:-2]) / dt**2
    out[0] = 2 * out[1] - out[2]
    out[-1] = 2 * out[-2] - out[-3]
    return out


def rl_derivative(f: TimeSignal, beta: float) -> TimeSignal:
    """D_t^β = d^m/dt^m ∘ I^{m−β} with m = ⌈β⌉; first order accurate next to t = 0 when f(0) ≠ 0."""

    if not 0 < beta <= 2:
        raise ValueError(f"Riemann-Liouville derivative order must lie in (0, 2], got {beta}")

    m = math.ceil(beta)
    inner = rl_integral(f, m - beta).values
    derivative = _first_derivative if m == 1 else _second_derivative
    return f.with_values(derivative(inner, f.grid.dt))


def _l1_weights(gamma_exp: float, n: int) -> FloatArray:
    k = np.arange(n, dtype=float)
    return (k + 1) ** gamma_exp - k**gamma_exp


def caputo_derivative(f: TimeSignal, beta: float, initial_slope: float = 0.0) -> TimeSignal:
    """Caputo derivative by the L1 scheme (β < 1) or its L1-2 analogue (1 < β < 2).

    `initial_slope` is f′(0), used for β > 1.
    """

    if not 0 < beta <= 2:
        raise ValueError(f"Caputo derivative order must lie in (0, 2], got {beta}")
    f.grid.require_origin()

    dt, n, values = f.grid.dt, f.grid.n_steps, f.values
    if beta == 1:
        return f.with_values(_first_derivative(values, dt))
    if beta == 2:
        return f.with_values(_second_derivative(values, dt))

    out = np.zeros(n + 1)
    if beta < 1:
        b = _l1_weights(1 - beta, n)
        increments = np.diff(values)
        out[1:] = np.convolve(b, increments)[:n] * dt**-beta / scipy.special.gamma(2 - beta)
        return f.with_values(out)

    b = _l1_weights(2 - beta, n)
    second = np.empty(n)
    second[0] = 2 * (values[1] - values[0] - dt * initial_slope)
    second[1:] = values[2:] - 2 * values[1:-1] + values[:-2]
    out[1:] = np.convolve(b, second)[:n] * dt**-beta / scipy.special.gamma(3 - beta)
    return f.with_values(out)


def relaxation_response(h: TimeSignal, beta: float, lam: float) -> TimeSignal:
    """w(t) = ∫₀ᵗ (t−τ)^{β−1} E_{β,β}(−λ(t−τ)^β) h(τ) dτ."""

    def k1(s: FloatArray) -> FloatArray:
        return s**beta * mittag_leffler_real(beta, beta + 1, -lam * s**beta)

    def k2(s: FloatArray) -> FloatArray:
        return s ** (beta + 1) * mittag_leffler_real(beta, beta + 2, -lam * s**beta)

    return h.with_values(convolve_kernel(k1, k2, h))


def _weak_residual(h: TimeSignal, beta: float, lam: float, n_tests: int) -> float:
    w = relaxation_response(h, beta, lam)
    derivative = rl_derivative(w, beta).values
    defect = derivative + lam * w.values - h.values

    t_end = h.grid.t_end
    half_width = t_end / (n_tests + 1)
    worst = 0.0
    for i in range(n_tests):
        chi = smooth_bump(h.t, (i + 1) * t_end / (n_tests + 1), half_width)
        pairing = abs(trapezoid(defect * chi, dx=h.grid.dt))
        scale = trapezoid(np.abs(h.values) * chi, dx=h.grid.dt)
        worst = max(worst, pairing / scale if scale > 0 else pairing)
    return float(worst)


def verify_relaxation_ode(h: TimeSignal, beta: float, lam: float, n_tests: int = 5) -> RelaxationResidualReport:
    """Weak residual of (D_t^β + λ)w = h against staggered bump test functions, on Δt and Δt/2.

    The residual of each test function is normalized by ⟨|h|, χ⟩; for h ≡ 0 it is absolute.
    """

    if lam <= 0:
        raise ValueError(f"λ must be positive, got {lam}")
    if not 0 < beta < 2:
        raise ValueError(f"Relaxation order must lie in (0, 2), got {beta}")

    coarse = _weak_residual(h, beta, lam, n_tests)
    fine = _weak_residual(h.resample(h.grid.refine(2)), beta, lam, n_tests)
    rate = math.log2(coarse / fine) if coarse > 0 and fine > 0 else None

    logger.debug(f"Relaxation residual β={beta}, λ={lam}: {coarse:.3e} -> {fine:.3e} (rate {rate})")
    return RelaxationResidualReport(
        beta=beta, lam=lam, dt=h.grid.dt, residual=coarse, residual_refined=fine, rate=rate
    )


__all__ = [
    "TimeGrid",
    "TimeSignal",
    "RelaxationResidualReport",
    "smooth_bump",
    "product_trapezoid_weights",
    "causal_convolve",
    "convolve_kernel",
    "convolve",
    "rl_integral",
    "rl_derivative",
    "caputo_derivative",
    "relaxation_response",
    "verify_relaxation_ode",
]
