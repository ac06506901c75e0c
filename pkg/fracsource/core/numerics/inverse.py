"""Inverse-source toolkit: support analysis, interior observations, recovery of h and (μ, h).

Uniqueness of the source is checked at desk scale as injectivity of the discrete sensitivity map
h ↦ {⟨u(t, ·), ψ_j⟩ : t ∈ (T₁, T)}. Its smallest retained singular value is the injectivity certificate
reported by every experiment.
"""

from __future__ import annotations

import logging
import math
from typing import Optional, Sequence

import numpy as np
import pydantic as pd
import scipy.linalg
import scipy.sparse as sp
from numpy.typing import ArrayLike

from fracsource.core.exceptions import HypothesisViolation, RankDeficiencyError
from fracsource.core.models.arrays import ArrayModel, FloatArray
from fracsource.core.models.enum import BasisKind, Experiment, SolveMethod
from fracsource.core.numerics.forward import SpaceTimeField, duhamel_solve, modal_kernel_antiderivatives
from fracsource.core.numerics.fractional_time import (
    TimeGrid,
    TimeSignal,
    causal_convolve,
    convolve,
    product_trapezoid_weights,
    smooth_bump,
)
from fracsource.core.numerics.grid_elliptic import (
    DiscreteOperator,
    EigenSystem,
    RegionSpec,
    control_time,
    eigensystem,
    riemannian_distance,
)
from fracsource.core.numerics.solution_operators import DEFAULT_THETA, OrderField, contour_kernel_antiderivatives
from fracsource.utils.progress_bar import ProgressBar

logger = logging.getLogger("fracsource")

SVD_CUTOFF = 1e-10
DECONVOLUTION_CUTOFF = 1e-8
SUPPORT_THRESHOLD = 1e-8
DEFAULT_BASIS_SIZE = 12
DEFAULT_SENSORS = 3

UNIQUE_CONTINUATION_NOTE = (
    "Unique continuation is not run as an algorithm; it is covered by the global injectivity certificate "
    "of the discrete sensitivity map."
)


class ObservationSpec(ArrayModel):
    """Interior observation on ω over the window (T₁, T) through smooth sensor functionals ψ_j."""

    omega: np.ndarray  # degree-of-freedom indices of ω
    sensors: np.ndarray  # (J, n_dof), ψ_j sampled on the degrees of freedom
    weights: np.ndarray  # quadrature weights of the pairing
    t1: float = pd.Field(0.0, ge=0)
    T: float = pd.Field(..., gt=0)
    T0: Optional[float] = pd.Field(None, gt=0)

    @pd.root_validator(skip_on_failure=True)
    def validate_observation(cls, values: dict) -> dict:
        omega, sensors, weights = values["omega"], values["sensors"], values["weights"]
        if omega.size == 0:
            raise HypothesisViolation("window", "ω contains no degrees of freedom")
        if values["t1"] >= values["T"]:
            raise HypothesisViolation("window", "the observation window needs T₁ < T", (values["t1"], values["T"]))
        if sensors.ndim != 2 or sensors.shape[1] != len(weights):
            raise ValueError(f"Sensors must have shape (J, {len(weights)}), got {sensors.shape}")

        outside = np.ones(len(weights), dtype=bool)
        outside[omega] = False
        if np.any(sensors[:, outside]):
            raise HypothesisViolation("window", "sensor functionals must be supported inside ω")
        if not np.all(np.any(sensors, axis=1)):
            raise HypothesisViolation("window", "every sensor functional must be nonzero on ω")
        return values

    @classmethod
    def build(
        cls,
        op: DiscreteOperator,
        omega: RegionSpec,
        t1: float,
        T: float,
        n_sensors: int = DEFAULT_SENSORS,
        T0: Optional[float] = None,
    ) -> ObservationSpec:
        """Smooth bumps on `n_sensors` consecutive slabs of the bounding box of ω, cut along the first axis."""

        mask = op.region_mask(omega)
        if not mask.any():
            raise HypothesisViolation("window", "ω contains no degrees of freedom", omega)

        coords = op.mesh.nodes[op.dofs]
        lo, hi = coords[mask].min(axis=0), coords[mask].max(axis=0)
        edges = np.linspace(lo[0], hi[0], n_sensors + 1)

        sensors = np.ones((n_sensors, op.n))
        for j in range(n_sensors):
            sensors[j] *= smooth_bump(coords[:, 0], 0.5 * (edges[j] + edges[j + 1]), 0.5 * (edges[j + 1] - edges[j]))
        for k in range(1, coords.shape[1]):
            sensors *= smooth_bump(coords[:, k], 0.5 * (lo[k] + hi[k]), 0.5 * (hi[k] - lo[k]))[None, :]
        sensors[:, ~mask] = 0.0

        if not np.all(np.any(sensors, axis=1)):
            raise HypothesisViolation("window", f"ω is too narrow for {n_sensors} sensors", omega)
        return cls(omega=np.flatnonzero(mask), sensors=sensors, weights=op.weights, t1=t1, T=T, T0=T0)

    @property
    def n_sensors(self) -> int:
        return self.sensors.shape[0]

    @property
    def functionals(self) -> FloatArray:
        """Rows W·ψ_j, so that ⟨f, ψ_j⟩ = functionals @ f."""
        return self.sensors * self.weights

    @property
    def omega_mask(self) -> np.ndarray:
        mask = np.zeros(len(self.weights), dtype=bool)
        mask[self.omega] = True
        return mask


class CertificatePoint(pd.BaseModel):
    parameter: str
    value: float
    certificate: float
    sigma_min: float
    rank: int


class TitchmarshReport(pd.BaseModel):
    a: float
    b: float
    c: Optional[float]
    gap: Optional[float]
    tolerance: float
    threshold_rel: float
    consistent: bool
    anomaly: bool


class InverseReport(pd.BaseModel):
    """Outcome of an inverse run. Flags are derived from the thresholds passed to the run only."""

    experiment: Experiment
    h: Optional[list[float]] = None
    mu: Optional[list[float]] = None
    errors: dict[str, float] = {}
    residual: Optional[float] = None
    singular_values: list[float] = []
    certificate: Optional[float] = None
    sigma_min: Optional[float] = None
    rank: Optional[int] = None
    cutoff: float = SVD_CUTOFF
    deconvolution_singular_values: list[float] = []
    deconvolution_rank: Optional[int] = None
    support: dict[str, float] = {}
    support_threshold: float = SUPPORT_THRESHOLD
    markers: dict[str, float] = {}
    sweep: list[CertificatePoint] = []
    flags: dict[str, bool] = {}
    notes: list[str] = [UNIQUE_CONTINUATION_NOTE]

    @property
    def passed(self) -> bool:
        return all(self.flags.values())


def support_infimum(f: TimeSignal, threshold_rel: float = SUPPORT_THRESHOLD) -> float:
    """First node where |f| exceeds threshold_rel·max|f|, moved back by half a step."""

    magnitude = np.abs(f.values)
    peak = magnitude.max()
    if peak == 0:
        raise ValueError("The signal vanishes identically, its support is empty")
    first = int(np.flatnonzero(magnitude > threshold_rel * peak)[0])
    return max(float(f.t[first]) - 0.5 * f.grid.dt, f.grid.t_start)


def titchmarsh_check(
    f: TimeSignal, g: TimeSignal, T: float, threshold_rel: float = SUPPORT_THRESHOLD
) -> TitchmarshReport:
    """inf supp(f*g) against inf supp f + inf supp g on [0, T], within two time steps."""

    a = support_infimum(f, threshold_rel)
    b = support_infimum(g, threshold_rel)
    conv = convolve(f, g)
    observed = np.where(conv.t <= T + 1e-9 * conv.grid.dt, conv.values, 0.0)
    report = {"a": a, "b": b, "tolerance": 2 * f.grid.dt, "threshold_rel": threshold_rel}

    if not np.any(observed):
        anomaly = a + b < T
        if anomaly:
            logger.warning(f"f*g vanishes on [0, {T}] although inf supp f + inf supp g = {a + b:.6g} < T")
        return TitchmarshReport(**report, c=None, gap=None, consistent=not anomaly, anomaly=anomaly)

    c = support_infimum(conv.with_values(observed), threshold_rel)
    gap = abs(c - (a + b))
    return TitchmarshReport(**report, c=c, gap=gap, consistent=gap <= report["tolerance"], anomaly=False)


def _window_grid(grid: TimeGrid, window: slice) -> TimeGrid:
    n_steps = window.stop - window.start - 1
    if n_steps < 2:
        raise HypothesisViolation("window", "the observation window holds fewer than three time nodes")
    return TimeGrid(dt=grid.dt, n_steps=n_steps, t_start=float(grid.t[window.start]))


def observe(u: SpaceTimeField, spec: ObservationSpec) -> list[TimeSignal]:
    """u_ψ(t) = Σ_k W_k u(t, x_k)ψ_j(x_k) for every sensor, sampled on the window (T₁, T)."""

    if u.values.shape[1] != len(spec.weights):
        raise ValueError(f"Field has {u.values.shape[1]} unknowns, the observation expects {len(spec.weights)}")
    if spec.T > u.grid.t_end + 1e-9 * u.grid.dt:
        raise ValueError(f"Observation ends at T={spec.T}, the field at {u.grid.t_end}")

    window = u.grid.window(spec.t1, spec.T)
    grid = _window_grid(u.grid, window)
    paired = u.values[window] @ spec.functionals.T
    return [TimeSignal(grid=grid, values=paired[:, j]) for j in range(spec.n_sensors)]


def truncate_signals(signals: Sequence[TimeSignal], t_to: float) -> list[TimeSignal]:
    out = []
    for signal in signals:
        window = signal.grid.window(signal.grid.t_start, t_to)
        out.append(TimeSignal(grid=_window_grid(signal.grid, window), values=signal.values[window]))
    return out


def build_basis(
    op: DiscreteOperator,
    kind: BasisKind = BasisKind.EIGEN,
    n_basis: int = DEFAULT_BASIS_SIZE,
    exclude: Optional[ArrayLike] = None,
) -> FloatArray:
    """W-orthonormal columns vanishing on the excluded degrees of freedom, shape (n_dof, m).

    The eigen basis holds the lowest eigenvectors of 𝓐 with homogeneous Dirichlet data on the
    excluded set; the nodal basis has one scaled indicator per kept degree of freedom.
    """

    keep = np.ones(op.n, dtype=bool) if exclude is None else ~np.asarray(exclude, dtype=bool)
    kept = np.flatnonzero(keep)
    if kept.size == 0:
        raise ValueError("Every degree of freedom is excluded from the basis")

    if kind == BasisKind.NODAL:
        basis = np.zeros((op.n, kept.size))
        basis[kept, np.arange(kept.size)] = 1 / np.sqrt(op.weights[kept])
        return basis

    m = min(n_basis, kept.size)
    stiffness = (sp.diags(op.weights) @ op.matrix).tocsr()[kept][:, kept].toarray()
    stiffness = 0.5 * (stiffness + stiffness.T)
    _, vectors = scipy.linalg.eigh(stiffness, np.diag(op.weights[kept]), subset_by_index=[0, m - 1])
    for j in range(m):
        column = vectors[:, j]
        first = np.flatnonzero(np.abs(column) > 1e-8 * np.abs(column).max())[0]
        if column[first] < 0:
            vectors[:, j] = -column

    basis = np.zeros((op.n, m))
    basis[kept] = vectors
    logger.debug(f"Built {kind.value} basis with {m} functions on {kept.size} degrees of freedom")
    return basis


def observed_kernel_antiderivatives(
    op: DiscreteOperator,
    order: OrderField,
    columns: ArrayLike,
    spec: ObservationSpec,
    grid: TimeGrid,
    method: SolveMethod = SolveMethod.CONTOUR,
    *,
    eig: Optional[EigenSystem] = None,
    theta: float = DEFAULT_THETA,
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """First and second antiderivatives of s ↦ ⟨S(s)b_m, ψ_j⟩ for every column b_m, shape (size, J, m)."""

    columns = np.asarray(columns, dtype=float)
    s = grid.dt * np.arange(grid.size)

    if method == SolveMethod.SPECTRAL:
        if not order.is_constant or not op.self_adjoint:
            raise ValueError("The spectral method needs a constant order and b ≡ 0")
        eig = eig or eigensystem(op, op.n)
        k1, k2 = modal_kernel_antiderivatives(eig, order.alpha, s)
        sensor_modes = spec.functionals @ eig.eigenvectors
        column_modes = (columns.T * op.weights) @ eig.eigenvectors
        return (
            np.einsum("sn,jn,mn->sjm", k1, sensor_modes, column_modes),
            np.einsum("sn,jn,mn->sjm", k2, sensor_modes, column_modes),
        )

    if method == SolveMethod.CONTOUR:
        k1, k2 = contour_kernel_antiderivatives(op, order, columns, s, theta=theta, threads=threads)
        return np.einsum("snm,jn->sjm", k1, spec.functionals), np.einsum("snm,jn->sjm", k2, spec.functionals)

    raise ValueError(f"Sensitivity maps support spectral and contour methods, not {method.value}")


def sensitivity_tensor(
    op: DiscreteOperator,
    order: OrderField,
    mu: TimeSignal,
    spec: ObservationSpec,
    basis: ArrayLike,
    method: SolveMethod = SolveMethod.CONTOUR,
    *,
    eig: Optional[EigenSystem] = None,
    theta: float = DEFAULT_THETA,
    threads: int = 1,
) -> np.ndarray:
    """G[n, j, m] = ⟨(μ * S(·)b_m)(t_n), ψ_j⟩ on the whole grid of μ."""

    mu.grid.require_origin()
    k1, k2 = observed_kernel_antiderivatives(
        op, order, basis, spec, mu.grid, method, eig=eig, theta=theta, threads=threads
    )
    c, e = product_trapezoid_weights(lambda _: k1, lambda _: k2, mu.grid)
    return causal_convolve(c, e, mu.values)


def _window_rows(grid: TimeGrid, t1: float, T: float) -> slice:
    if T > grid.t_end + 1e-9 * grid.dt:
        raise ValueError(f"Observation ends at T={T}, the source grid at {grid.t_end}")
    return grid.window(t1, T)


def _sensitivity_matrix(G: np.ndarray, grid: TimeGrid, t1: float, T: float) -> np.ndarray:
    rows = _window_rows(grid, t1, T)
    return math.sqrt(grid.dt) * G[rows].reshape(-1, G.shape[-1])


def _data_vector(data: Sequence[TimeSignal], grid: TimeGrid, spec: ObservationSpec) -> np.ndarray:
    rows = _window_rows(grid, spec.t1, spec.T)
    expected = grid.t[rows]
    if len(data) != spec.n_sensors:
        raise ValueError(f"Expected {spec.n_sensors} observed signals, got {len(data)}")
    for signal in data:
        if len(signal.values) != len(expected) or abs(signal.grid.t_start - expected[0]) > 1e-9 * grid.dt:
            raise ValueError("Observed signals do not cover the observation window of the source grid")
    return math.sqrt(grid.dt) * np.stack([signal.values for signal in data], axis=1).ravel()


def truncated_svd_solve(
    A: np.ndarray, y: np.ndarray, cutoff: float
) -> tuple[np.ndarray, FloatArray, int]:
    """Least-squares solution on the singular values above cutoff·σ_max; returns (x, σ, effective rank)."""

    U, sigma, Vt = scipy.linalg.svd(A, full_matrices=False, lapack_driver="gesvd")
    rank = int(np.sum(sigma > cutoff * sigma[0])) if sigma.size and sigma[0] > 0 else 0
    if rank == 0:
        raise RankDeficiencyError("The sensitivity map has effective rank zero; the observation is uninformative")
    x = Vt[:rank].T @ ((U[:, :rank].T @ y) / sigma[:rank])
    logger.debug(f"Truncated SVD kept {rank} of {sigma.size} singular values above {cutoff:.1e}·σ_max")
    return x, sigma, rank


def _relative_residual(A: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    defect = float(np.linalg.norm(A @ x - y))
    scale = float(np.linalg.norm(y))
    return defect / scale if scale > 0 else defect


def _source_marker(mu: TimeSignal, spec: ObservationSpec) -> float:
    T0 = spec.T0 if spec.T0 is not None else mu.T0
    return spec.T if T0 is None else T0


def _check_source_onset(
    mu: TimeSignal, T0: float, condition: str, threshold_rel: float = SUPPORT_THRESHOLD
) -> float:
    """inf supp μ, which must lie below T₀."""

    window = mu.grid.window(0.0, T0)
    if not np.any(mu.values[window]):
        raise HypothesisViolation(condition, f"μ vanishes identically on (0, {T0:g})")
    onset = support_infimum(mu, threshold_rel)
    if onset >= T0:
        raise HypothesisViolation(condition, f"inf supp μ = {onset:g} is not below T₀ = {T0:g}", onset)
    return onset


def _data_onset(data: Sequence[TimeSignal], threshold_rel: float) -> Optional[float]:
    onsets = [support_infimum(signal, threshold_rel) for signal in data if np.any(signal.values)]
    return min(onsets) if onsets else None


def _check_basis_vanishes(basis: np.ndarray, mask: np.ndarray, condition: str, where: str) -> None:
    if np.any(basis[mask]):
        raise HypothesisViolation(condition, f"the h basis must vanish on {where}")


def relative_error(op: DiscreteOperator, estimate: ArrayLike, truth: ArrayLike) -> float:
    truth = np.asarray(truth, dtype=float)
    scale = op.norm(truth)
    defect = op.norm(np.asarray(estimate) - truth)
    return defect / scale if scale > 0 else defect


def project_onto_basis(op: DiscreteOperator, basis: np.ndarray, f: ArrayLike) -> FloatArray:
    """W-orthogonal projection onto the span of a W-orthonormal basis."""
    return basis @ ((basis.T * op.weights) @ np.asarray(f, dtype=float))


def reconstruct_h(
    op: DiscreteOperator,
    order: OrderField,
    mu: TimeSignal,
    spec: ObservationSpec,
    data: Sequence[TimeSignal],
    *,
    basis: ArrayLike,
    method: SolveMethod = SolveMethod.CONTOUR,
    eig: Optional[EigenSystem] = None,
    svd_cutoff: float = SVD_CUTOFF,
    require_vanishing_on_omega: bool = True,
    support_threshold: float = SUPPORT_THRESHOLD,
    theta: float = DEFAULT_THETA,
    threads: int = 1,
) -> tuple[FloatArray, InverseReport]:
    """Least-squares h in span(basis) from the observed u_ψ, with μ known on (0, T).

    The support infima of μ and of the data are estimated with `support_threshold`; the data may not
    start before the source, up to two time steps.
    """

    basis = np.asarray(basis, dtype=float)
    T0 = _source_marker(mu, spec)
    if T0 > spec.T:
        raise HypothesisViolation("window", "the observation must not end before T₀", (T0, spec.T))
    onset = _check_source_onset(mu, T0, "t1b", support_threshold)
    if require_vanishing_on_omega:
        _check_basis_vanishes(basis, spec.omega_mask, "h-omega", "ω")

    G = sensitivity_tensor(op, order, mu, spec, basis, method, eig=eig, theta=theta, threads=threads)
    A = _sensitivity_matrix(G, mu.grid, spec.t1, spec.T)
    y = _data_vector(data, mu.grid, spec)
    coefficients, sigma, rank = truncated_svd_solve(A, y, svd_cutoff)
    h = basis @ coefficients

    support = {"mu": onset}
    flags = {"t1b": onset < T0, "rank_positive": rank > 0, "h_vanishes_on_omega": not np.any(h[spec.omega_mask])}
    data_onset = _data_onset(data, support_threshold)
    if data_onset is not None:
        support["data"] = data_onset
        flags["data_after_source"] = data_onset >= onset - 2 * mu.grid.dt

    report = InverseReport(
        experiment=Experiment.INVERT_H,
        h=h.tolist(),
        residual=_relative_residual(A, coefficients, y),
        singular_values=sigma.tolist(),
        certificate=float(sigma[rank - 1]),
        sigma_min=float(sigma[-1]),
        rank=rank,
        cutoff=svd_cutoff,
        support=support,
        support_threshold=support_threshold,
        markers={"T0": T0, "T1": spec.t1, "T": spec.T},
        flags=flags,
    )
    logger.info(f"Recovered h with rank {rank}/{basis.shape[1]}, certificate σ={report.certificate:.3e}")
    return h, report


def _convolution_matrix(c: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Lower-triangular L with (L f)_n = Σ_{m<n} c_m f_{n−m} + e_n f_0."""

    n = len(c)
    L = np.zeros((n + 1, n + 1))
    L[:, 1:] = scipy.linalg.toeplitz(np.r_[0.0, c], np.zeros(n))
    L[:, 0] = e
    return L


def reconstruct_mu_h(
    op: DiscreteOperator,
    order: OrderField,
    mu_known: TimeSignal,
    spec: ObservationSpec,
    data: Sequence[TimeSignal],
    *,
    basis: ArrayLike,
    method: SolveMethod = SolveMethod.CONTOUR,
    eig: Optional[EigenSystem] = None,
    svd_cutoff: float = SVD_CUTOFF,
    deconvolution_cutoff: float = DECONVOLUTION_CUTOFF,
    support_threshold: float = SUPPORT_THRESHOLD,
    obstacle: Optional[ArrayLike] = None,
    theta: float = DEFAULT_THETA,
    threads: int = 1,
) -> tuple[TimeSignal, FloatArray, InverseReport]:
    """Simultaneous recovery of μ on (0, T) and h, with μ known only on (0, T₀).

    Stage one recovers h from the observations on (T₁, T₀), which depend on the known part of μ only.
    Stage two solves the first-kind Volterra equation u_ψ = μ * v_ψ, v_ψ = ⟨S(·)ĥ, ψ⟩, for the samples
    of μ on [T₀, T] by truncated SVD. `obstacle` marks the set 𝒪 on which h must vanish as well.
    """

    basis = np.asarray(basis, dtype=float)
    T0 = spec.T0 if spec.T0 is not None else mu_known.T0
    if T0 is None:
        raise HypothesisViolation("c2a", "μ must be known on (0, T₀) with T₀ given")
    if not spec.t1 < T0 <= spec.T:
        raise HypothesisViolation("window", "simultaneous recovery needs T₁ < T₀ ≤ T", (spec.t1, T0, spec.T))
    onset = _check_source_onset(mu_known, T0, "c2a", support_threshold)
    _check_basis_vanishes(basis, spec.omega_mask, "c2aa", "ω")
    if obstacle is not None:
        _check_basis_vanishes(basis, np.asarray(obstacle, dtype=bool), "c2aa", "ω ∪ 𝒪")

    grid = mu_known.grid
    tol = 1e-9 * grid.dt
    known = grid.t <= T0 + tol
    mu_head = mu_known.with_values(np.where(known, mu_known.values, 0.0))

    # stage 1
    stage_spec = spec.copy(update={"T": T0})
    h, stage = reconstruct_h(
        op,
        order,
        mu_head,
        stage_spec,
        truncate_signals(data, T0),
        basis=basis,
        method=method,
        eig=eig,
        svd_cutoff=svd_cutoff,
        support_threshold=support_threshold,
        theta=theta,
        threads=threads,
    )
    head = _data_vector(truncate_signals(data, T0), grid, stage_spec)
    full = _data_vector(data, grid, spec)
    if not np.any(h) or np.linalg.norm(head) <= 1e-12 * np.linalg.norm(full):
        raise RankDeficiencyError("[c2aa] the recovered h vanishes, μ cannot be deconvolved")

    # stage 2
    k1, k2 = observed_kernel_antiderivatives(
        op, order, h[:, None], spec, grid, method, eig=eig, theta=theta, threads=threads
    )
    c, e = product_trapezoid_weights(lambda _: k1[..., 0], lambda _: k2[..., 0], grid)
    rows = _window_rows(grid, spec.t1, spec.T)
    columns = slice(0, rows.stop)
    unknown = ~known[columns]

    blocks, targets = [], []
    observed = np.stack([signal.values for signal in data], axis=1)
    for j in range(spec.n_sensors):
        L = _convolution_matrix(c[:, j], e[:, j])[rows, columns]
        blocks.append(L[:, unknown])
        targets.append(observed[:, j] - L[:, ~unknown] @ mu_known.values[columns][~unknown])
    A = math.sqrt(grid.dt) * np.concatenate(blocks)
    y = math.sqrt(grid.dt) * np.concatenate(targets)

    tail, sigma, rank = truncated_svd_solve(A, y, deconvolution_cutoff)
    values = np.where(known[columns], mu_known.values[columns], 0.0)
    values[unknown] = tail
    mu = TimeSignal(grid=TimeGrid(dt=grid.dt, n_steps=columns.stop - 1), values=values, T0=T0)

    hidden = spec.omega_mask if obstacle is None else spec.omega_mask | np.asarray(obstacle, dtype=bool)
    support = {**stage.support, "mu_recovered": support_infimum(mu, support_threshold)}
    flags = {
        "c2a": spec.t1 < T0 and onset < T0,
        "c2aa": not np.any(h[hidden]),
        "rank_positive": (stage.rank or 0) > 0 and rank > 0,
    }
    data_onset = _data_onset(data, support_threshold)
    if data_onset is not None:
        support["data"] = data_onset
        flags["data_after_source"] = data_onset >= onset - 2 * grid.dt

    report = stage.copy(
        update={
            "experiment": Experiment.INVERT_MU_H,
            "mu": values.tolist(),
            "deconvolution_singular_values": sigma.tolist(),
            "deconvolution_rank": rank,
            "markers": {"T0": T0, "T1": spec.t1, "T": spec.T},
            "support": support,
            "flags": flags,
        }
    )
    logger.info(f"Deconvolved μ on [{T0:g}, {spec.T:g}] with rank {rank}/{int(unknown.sum())}")
    return mu, h, report


def _certificate(A: np.ndarray, cutoff: float) -> tuple[float, float, int, FloatArray]:
    sigma = scipy.linalg.svdvals(A)
    rank = int(np.sum(sigma > cutoff * sigma[0])) if sigma[0] > 0 else 0
    return (float(sigma[rank - 1]) if rank else 0.0), float(sigma[-1]), rank, sigma


def hyperbolic_uniqueness_experiment(
    op: DiscreteOperator,
    mu: TimeSignal,
    omega: RegionSpec,
    *,
    T0: float,
    factors: Sequence[float] = (0.5, 1.0, 1.5),
    n_sensors: int = DEFAULT_SENSORS,
    basis_kind: BasisKind = BasisKind.EIGEN,
    n_basis: int = DEFAULT_BASIS_SIZE,
    eig: Optional[EigenSystem] = None,
    svd_cutoff: float = SVD_CUTOFF,
    min_ratio: float = 10.0,
    support_threshold: float = SUPPORT_THRESHOLD,
) -> InverseReport:
    """Injectivity certificate of the α = 2 sensitivity map for T = factor·T*, T* the control time."""

    if not op.self_adjoint:
        raise HypothesisViolation("order-regime", "the hyperbolic case needs b ≡ 0")
    onset = _check_source_onset(mu, T0, "t1b", support_threshold)

    T_star = control_time(op.mesh, op.coeffs, omega, T0)
    times = [factor * T_star for factor in factors]
    order = OrderField.constant(op.mesh, 2.0)
    eig = eig or eigensystem(op, op.n)
    spec = ObservationSpec.build(op, omega, 0.0, max(times), n_sensors, T0)
    basis = build_basis(op, basis_kind, n_basis)

    G = sensitivity_tensor(op, order, mu, spec, basis, SolveMethod.SPECTRAL, eig=eig)
    sweep = []
    with ProgressBar(total=len(times), title="Hyperbolic certificates") as bar:
        for factor, T in zip(factors, times):
            certificate, sigma_min, rank, _ = _certificate(_sensitivity_matrix(G, mu.grid, 0.0, T), svd_cutoff)
            sweep.append(
                CertificatePoint(
                    parameter="T/T*", value=factor, certificate=certificate, sigma_min=sigma_min, rank=rank
                )
            )
            bar.progress()

    below, above = sweep[0].sigma_min, sweep[-1].sigma_min
    ratio = above / below if below > 0 else math.inf
    logger.info(f"Control time T*={T_star:.4g}; certificate ratio across the threshold {ratio:.3g}")
    return InverseReport(
        experiment=Experiment.HYPERBOLIC,
        singular_values=[],
        certificate=sweep[-1].certificate,
        sigma_min=above,
        rank=sweep[-1].rank,
        cutoff=svd_cutoff,
        markers={"T0": T0, "T_star": T_star, "ratio": ratio},
        support={"mu": onset},
        support_threshold=support_threshold,
        sweep=sweep,
        flags={"t1a": times[-1] > T_star, "certificate_growth": ratio >= min_ratio},
    )


def locality_sweep(
    op: DiscreteOperator,
    mu: TimeSignal,
    omega: RegionSpec,
    h_region: RegionSpec,
    T_values: Sequence[float],
    *,
    T0: float,
    n_sensors: int = DEFAULT_SENSORS,
    n_basis: int = DEFAULT_BASIS_SIZE,
    eig: Optional[EigenSystem] = None,
    svd_cutoff: float = SVD_CUTOFF,
) -> InverseReport:
    """Wave certificates for sources confined to `h_region`, against the local travel time to ω."""

    if not op.self_adjoint:
        raise HypothesisViolation("order-regime", "the hyperbolic case needs b ≡ 0")

    inside = op.region_mask(h_region)
    coords = op.mesh.x[op.dofs][inside]
    travel = T0 + float(riemannian_distance(op.mesh, op.coeffs, coords, omega).max())

    order = OrderField.constant(op.mesh, 2.0)
    eig = eig or eigensystem(op, op.n)
    spec = ObservationSpec.build(op, omega, 0.0, max(T_values), n_sensors, T0)
    basis = build_basis(op, BasisKind.EIGEN, n_basis, exclude=~inside)
    G = sensitivity_tensor(op, order, mu, spec, basis, SolveMethod.SPECTRAL, eig=eig)

    sweep = []
    for T in T_values:
        certificate, sigma_min, rank, _ = _certificate(_sensitivity_matrix(G, mu.grid, 0.0, T), svd_cutoff)
        sweep.append(CertificatePoint(parameter="T", value=T, certificate=certificate, sigma_min=sigma_min, rank=rank))

    return InverseReport(
        experiment=Experiment.HYPERBOLIC,
        certificate=sweep[-1].certificate,
        sigma_min=sweep[-1].sigma_min,
        rank=sweep[-1].rank,
        cutoff=svd_cutoff,
        markers={"T0": T0, "local_travel_time": travel},
        sweep=sweep,
    )


def _stray_interfaces(op: DiscreteOperator, order: OrderField, obstacle: RegionSpec) -> list[float]:
    """Interior interfaces of the order partition whose neighbouring nodes are not both in 𝒪."""

    on_mesh = op.mesh.region_mask(obstacle)
    stray = []
    for x in order.interfaces(op.mesh):
        neighbours = np.argsort(np.abs(op.mesh.x - x))[:2]
        if not np.all(on_mesh[neighbours]):
            stray.append(float(x))
    return stray


def check_variable_order_geometry(
    op: DiscreteOperator, order: OrderField, omega: RegionSpec, obstacle: RegionSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Interfaces of the order partition inside 𝒪 and ω ∩ 𝒪 ≠ ∅; returns the dof masks of ω and 𝒪."""

    omega_mask = op.region_mask(omega)
    obstacle_mask = op.region_mask(obstacle)
    stray = _stray_interfaces(op, order, obstacle)
    if stray:
        raise HypothesisViolation("t3b", "interior interfaces of the order partition must lie in 𝒪", stray[0])
    if not np.any(omega_mask & obstacle_mask):
        raise HypothesisViolation("t3aa", "ω must intersect 𝒪")
    return omega_mask, obstacle_mask


def variable_order_experiment(
    op: DiscreteOperator,
    order: OrderField,
    mu: TimeSignal,
    omega: RegionSpec,
    obstacle: RegionSpec,
    h_true: ArrayLike,
    *,
    t1: float,
    T: float,
    T0: float,
    n_sensors: int = DEFAULT_SENSORS,
    n_basis: int = DEFAULT_BASIS_SIZE,
    svd_cutoff: float = SVD_CUTOFF,
    support_threshold: float = SUPPORT_THRESHOLD,
    tolerance: float = 2e-2,
    theta: float = DEFAULT_THETA,
    threads: int = 1,
) -> InverseReport:
    """Recovery of h with a piecewise-constant order, observing on ω from T₁ ∈ (0, T₀).

    Interior interfaces of the order partition must lie inside 𝒪, ω must meet 𝒪 and h must vanish on
    ω ∪ 𝒪. The ground truth is the projection of `h_true` onto the admissible basis.
    """

    omega_mask, obstacle_mask = check_variable_order_geometry(op, order, omega, obstacle)
    h_true = np.asarray(h_true, dtype=float)
    if np.any(h_true[omega_mask]):
        raise HypothesisViolation("t3aa", "h must vanish in ω")
    if not 0 < t1 < T0:
        raise HypothesisViolation("window", "the delayed window needs 0 < T₁ < T₀", (t1, T0))

    basis = build_basis(op, BasisKind.EIGEN, n_basis, exclude=omega_mask | obstacle_mask)
    truth = project_onto_basis(op, basis, h_true)
    spec = ObservationSpec.build(op, omega, t1, T, n_sensors, T0)

    u = duhamel_solve(op, order, mu, truth, SolveMethod.CONTOUR, threads=threads)
    data = observe(u, spec)
    h, report = reconstruct_h(
        op,
        order,
        mu,
        spec,
        data,
        basis=basis,
        svd_cutoff=svd_cutoff,
        support_threshold=support_threshold,
        theta=theta,
        threads=threads,
    )

    error = relative_error(op, h, truth)
    flags = {
        **report.flags,
        "t3b": not _stray_interfaces(op, order, obstacle),
        "t3aa": bool(np.any(omega_mask & obstacle_mask)) and not np.any(h[omega_mask | obstacle_mask]),
        "vo": 0 < order.alpha0 and order.alphaM < min(2 * order.alpha0, 1),
        "recovery": error <= tolerance,
    }
    return report.copy(
        update={
            "experiment": Experiment.VARIABLE_ORDER,
            "errors": {"h": error, "projection": relative_error(op, truth, h_true)},
            "flags": flags,
        }
    )


def delayed_window_experiment(
    op: DiscreteOperator,
    order: OrderField,
    mu: TimeSignal,
    omega: RegionSpec,
    *,
    T: float,
    T0: float,
    t1_values: Optional[Sequence[float]] = None,
    n_sensors: int = DEFAULT_SENSORS,
    n_basis: int = DEFAULT_BASIS_SIZE,
    method: SolveMethod = SolveMethod.CONTOUR,
    eig: Optional[EigenSystem] = None,
    svd_cutoff: float = SVD_CUTOFF,
    support_threshold: float = SUPPORT_THRESHOLD,
    threads: int = 1,
) -> InverseReport:
    """Certificate of the sensitivity map against the window start T₁.

    For α ≠ 1 a strictly positive certificate is required at T₁ ∈ {0, T₀/2}. For α = 1 the sweep is
    reported without a verdict on T₁ > 0.
    """

    if not order.is_constant:
        raise ValueError("The delayed-window experiment uses a constant order")
    t1_values = list(t1_values) if t1_values is not None else [0.0, T0 / 2]
    onset = _check_source_onset(mu, T0, "t1b", support_threshold)

    spec = ObservationSpec.build(op, omega, 0.0, T, n_sensors, T0)
    basis = build_basis(op, BasisKind.EIGEN, n_basis, exclude=spec.omega_mask)
    G = sensitivity_tensor(op, order, mu, spec, basis, method, eig=eig, threads=threads)

    sweep = []
    with ProgressBar(total=len(t1_values), title="Delayed windows") as bar:
        for t1 in t1_values:
            certificate, sigma_min, rank, _ = _certificate(_sensitivity_matrix(G, mu.grid, t1, T), svd_cutoff)
            sweep.append(
                CertificatePoint(parameter="T1", value=t1, certificate=certificate, sigma_min=sigma_min, rank=rank)
            )
            bar.progress()

    flags, notes = {}, [UNIQUE_CONTINUATION_NOTE]
    if order.alpha == 1:
        flags["certificate_positive[T1=0]"] = any(p.value == 0 and p.certificate > 0 for p in sweep)
        notes.append("α = 1: certificates for T₁ > 0 are reported without a uniqueness verdict.")
    else:
        for point in sweep:
            if point.value in (0.0, T0 / 2):
                flags[f"certificate_positive[T1={point.value:g}]"] = point.certificate > 0 and point.rank > 0

    return InverseReport(
        experiment=Experiment.DELAYED_WINDOW,
        certificate=min(p.certificate for p in sweep),
        sigma_min=min(p.sigma_min for p in sweep),
        rank=min(p.rank for p in sweep),
        cutoff=svd_cutoff,
        markers={"T0": T0, "T": T, "alpha": order.alpha},
        support={"mu": onset},
        support_threshold=support_threshold,
        sweep=sweep,
        flags=flags,
        notes=notes,
    )


__all__ = [
    "ObservationSpec",
    "CertificatePoint",
    "TitchmarshReport",
    "InverseReport",
    "support_infimum",
    "titchmarsh_check",
    "observe",
    "truncate_signals",
    "build_basis",
    "observed_kernel_antiderivatives",
    "sensitivity_tensor",
    "truncated_svd_solve",
    "relative_error",
    "project_onto_basis",
    "reconstruct_h",
    "reconstruct_mu_h",
    "hyperbolic_uniqueness_experiment",
    "locality_sweep",
    "check_variable_order_geometry",
    "variable_order_experiment",
    "delayed_window_experiment",
]
