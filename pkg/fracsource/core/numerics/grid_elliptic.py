from __future__ import annotations

import logging
from typing import Callable, Optional, Sequence, Union

import numpy as np
import pydantic as pd
import scipy.linalg
import scipy.sparse as sp
from numpy.typing import ArrayLike
from scipy.integrate import cumulative_trapezoid

from fracsource.core.exceptions import EigenSolverError, HypothesisViolation
from fracsource.core.models.arrays import ArrayModel, FloatArray, IndexArray
from fracsource.core.models.enum import BoundaryCondition

logger = logging.getLogger("fracsource")

Interval = tuple[float, float]
FieldSpec = Union[float, ArrayLike, Callable[..., ArrayLike]]
RegionSpec = Union[Interval, Sequence[Interval], IndexArray]


class SpatialMesh(ArrayModel):
    """Uniform tensor-product mesh of an interval (dimension 1) or a rectangle (dimension 2).

    Nodes are stored row-major over the axes, boundary nodes included.
    """

    dimension: int = pd.Field(..., ge=1, le=2)
    shape: tuple[int, ...]
    extent: tuple[Interval, ...]
    spacing: tuple[float, ...]
    nodes: np.ndarray
    interior: np.ndarray
    boundary: np.ndarray

    @pd.validator("spacing")
    def validate_spacing(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if any(h <= 0 for h in v):
            raise ValueError(f"Mesh spacing must be positive, got {v}")
        return v

    @pd.validator("shape")
    def validate_shape(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if any(m < 3 for m in v):
            raise ValueError(f"Every axis needs at least 3 nodes, got {v}")
        return v

    @classmethod
    def uniform(cls, extent: Sequence[Interval], n_interior: Union[int, Sequence[int]]) -> SpatialMesh:
        """Mesh with `n_interior` interior nodes per axis, so that h = length / (n_interior + 1)."""

        extent = tuple((float(lo), float(hi)) for lo, hi in extent)
        if isinstance(n_interior, int):
            n_interior = [n_interior] * len(extent)
        if len(n_interior) != len(extent):
            raise ValueError("n_interior must give one count per axis")
        if any(hi <= lo for lo, hi in extent):
            raise ValueError(f"Degenerate extent {extent}")

        axes = [np.linspace(lo, hi, n + 2) for (lo, hi), n in zip(extent, n_interior)]
        shape = tuple(len(axis) for axis in axes)
        grids = np.meshgrid(*axes, indexing="ij")
        nodes = np.stack([g.ravel() for g in grids], axis=1)

        on_boundary = np.zeros(shape, dtype=bool)
        for k in range(len(shape)):
            view = np.moveaxis(on_boundary, k, 0)
            view[0] = True
            view[-1] = True
        flat = on_boundary.ravel()

        return cls(
            dimension=len(extent),
            shape=shape,
            extent=extent,
            spacing=tuple(float(axis[1] - axis[0]) for axis in axes),
            nodes=nodes,
            interior=np.flatnonzero(~flat),
            boundary=np.flatnonzero(flat),
        )

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    @property
    def x(self) -> FloatArray:
        """Coordinates of a 1D mesh."""
        if self.dimension != 1:
            raise ValueError("x is only defined for 1D meshes")
        return self.nodes[:, 0]

    @property
    def h(self) -> float:
        return self.spacing[0]

    def region_mask(self, region: RegionSpec) -> np.ndarray:
        """Boolean mask over all nodes for an interval, a list of intervals (1D) or a box, or explicit indices."""

        if isinstance(region, np.ndarray) and np.issubdtype(region.dtype, np.integer):
            mask = np.zeros(self.n_nodes, dtype=bool)
            mask[region] = True
            return mask

        tol = 1e-12 * max(hi - lo for lo, hi in self.extent)
        if self.dimension == 1:
            boxes = [region] if np.ndim(region) == 1 else list(region)  # type: ignore[arg-type]
            mask = np.zeros(self.n_nodes, dtype=bool)
            for lo, hi in boxes:
                mask |= (self.x >= lo - tol) & (self.x <= hi + tol)
            return mask

        # 2D box given as ((x0, x1), (y0, y1))
        mask = np.ones(self.n_nodes, dtype=bool)
        for k, (lo, hi) in enumerate(region):  # type: ignore[misc]
            mask &= (self.nodes[:, k] >= lo - tol) & (self.nodes[:, k] <= hi + tol)
        return mask


class CoefficientSet(ArrayModel):
    """Nodal samples of the coefficients of 𝓛 = −div(a∇) + b·∇ + c and the weight ρ."""

    a: np.ndarray  # (n_nodes, d, d)
    b: np.ndarray  # (n_nodes, d)
    c: np.ndarray  # (n_nodes,)
    rho: np.ndarray  # (n_nodes,)
    kappa: float = pd.Field(..., gt=0)
    boundary: BoundaryCondition = BoundaryCondition.DIRICHLET
    # Test mode for textbook stencils with c = 0; disables the c ≥ κ check only.
    allow_zero_potential: bool = False

    @pd.root_validator(skip_on_failure=True)
    def validate_hypotheses(cls, values: dict) -> dict:
        a, b, c, rho, kappa = values["a"], values["b"], values["c"], values["rho"], values["kappa"]
        n = len(c)
        if a.ndim != 3 or a.shape[0] != n or a.shape[1] != a.shape[2]:
            raise ValueError(f"a must have shape (n, d, d), got {a.shape}")
        if b.shape != (n, a.shape[1]) or rho.shape != (n,):
            raise ValueError("b, c and rho must be sampled on the same nodes as a")

        if not np.allclose(a, np.swapaxes(a, 1, 2)):
            raise HypothesisViolation("ellipticity", "a is not symmetric")
        smallest = float(np.linalg.eigvalsh(a).min())
        if smallest < kappa * (1 - 1e-12):
            raise HypothesisViolation("ellipticity", f"a ξ·ξ ≥ κ|ξ|² fails for κ={kappa}", smallest)

        if not values.get("allow_zero_potential") and float(c.min()) < kappa * (1 - 1e-12):
            raise HypothesisViolation("c-kappa", f"c must be at least κ={kappa} everywhere", float(c.min()))

        if not np.all(np.isfinite(rho)) or float(rho.min()) <= 0:
            raise HypothesisViolation("eq-rho", "ρ must be bounded below by a positive constant", float(rho.min()))
        return values

    @classmethod
    def build(
        cls,
        mesh: SpatialMesh,
        *,
        a: FieldSpec = 1.0,
        b: Optional[FieldSpec] = None,
        c: FieldSpec = 1.0,
        rho: FieldSpec = 1.0,
        kappa: Optional[float] = None,
        boundary: BoundaryCondition = BoundaryCondition.DIRICHLET,
        allow_zero_potential: bool = False,
    ) -> CoefficientSet:
        """Sample coefficients given as constants, nodal arrays or callables of the coordinates.

        A scalar `a` means the isotropic field a(x)·I. When `kappa` is omitted it is taken as the
        largest admissible value, min(min eig a, min c) (min eig a only in zero-potential mode).
        """

        d = mesh.dimension
        coords = [mesh.nodes[:, k] for k in range(d)]

        def sample(spec: FieldSpec, trailing: tuple[int, ...] = ()) -> FloatArray:
            value = spec(*coords) if callable(spec) else spec
            return np.broadcast_to(np.asarray(value, dtype=float), (mesh.n_nodes, *trailing)).copy()

        a_arr = np.asarray(a(*coords) if callable(a) else a, dtype=float)
        if a_arr.ndim <= 1:
            a_arr = sample(a_arr)[:, None, None] * np.eye(d)
        else:
            a_arr = np.broadcast_to(a_arr, (mesh.n_nodes, d, d)).copy()

        b_arr = np.zeros((mesh.n_nodes, d)) if b is None else sample(b, (d,)) if d > 1 else sample(b)[:, None]
        c_arr = sample(c)
        rho_arr = sample(rho)

        if kappa is None:
            kappa = float(np.linalg.eigvalsh(a_arr).min())
            if not allow_zero_potential:
                kappa = min(kappa, float(c_arr.min()))

        return cls(
            a=a_arr,
            b=b_arr,
            c=c_arr,
            rho=rho_arr,
            kappa=kappa,
            boundary=boundary,
            allow_zero_potential=allow_zero_potential,
        )

    @property
    def self_adjoint(self) -> bool:
        return not np.any(self.b)


class DiscreteOperator(ArrayModel):
    """Finite-difference 𝓛 restricted to the degrees of freedom selected by the boundary condition.

    `weights` are the trapezoid quadrature weights on the degrees of freedom; W·matrix is symmetric
    when b ≡ 0.
    """

    matrix: sp.csr_matrix
    dofs: np.ndarray
    weights: np.ndarray
    mesh: SpatialMesh
    coeffs: CoefficientSet

    @property
    def n(self) -> int:
        return len(self.dofs)

    @property
    def rho(self) -> FloatArray:
        return self.coeffs.rho[self.dofs]

    @property
    def self_adjoint(self) -> bool:
        return self.coeffs.self_adjoint

    def restrict(self, nodal: ArrayLike) -> np.ndarray:
        """Full-mesh nodal values to degrees of freedom."""
        return np.asarray(nodal)[..., self.dofs]

    def extend(self, values: ArrayLike) -> np.ndarray:
        """Degree-of-freedom values to the full mesh, zero on eliminated Dirichlet nodes."""
        values = np.asarray(values)
        full = np.zeros((*values.shape[:-1], self.mesh.n_nodes), dtype=values.dtype)
        full[..., self.dofs] = values
        return full

    def region_mask(self, region: RegionSpec) -> np.ndarray:
        return self.mesh.region_mask(region)[self.dofs]

    def inner(self, f: ArrayLike, g: ArrayLike) -> np.ndarray:
        return np.asarray(f) @ (self.weights * np.asarray(g))

    def inner_rho(self, f: ArrayLike, g: ArrayLike) -> np.ndarray:
        return np.asarray(f) @ (self.weights * self.rho * np.asarray(g))

    def norm(self, f: ArrayLike) -> float:
        f = np.asarray(f)
        return float(np.sqrt(np.sum(self.weights * np.abs(f) ** 2)))

    def norm_rho(self, f: ArrayLike) -> float:
        f = np.asarray(f)
        return float(np.sqrt(np.sum(self.weights * self.rho * np.abs(f) ** 2)))


class EigenSystem(ArrayModel):
    eigenvalues: np.ndarray  # (n_modes,), ascending
    eigenvectors: np.ndarray  # (n_dof, n_modes), ρ-orthonormal columns
    rho: np.ndarray
    weights: np.ndarray

    @property
    def n_modes(self) -> int:
        return len(self.eigenvalues)

    def coefficients(self, f: ArrayLike) -> np.ndarray:
        """(f, φ_n)_ρ for every mode; `f` may carry extra leading axes."""
        return (np.asarray(f) * (self.weights * self.rho)) @ self.eigenvectors

    def synthesize(self, coefficients: ArrayLike) -> np.ndarray:
        return np.asarray(coefficients) @ self.eigenvectors.T


def _axis_weights(m: int, h: float, boundary: BoundaryCondition) -> FloatArray:
    w = np.full(m, h)
    if boundary == BoundaryCondition.NEUMANN:
        w[0] = w[-1] = h / 2
    return w


def assemble_operator(mesh: SpatialMesh, coeffs: CoefficientSet) -> DiscreteOperator:
    """Second-order central-difference discretization of −div(a∇) + b·∇ + c.

    Dirichlet nodes are eliminated. Neumann nodes use a mirrored ghost node, which makes the
    conormal flux vanish and keeps W·𝓐 symmetric.
    """

    if len(coeffs.c) != mesh.n_nodes:
        raise ValueError(f"Coefficients sampled on {len(coeffs.c)} nodes, mesh has {mesh.n_nodes}")
    if mesh.dimension == 2 and np.any(coeffs.a[:, 0, 1]):
        raise ValueError("2D assembly supports diagonal diffusion tensors only")

    index = np.arange(mesh.n_nodes).reshape(mesh.shape)
    rows: list[np.ndarray] = [index.ravel()]
    cols: list[np.ndarray] = [index.ravel()]
    vals: list[np.ndarray] = [coeffs.c.copy()]

    for k in range(mesh.dimension):
        h = mesh.spacing[k]
        idx = np.moveaxis(index, k, 0)
        ak = np.moveaxis(coeffs.a[:, k, k].reshape(mesh.shape), k, 0)
        bk = np.moveaxis(coeffs.b[:, k].reshape(mesh.shape), k, 0)

        faces = 0.5 * (ak[:-1] + ak[1:])
        # face coefficients to the left/right of every node, mirrored at the ends
        left = np.concatenate([faces[:1], faces], axis=0)
        right = np.concatenate([faces, faces[-1:]], axis=0)

        to_left = -left / h**2 - bk / (2 * h)
        to_right = -right / h**2 + bk / (2 * h)
        left_nb = np.concatenate([idx[1:2], idx[:-1]], axis=0)  # ghost u_{-1} = u_1
        right_nb = np.concatenate([idx[1:], idx[-2:-1]], axis=0)  # ghost u_{m} = u_{m-2}

        rows += [idx.ravel(), idx.ravel(), idx.ravel()]
        cols += [idx.ravel(), left_nb.ravel(), right_nb.ravel()]
        vals += [((left + right) / h**2).ravel(), to_left.ravel(), to_right.ravel()]

    full = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(mesh.n_nodes, mesh.n_nodes),
    ).tocsr()

    weights = _axis_weights(mesh.shape[0], mesh.spacing[0], coeffs.boundary)
    for k in range(1, mesh.dimension):
        weights = np.multiply.outer(weights, _axis_weights(mesh.shape[k], mesh.spacing[k], coeffs.boundary))
    weights = weights.ravel()

    dofs = mesh.interior if coeffs.boundary == BoundaryCondition.DIRICHLET else np.arange(mesh.n_nodes)
    matrix = full[dofs][:, dofs].tocsr()
    matrix.sum_duplicates()

    logger.debug(f"Assembled {coeffs.boundary.value} operator with {len(dofs)} unknowns, nnz={matrix.nnz}")
    return DiscreteOperator(matrix=matrix, dofs=dofs, weights=weights[dofs], mesh=mesh, coeffs=coeffs)


def eigensystem(op: DiscreteOperator, n_modes: int) -> EigenSystem:
    """First `n_modes` eigenpairs of 𝓐φ = λρφ, normalized in L²(ρ).

    Solved through the symmetric matrix D^{-1/2}(W𝓐)D^{-1/2} with D = Wρ. Eigenvector signs are
    fixed so that the first significant entry is positive.
    """

    if not op.self_adjoint:
        raise ValueError("The eigensystem is only defined for b ≡ 0")
    if not 1 <= n_modes <= op.n:
        raise ValueError(f"Requested {n_modes} modes from a system with {op.n} unknowns")

    d_inv_sqrt = 1 / np.sqrt(op.weights * op.rho)
    scaled = sp.diags(d_inv_sqrt) @ sp.diags(op.weights) @ op.matrix @ sp.diags(d_inv_sqrt)
    scaled = (0.5 * (scaled + scaled.T)).tocsr()

    try:
        if op.mesh.dimension == 1:
            values, vectors = scipy.linalg.eigh_tridiagonal(
                scaled.diagonal(),
                scaled.diagonal(1),
                select="i",
                select_range=(0, n_modes - 1),
                lapack_driver="stemr",
            )
        else:
            values, vectors = scipy.linalg.eigh(scaled.toarray(), subset_by_index=[0, n_modes - 1])
    except (np.linalg.LinAlgError, ValueError) as e:
        raise EigenSolverError(f"Symmetric eigensolver failed: {e}") from e

    phi = d_inv_sqrt[:, None] * vectors
    for j in range(phi.shape[1]):
        column = phi[:, j]
        first = np.flatnonzero(np.abs(column) > 1e-8 * np.abs(column).max())[0]
        if column[first] < 0:
            phi[:, j] = -column

    if values[0] <= 0 and not op.coeffs.allow_zero_potential:
        raise EigenSolverError(f"Smallest eigenvalue {values[0]:.3e} is not positive")

    logger.debug(f"Computed {n_modes} eigenpairs, λ₁={values[0]:.6g}, λ_max={values[-1]:.6g}")
    return EigenSystem(eigenvalues=values, eigenvectors=phi, rho=op.rho, weights=op.weights)


def _metric_length(mesh: SpatialMesh, coeffs: CoefficientSet) -> FloatArray:
    if mesh.dimension != 1:
        raise ValueError("Riemannian distance is implemented for 1D meshes only")
    integrand = np.sqrt(coeffs.rho / coeffs.a[:, 0, 0])
    return cumulative_trapezoid(integrand, mesh.x, initial=0.0)


def _distance_from_length(mesh: SpatialMesh, length: FloatArray, x: ArrayLike, omega: RegionSpec) -> np.ndarray:
    s_x = np.interp(np.asarray(x, dtype=float), mesh.x, length)

    if isinstance(omega, np.ndarray) and np.issubdtype(omega.dtype, np.integer):
        if omega.size == 0:
            raise ValueError("ω is empty")
        s_omega = length[omega]
        return np.min(np.abs(s_x[..., None] - s_omega), axis=-1)

    boxes = [omega] if np.ndim(omega) == 1 else list(omega)  # type: ignore[arg-type]
    if not boxes:
        raise ValueError("ω is empty")
    dist = np.full(np.shape(s_x), np.inf)
    for lo, hi in boxes:
        s_lo, s_hi = np.interp([lo, hi], mesh.x, length)
        dist = np.minimum(dist, np.maximum(0.0, np.maximum(s_lo - s_x, s_x - s_hi)))
    return dist


def riemannian_distance(mesh: SpatialMesh, coeffs: CoefficientSet, x: ArrayLike, omega: RegionSpec) -> np.ndarray:
    """dist(x, ω) in the metric with line element √(ρ/a)|dx|, by trapezoid on the mesh."""

    return _distance_from_length(mesh, _metric_length(mesh, coeffs), x, omega)


def control_time(mesh: SpatialMesh, coeffs: CoefficientSet, omega: RegionSpec, T0: float) -> float:
    """T* = T₀ + sup over the mesh of dist(x, ω)."""

    length = _metric_length(mesh, coeffs)
    return float(T0 + _distance_from_length(mesh, length, mesh.x, omega).max())


__all__ = [
    "SpatialMesh",
    "CoefficientSet",
    "DiscreteOperator",
    "EigenSystem",
    "assemble_operator",
    "eigensystem",
    "riemannian_distance",
    "control_time",
]
