"""Dense Nystrom discretization of the volume operator and the direct
Lippmann-Schwinger solver for the high-contrast Green function.

The operator acts as f -> -int_D G0(x, y) n(y) f(y) dy. Discretely
M[i, j] = -g0(x_i, x_j) n_j w_j off the diagonal; the singular diagonal cell is
replaced by the analytic integral of the kernel over the disk/ball of equal
measure centered at the point ("equal_measure" rule).

The discrete delta column at grid node j is e_j / w_j, so
M @ delta_j = -n_j * g0col_j, which pins the free-kernel column used by the
direct solver and by the expansion module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import hankel1

from .errors import InvalidArgumentError, ResonanceProximityError
from .grids import DomainGrid, RefractiveProfile, WaveContext
from .kernels import g0_from_distance


@dataclass
class DiscreteOperator:
    """Dense matrix form of the volume operator on a grid."""

    matrix: np.ndarray
    grid: DomainGrid
    profile: RefractiveProfile
    ctx: WaveContext
    diagonal_rule: str = "equal_measure"
    _eigenvalues: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def n(self) -> np.ndarray:
        return self.profile.values

    @property
    def weights(self) -> np.ndarray:
        return self.grid.weights

    def eigenvalues(self) -> np.ndarray:
        if self._eigenvalues is None:
            self._eigenvalues = np.linalg.eigvals(self.matrix)
        return self._eigenvalues


def _diag_kernel_integral(w: float, ctx: WaveContext) -> complex:
    """Integral of g0(x, .) over the disk/ball of measure w centered at x."""
    k = ctx.k
    if ctx.dim == 2:
        rho = np.sqrt(w / np.pi)
        # int_{|y|<rho} -(i/4) H0(kr) dy = -(i pi rho / 2k) H1(k rho) + 1/k^2
        return complex(-0.5j * np.pi * rho / k * hankel1(1, k * rho) + 1.0 / k**2)
    rho = (3.0 * w / (4.0 * np.pi)) ** (1.0 / 3.0)
    # int_{|y|<rho} -e^{ikr}/(4 pi r) dy = (e^{ik rho}(ik rho - 1) + 1)/k^2
    return complex((np.exp(1j * k * rho) * (1j * k * rho - 1.0) + 1.0) / k**2)


def assemble_kd(grid: DomainGrid, profile: RefractiveProfile, ctx: WaveContext) -> DiscreteOperator:
    """Assemble the dense N x N matrix of the volume operator."""
    if profile.values.shape[0] != grid.n_points:
        raise InvalidArgumentError("grid and profile sizes do not match")
    pts = grid.points
    diff = pts[:, None, :] - pts[None, :, :]
    r = np.linalg.norm(diff, axis=2)
    np.fill_diagonal(r, 1.0)  # placeholder, overwritten below
    kernel = g0_from_distance(r, ctx)
    M = -kernel * (profile.values * grid.weights)[None, :]
    diag = np.array([_diag_kernel_integral(w, ctx) for w in grid.weights])
    np.fill_diagonal(M, -diag * profile.values)
    return DiscreteOperator(matrix=M, grid=grid, profile=profile, ctx=ctx)


def operator_from_matrix(matrix: np.ndarray, weights=None, n_values=None,
                         ctx: Optional[WaveContext] = None) -> DiscreteOperator:
    """Wrap a raw dense matrix as an operator (synthetic/test systems).

    Points are placed on a unit-spaced line; weights default to one.
    """
    matrix = np.asarray(matrix, dtype=complex)
    N = matrix.shape[0]
    if matrix.shape != (N, N):
        raise InvalidArgumentError("matrix must be square")
    w = np.ones(N) if weights is None else np.asarray(weights, dtype=float)
    nv = np.ones(N) if n_values is None else np.asarray(n_values, dtype=float)
    ctx = ctx or WaveContext(k=1.0, dim=2)
    pts = np.column_stack([np.arange(N, dtype=float), np.zeros(N)])
    grid = DomainGrid(points=pts, weights=w, cell_size=1.0,
                      shape_descriptor="synthetic", radius=float(N),
                      lattice_index=np.column_stack([np.arange(N), np.zeros(N, dtype=int)]),
                      lattice_shape=(N, 1))
    profile = RefractiveProfile(values=nv, profile_kind="synthetic")
    return DiscreteOperator(matrix=matrix, grid=grid, profile=profile, ctx=ctx,
                            diagonal_rule="synthetic")


def apply_kd(op: DiscreteOperator, f: np.ndarray) -> np.ndarray:
    f = np.asarray(f)
    if f.shape[0] != op.matrix.shape[0]:
        raise InvalidArgumentError("vector length does not match operator size")
    return op.matrix @ f


def g0_column(op: DiscreteOperator, source_index: int) -> np.ndarray:
    """Samples of g0(., x_j) on the grid, diagonal entry cell-averaged.

    Defined through the operator column so that the singular-cell rule is
    applied consistently: g0col = -M[:, j] / (n_j w_j).
    """
    j = int(source_index)
    return -op.matrix[:, j] / (op.n[j] * op.weights[j])


def g0_matrix(op: DiscreteOperator) -> np.ndarray:
    """All g0 columns at once: G0[i, j] = g0(x_i, x_j) with averaged diagonal."""
    return -op.matrix / (op.n * op.weights)[None, :]


def check_resonance_proximity(op: DiscreteOperator, z: complex, tol: Optional[float] = None):
    """Raise if z lies within tolerance of the spectrum of the matrix."""
    lam = op.eigenvalues()
    tol = tol if tol is not None else 1e-8
    d = np.abs(z - lam)
    bad = d < tol * (1.0 + np.abs(lam))
    if np.any(bad):
        idx = int(np.argmin(d))
        raise ResonanceProximityError(z, lam[idx])


def solve_green_direct(op: DiscreteOperator, tau: float, source_index: int) -> np.ndarray:
    """Column G(., x_j) of the high-contrast Green function by dense solve.

    Solves (I - tau M) v = tau M g0col and returns g0col + v.
    """
    g0col = g0_column(op, source_index)
    if tau == 0:
        return g0col
    check_resonance_proximity(op, 1.0 / tau)
    N = op.matrix.shape[0]
    rhs = tau * (op.matrix @ g0col)
    v = np.linalg.solve(np.eye(N) - tau * op.matrix, rhs)
    return g0col + v


def green_matrix(op: DiscreteOperator, tau: float) -> np.ndarray:
    """All columns of the high-contrast Green function, G[i, j] = G(x_i, x_j)."""
    G0 = g0_matrix(op)
    if tau == 0:
        return G0
    check_resonance_proximity(op, 1.0 / tau)
    N = op.matrix.shape[0]
    rhs = tau * (op.matrix @ G0)
    V = np.linalg.solve(np.eye(N) - tau * op.matrix, rhs)
    return G0 + V


def radiate(op: DiscreteOperator, interior_column: np.ndarray, x_ext, tau: float,
            source_point) -> complex:
    """Evaluate the high-contrast Green function at an exterior point.

    G(x, x0) = g0(x, x0) - tau * sum_j g0(x, x_j) n_j w_j G(x_j, x0), where the
    interior column holds G(x_j, x0) on the grid.
    """
    x_ext = np.asarray(x_ext, dtype=float)
    if op.grid.contains(x_ext):
        raise InvalidArgumentError("exterior evaluation point lies inside the domain")
    r0 = float(np.linalg.norm(x_ext - np.asarray(source_point, dtype=float)))
    free = complex(g0_from_distance(r0, op.ctx))
    r = np.linalg.norm(op.grid.points - x_ext, axis=1)
    kcol = g0_from_distance(r, op.ctx)
    scat = -tau * np.sum(kcol * op.n * op.weights * interior_column)
    return free + complex(scat)


def radiate_matrix(op: DiscreteOperator, exterior_points: np.ndarray, tau: float,
                   interior_green: np.ndarray) -> np.ndarray:
    """Vectorized radiation: G(z_m, x_j) for exterior rows z_m and all grid columns."""
    exterior_points = np.asarray(exterior_points, dtype=float)
    r = np.linalg.norm(exterior_points[:, None, :] - op.grid.points[None, :, :], axis=2)
    K = g0_from_distance(r, op.ctx)           # (m, N) free kernel
    if tau == 0:
        return K
    return K - tau * (K * (op.n * op.weights)[None, :]) @ interior_green


def singular_values(op: DiscreteOperator) -> np.ndarray:
    return np.linalg.svd(op.matrix, compute_uv=False)
