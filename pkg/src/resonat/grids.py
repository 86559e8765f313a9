"""Quadrature grids for the source domain, refractive profiles, and far-field surfaces.

The domain D is discretized by uniform cell-center (midpoint) quadrature: a
Cartesian lattice covering the bounding box, keeping the cells whose center lies
strictly inside the shape. Weights are the full cell measure (no partial-cell
clipping), which gives an O(h) boundary error in the total measure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class WaveContext:
    """Wavenumber and spatial dimension of the experiment."""

    k: float
    dim: int

    def __post_init__(self):
        if not (self.k > 0):
            raise InvalidArgumentError(f"wavenumber k must be positive, got {self.k}")
        if self.dim not in (2, 3):
            raise InvalidArgumentError(f"dim must be 2 or 3, got {self.dim}")

    @property
    def wavelength(self) -> float:
        return 2.0 * np.pi / self.k


@dataclass(frozen=True)
class DomainGrid:
    """Midpoint-rule quadrature of a disk (dim=2) or ball (dim=3).

    ``lattice_index`` holds the integer Cartesian indices of each kept cell and
    ``lattice_shape`` the full lattice extent, so point values can be embedded
    back into a dense array (used for discrete Fourier diagnostics).
    """

    points: np.ndarray          # (N, dim)
    weights: np.ndarray         # (N,)
    cell_size: float
    shape_descriptor: str       # e.g. "disk(radius=1.0)"
    radius: float
    lattice_index: np.ndarray = field(repr=False)   # (N, dim) ints
    lattice_shape: tuple = ()

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def contains(self, x) -> bool:
        return float(np.linalg.norm(np.asarray(x, dtype=float))) < self.radius

    def nearest_index(self, x) -> int:
        d = np.linalg.norm(self.points - np.asarray(x, dtype=float), axis=1)
        return int(np.argmin(d))


@dataclass(frozen=True)
class RefractiveProfile:
    """Pointwise samples of the refractive function n on a grid."""

    values: np.ndarray
    profile_kind: str

    def __post_init__(self):
        if np.any(self.values <= 0):
            raise InvalidArgumentError("refractive values must be positive")


@dataclass(frozen=True)
class ConstantProfile:
    value: float = 1.0


@dataclass(frozen=True)
class RadialBumpProfile:
    """n(x) = 1 + (peak - 1) * exp(-(|x - center| / width)^2)."""

    center: tuple
    width: float
    peak: float


@dataclass(frozen=True)
class MeasurementSurface:
    """Quadrature points on the far-field circle/sphere of radius R."""

    points: np.ndarray    # (m, dim)
    weights: np.ndarray   # (m,)
    R: float
    construction: str

    @property
    def n_points(self) -> int:
        return self.points.shape[0]


def _cell_centers(radius: float, cells: int) -> np.ndarray:
    h = 2.0 * radius / cells
    return -radius + (np.arange(cells) + 0.5) * h


def build_disk_grid(radius: float, cells_per_diameter: int, ctx: WaveContext) -> DomainGrid:
    """Uniform cell-center quadrature of the disk of given radius (dim=2)."""
    if ctx.dim != 2:
        raise InvalidArgumentError("build_disk_grid requires ctx.dim == 2")
    if not (radius > 0):
        raise InvalidArgumentError(f"radius must be positive, got {radius}")
    if cells_per_diameter < 2:
        raise InvalidArgumentError("cells_per_diameter must be at least 2")
    h = 2.0 * radius / cells_per_diameter
    c = _cell_centers(radius, cells_per_diameter)
    xx, yy = np.meshgrid(c, c, indexing="ij")
    ix, iy = np.meshgrid(np.arange(cells_per_diameter), np.arange(cells_per_diameter), indexing="ij")
    inside = xx**2 + yy**2 < radius**2
    pts = np.column_stack([xx[inside], yy[inside]])
    idx = np.column_stack([ix[inside], iy[inside]])
    w = np.full(pts.shape[0], h * h)
    return DomainGrid(
        points=pts, weights=w, cell_size=h,
        shape_descriptor=f"disk(radius={radius})", radius=radius,
        lattice_index=idx, lattice_shape=(cells_per_diameter, cells_per_diameter),
    )


def build_ball_grid(radius: float, cells_per_diameter: int, ctx: WaveContext) -> DomainGrid:
    """Uniform cell-center quadrature of the ball of given radius (dim=3)."""
    if ctx.dim != 3:
        raise InvalidArgumentError("build_ball_grid requires ctx.dim == 3")
    if not (radius > 0):
        raise InvalidArgumentError(f"radius must be positive, got {radius}")
    if cells_per_diameter < 2:
        raise InvalidArgumentError("cells_per_diameter must be at least 2")
    h = 2.0 * radius / cells_per_diameter
    c = _cell_centers(radius, cells_per_diameter)
    xx, yy, zz = np.meshgrid(c, c, c, indexing="ij")
    ii = np.arange(cells_per_diameter)
    ix, iy, iz = np.meshgrid(ii, ii, ii, indexing="ij")
    inside = xx**2 + yy**2 + zz**2 < radius**2
    pts = np.column_stack([xx[inside], yy[inside], zz[inside]])
    idx = np.column_stack([ix[inside], iy[inside], iz[inside]])
    w = np.full(pts.shape[0], h**3)
    return DomainGrid(
        points=pts, weights=w, cell_size=h,
        shape_descriptor=f"ball(radius={radius})", radius=radius,
        lattice_index=idx,
        lattice_shape=(cells_per_diameter,) * 3,
    )


def sample_profile(grid: DomainGrid, spec) -> RefractiveProfile:
    """Sample a refractive profile specification on the grid points."""
    if isinstance(spec, ConstantProfile):
        if not (spec.value > 0):
            raise InvalidArgumentError("constant profile value must be positive")
        return RefractiveProfile(
            values=np.full(grid.n_points, float(spec.value)),
            profile_kind=f"constant({spec.value})",
        )
    if isinstance(spec, RadialBumpProfile):
        if not (spec.peak > 0 and spec.width > 0):
            raise InvalidArgumentError("bump peak and width must be positive")
        center = np.asarray(spec.center, dtype=float)
        r = np.linalg.norm(grid.points - center, axis=1)
        vals = 1.0 + (spec.peak - 1.0) * np.exp(-((r / spec.width) ** 2))
        return RefractiveProfile(
            values=vals,
            profile_kind=f"radial_bump(center={tuple(center)}, width={spec.width}, peak={spec.peak})",
        )
    raise InvalidArgumentError(f"unknown profile spec {spec!r}")


def build_measurement_surface(R: float, m: int, ctx: WaveContext) -> MeasurementSurface:
    """Far-field quadrature surface: equispaced circle (2D) or a Gauss-Legendre
    x uniform-azimuth product rule on the sphere (3D, >= m points)."""
    if not (R > 0):
        raise InvalidArgumentError(f"surface radius must be positive, got {R}")
    if m < 4:
        raise InvalidArgumentError(f"need at least 4 surface points, got {m}")
    if ctx.dim == 2:
        theta = 2.0 * np.pi * np.arange(m) / m
        pts = R * np.column_stack([np.cos(theta), np.sin(theta)])
        w = np.full(m, 2.0 * np.pi * R / m)
        return MeasurementSurface(points=pts, weights=w, R=R,
                                  construction=f"equispaced_circle(m={m})")
    # sphere: polar nodes from Gauss-Legendre in cos(theta), uniform azimuth
    n_theta = max(4, int(np.ceil(np.sqrt(m / 2.0))))
    n_phi = 2 * n_theta
    mu, gw = np.polynomial.legendre.leggauss(n_theta)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    st = np.sqrt(1.0 - mu**2)
    x = np.outer(st, np.cos(phi)).ravel()
    y = np.outer(st, np.sin(phi)).ravel()
    z = np.outer(mu, np.ones(n_phi)).ravel()
    pts = R * np.column_stack([x, y, z])
    w = (R**2 * 2.0 * np.pi / n_phi) * np.outer(gw, np.ones(n_phi)).ravel()
    return MeasurementSurface(
        points=pts, weights=w, R=R,
        construction=f"gauss_legendre_product(n_theta={n_theta}, n_phi={n_phi})",
    )
