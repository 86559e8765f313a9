"""Forward data synthesis on the far-field surface and the three
inverse-source reconstruction methods (time reversal, minimum-L2, minimum-L1),
plus the Helmholtz-Kirchhoff validator and resolution metrics.

Sign convention for the time-reversal functional: the backpropagation integral
is negated so that the homogeneous 3D image of a unit point source reproduces
the -sin(kr)/(4 pi k r) point spread function (see kernels.sinc_psf).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DiscrepancyInfeasibleError, InvalidArgumentError
from .grids import DomainGrid, MeasurementSurface, WaveContext
from .kernels import g0_from_distance, im_g0
from .volume import DiscreteOperator, green_matrix, radiate_matrix


@dataclass(frozen=True)
class GridDensity:
    values: np.ndarray


@dataclass(frozen=True)
class PointSources:
    sources: Tuple[Tuple[tuple, complex], ...]   # ((location, amplitude), ...)


@dataclass
class ForwardMap:
    """Discretized map from grid densities to far-field samples.

    ``kernel`` holds G(z_m, x_j); ``matrix`` folds in the domain quadrature
    weights so that u = matrix @ f approximates the volume integral.
    """

    matrix: np.ndarray
    kernel: np.ndarray
    grid: DomainGrid
    surface: MeasurementSurface
    ctx: WaveContext
    medium_tag: str
    tau: float = 0.0
    interior_green: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass(frozen=True)
class MeasurementData:
    values: np.ndarray
    noise_level: float
    seed: int
    noise_norm: float = 0.0


@dataclass
class ImagingResult:
    values: np.ndarray
    method: str
    metadata: dict = field(default_factory=dict)


def build_forward_map(grid: DomainGrid, surface: MeasurementSurface,
                      ctx: WaveContext, tau: float = 0.0,
                      op: Optional[DiscreteOperator] = None) -> ForwardMap:
    """Assemble the far-field map; tau != 0 radiates through the contrast medium."""
    if float(np.min(np.linalg.norm(surface.points, axis=1))) <= grid.radius:
        raise InvalidArgumentError("measurement surface intersects the source domain")
    if tau == 0.0:
        r = np.linalg.norm(surface.points[:, None, :] - grid.points[None, :, :], axis=2)
        K = g0_from_distance(r, ctx)
        interior = None
        tag = "homogeneous"
    else:
        if op is None:
            raise InvalidArgumentError("high-contrast forward map needs the volume operator")
        interior = green_matrix(op, tau)
        K = radiate_matrix(op, surface.points, tau, interior)
        tag = f"high_contrast(tau={tau})"
    return ForwardMap(matrix=K * grid.weights[None, :], kernel=K, grid=grid,
                      surface=surface, ctx=ctx, medium_tag=tag, tau=tau,
                      interior_green=interior)


def synthesize_data(fmap: ForwardMap, source, noise_level: float = 0.0,
                    seed: int = 0) -> MeasurementData:
    """Far-field data u for a grid density or a set of point sources, with
    additive complex Gaussian noise scaled to noise_level * ||u|| / sqrt(m)."""
    m = fmap.surface.n_points
    if isinstance(source, GridDensity):
        f = np.asarray(source.values, dtype=complex)
        if f.shape[0] != fmap.grid.n_points:
            raise InvalidArgumentError("density length does not match the grid")
        u = fmap.matrix @ f
    elif isinstance(source, PointSources):
        u = np.zeros(m, dtype=complex)
        for loc, amp in source.sources:
            loc = np.asarray(loc, dtype=float)
            if not fmap.grid.contains(loc):
                raise InvalidArgumentError(f"point source {loc} lies outside the domain")
            if fmap.tau == 0.0:
                r = np.linalg.norm(fmap.surface.points - loc[None, :], axis=1)
                u += complex(amp) * g0_from_distance(r, fmap.ctx)
            else:
                # contrast kernel is only available on the grid: snap the source
                j = fmap.grid.nearest_index(loc)
                u += complex(amp) * fmap.kernel[:, j]
    else:
        raise InvalidArgumentError(f"unknown source config {source!r}")
    noise_norm = 0.0
    if noise_level > 0:
        rng = np.random.default_rng(seed)
        ref = float(np.linalg.norm(u))
        scale = noise_level * (ref if ref > 0 else 1.0) / np.sqrt(m)
        noise = scale * (rng.standard_normal(m) + 1j * rng.standard_normal(m)) / np.sqrt(2.0)
        u = u + noise
        noise_norm = float(np.linalg.norm(noise))
    return MeasurementData(values=u, noise_level=float(noise_level), seed=int(seed),
                           noise_norm=noise_norm)


def time_reversal(data: MeasurementData, fmap: ForwardMap,
                  imaging_points: Optional[np.ndarray] = None) -> ImagingResult:
    """Backpropagate the data: I(x) = -sum_m conj(G(x, z_m)) u_m w_m."""
    u = data.values
    w = fmap.surface.weights
    if imaging_points is None:
        K = fmap.kernel                       # G(z_m, x_j) = G(x_j, z_m) by reciprocity
    else:
        pts = np.asarray(imaging_points, dtype=float)
        if fmap.tau != 0.0:
            raise InvalidArgumentError(
                "off-grid imaging points are only supported in the homogeneous medium")
        r = np.linalg.norm(fmap.surface.points[:, None, :] - pts[None, :, :], axis=2)
        K = g0_from_distance(r, fmap.ctx)
    values = -(K.conj().T @ (u * w))
    return ImagingResult(values=values, method="time_reversal",
                         metadata={"m": fmap.surface.n_points})


def helmholtz_kirchhoff_residual(Gx: np.ndarray, Gy: np.ndarray,
                                 weights: np.ndarray, im_g_xy: float,
                                 k: float) -> float:
    """|k sum_m conj(G(x,z_m)) G(y,z_m) w_m + Im G(x,y)|."""
    s = k * np.sum(np.conj(Gx) * Gy * weights)
    return float(np.abs(s + im_g_xy))


def homogeneous_hk_residual(surface: MeasurementSurface, x, y, ctx: WaveContext) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rx = np.linalg.norm(surface.points - x[None, :], axis=1)
    ry = np.linalg.norm(surface.points - y[None, :], axis=1)
    Gx = g0_from_distance(rx, ctx)
    Gy = g0_from_distance(ry, ctx)
    return helmholtz_kirchhoff_residual(Gx, Gy, surface.weights, im_g0(x, y, ctx), ctx.k)


def contrast_hk_residual(fmap: ForwardMap, i: int, j: int) -> float:
    """High-contrast variant between two grid nodes, kernel via radiation."""
    if fmap.interior_green is None:
        raise InvalidArgumentError("forward map carries no interior Green matrix")
    Gx = fmap.kernel[:, i]
    Gy = fmap.kernel[:, j]
    im_g = float(np.imag(fmap.interior_green[i, j]))
    return helmholtz_kirchhoff_residual(Gx, Gy, fmap.surface.weights, im_g, fmap.ctx.k)


def l2_minimum_norm(fmap: ForwardMap, data: MeasurementData, mode="exact",
                    alpha: Optional[float] = None,
                    delta: Optional[float] = None) -> ImagingResult:
    """Pseudoinverse / Tikhonov-filtered / Morozov-selected minimum-norm solution."""
    A = fmap.matrix
    u = data.values
    Us, s, Vh = np.linalg.svd(A, full_matrices=False)
    if s[0] == 0:
        raise InvalidArgumentError("forward map is identically zero")
    coefs = Us.conj().T @ u
    out_of_range = float(np.linalg.norm(u) ** 2 - np.linalg.norm(coefs) ** 2)
    out_of_range = max(out_of_range, 0.0)

    def tikhonov_solution(a):
        return Vh.conj().T @ (s / (s**2 + a) * coefs)

    def discrepancy_sq(a):
        return float(np.sum((a / (s**2 + a)) ** 2 * np.abs(coefs) ** 2) + out_of_range)

    meta = {"singular_value_max": float(s[0])}
    if mode == "exact":
        keep = s > 1e-12 * s[0]
        g = Vh.conj().T @ np.where(keep, coefs / np.where(keep, s, 1.0), 0.0)
        meta["truncated"] = int(np.sum(~keep))
    elif mode == "tikhonov":
        if alpha is None or alpha < 0:
            raise InvalidArgumentError("tikhonov mode needs alpha >= 0")
        g = tikhonov_solution(alpha)
        meta["alpha"] = float(alpha)
    elif mode == "morozov":
        if delta is None or delta <= 0:
            raise InvalidArgumentError("morozov mode needs delta > 0")
        unorm2 = float(np.linalg.norm(u) ** 2)
        if delta >= unorm2:
            raise DiscrepancyInfeasibleError(
                f"delta={delta} >= ||u||^2={unorm2}: the zero solution already over-fits")
        lo, hi = 1e-14 * s[0] ** 2, 1e6 * s[0] ** 2
        if discrepancy_sq(lo) > 1.1 * delta:
            raise DiscrepancyInfeasibleError(
                f"delta={delta} below the minimum achievable discrepancy {discrepancy_sq(lo)}")
        if discrepancy_sq(hi) < 0.9 * delta:
            raise DiscrepancyInfeasibleError(
                f"delta={delta} above the maximum bracketed discrepancy {discrepancy_sq(hi)}")
        a = None
        for _ in range(200):
            mid = np.sqrt(lo * hi)
            d = discrepancy_sq(mid)
            if 0.9 * delta <= d <= 1.1 * delta:
                a = mid
                break
            if d > delta:
                hi = mid
            else:
                lo = mid
        if a is None:
            raise DiscrepancyInfeasibleError("Morozov bisection failed to settle")
        g = tikhonov_solution(a)
        meta["alpha"] = float(a)
        meta["delta"] = float(delta)
        meta["discrepancy_sq"] = discrepancy_sq(a)
    else:
        raise InvalidArgumentError(f"unknown l2 mode {mode!r}")
    meta["residual"] = float(np.linalg.norm(A @ g - u))
    return ImagingResult(values=g, method=f"l2_min({mode})", metadata=meta)


def _soft_threshold(x: np.ndarray, t: float) -> np.ndarray:
    mag = np.abs(x)
    scale = np.maximum(mag - t, 0.0) / np.where(mag > 0, mag, 1.0)
    return x * scale


def l1_reconstruct(fmap: ForwardMap, data: MeasurementData, mu: float,
                   mode: str = "penalized", max_iters: int = 2000,
                   tol: float = 1e-10) -> ImagingResult:
    """Accelerated proximal-gradient (FISTA) minimization of
    (1/2)||A g - u||^2 + mu ||g||_1, with A either the raw forward map
    ("penalized") or its normal-equation form A^H A ("normal_equation")."""
    if mu <= 0:
        raise InvalidArgumentError("mu must be positive")
    if mode == "penalized":
        A = fmap.matrix
        u = data.values
    elif mode == "normal_equation":
        A = fmap.matrix.conj().T @ fmap.matrix
        u = fmap.matrix.conj().T @ data.values
    else:
        raise InvalidArgumentError(f"unknown l1 mode {mode!r}")
    L = float(np.linalg.norm(A, 2) ** 2)
    if L == 0:
        raise InvalidArgumentError("forward map is identically zero")
    N = A.shape[1]
    g = np.zeros(N, dtype=complex)
    y = g.copy()
    t = 1.0
    obj_prev = np.inf
    converged = False
    iters = 0
    for iters in range(1, max_iters + 1):
        grad = A.conj().T @ (A @ y - u)
        g_new = _soft_threshold(y - grad / L, mu / L)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t**2))
        y = g_new + (t - 1.0) / t_new * (g_new - g)
        g, t = g_new, t_new
        resid = A @ g - u
        obj = 0.5 * float(np.linalg.norm(resid) ** 2) + mu * float(np.sum(np.abs(g)))
        if np.isfinite(obj_prev) and abs(obj_prev - obj) <= tol * max(obj, 1e-300):
            converged = True
            break
        obj_prev = obj
    final_resid = float(np.linalg.norm(fmap.matrix @ g - data.values))
    support = np.nonzero(np.abs(g) > 0)[0]
    return ImagingResult(values=g, method=f"l1_min({mode}, mu={mu})",
                         metadata={"mu": float(mu), "iterations": iters,
                                   "converged": bool(converged),
                                   "residual": final_resid,
                                   "support": [int(i) for i in support]})


@dataclass(frozen=True)
class ResolutionMetrics:
    localization_errors: Tuple[float, ...]
    support_f1: float
    separation: float
    peaks: Tuple[int, ...]
    empty: bool = False


def find_peaks(values: np.ndarray, grid: DomainGrid, threshold: float = 0.1,
               radius_cells: float = 1.5) -> List[int]:
    """Local maxima of |values| above threshold * max over a cell neighborhood."""
    mag = np.abs(values)
    top = float(mag.max()) if mag.size else 0.0
    if top == 0.0:
        return []
    rad = radius_cells * grid.cell_size
    peaks = []
    candidates = np.nonzero(mag >= threshold * top)[0]
    for i in candidates:
        d = np.linalg.norm(grid.points - grid.points[i], axis=1)
        nbrs = np.nonzero((d <= rad) & (d > 0))[0]
        if np.all(mag[i] >= mag[nbrs]):
            peaks.append(int(i))
    return peaks


def resolution_metrics(result: ImagingResult, truth: PointSources,
                       grid: DomainGrid) -> ResolutionMetrics:
    """Per-source nearest-peak distances and a one-cell-matching F1 score."""
    locs = [np.asarray(loc, dtype=float) for loc, _ in truth.sources]
    if len(locs) >= 2:
        sep = min(float(np.linalg.norm(a - b))
                  for i, a in enumerate(locs) for b in locs[i + 1:])
    else:
        sep = float("inf")
    peaks = find_peaks(result.values, grid)
    if not peaks:
        return ResolutionMetrics(localization_errors=(), support_f1=0.0,
                                 separation=sep, peaks=(), empty=True)
    peak_pts = grid.points[peaks]
    errors = []
    matched_truth = 0
    used_peaks = set()
    cell = grid.cell_size * (1.0 + 1e-9)
    for loc in locs:
        d = np.linalg.norm(peak_pts - loc[None, :], axis=1)
        j = int(np.argmin(d))
        errors.append(float(d[j]))
        if d[j] <= cell:
            matched_truth += 1
            used_peaks.add(j)
    precision = len(used_peaks) / len(peaks)
    recall = matched_truth / len(locs)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return ResolutionMetrics(localization_errors=tuple(errors), support_f1=float(f1),
                             separation=sep, peaks=tuple(peaks))
