"""Free-space outgoing Helmholtz kernels and the homogeneous point spread function.

Sign convention: (Delta + k^2) g0 = +delta with the Sommerfeld radiation
condition, i.e. g0 = -exp(ik r)/(4 pi r) in 3D and -(i/4) H0^(1)(k r) in 2D.
All downstream signs in the library follow from this single declaration.
"""

from __future__ import annotations

import numpy as np
from scipy.special import hankel1, j0
from scipy.optimize import brentq

from .errors import InvalidArgumentError, SingularEvaluationError
from .grids import WaveContext


def g0_from_distance(r, ctx: WaveContext):
    """Kernel value as a function of the separation distance r > 0 (vectorized)."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise SingularEvaluationError("free-space kernel evaluated at zero separation")
    if ctx.dim == 3:
        return -np.exp(1j * ctx.k * r) / (4.0 * np.pi * r)
    return -0.25j * hankel1(0, ctx.k * r)


def g0(x, y, ctx: WaveContext) -> complex:
    """Outgoing free-space kernel between two points."""
    r = float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))
    return complex(g0_from_distance(r, ctx))


def im_g0_from_distance(r, ctx: WaveContext):
    """Imaginary part of g0 with the removable singularity filled (vectorized)."""
    r = np.asarray(r, dtype=float)
    kr = ctx.k * r
    if ctx.dim == 3:
        out = np.where(kr == 0, -ctx.k / (4.0 * np.pi),
                       -np.sinc(kr / np.pi) * ctx.k / (4.0 * np.pi))
    else:
        out = -0.25 * j0(kr)
    return out if out.ndim else float(out)


def im_g0(x, y, ctx: WaveContext) -> float:
    r = float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))
    return float(im_g0_from_distance(r, ctx))


def far_field_g0(direction, R: float, y, ctx: WaveContext) -> complex:
    """Far-field approximation -e^{ikR}/(4 pi R) * e^{-ik direction.y} (3D).

    Valid when R >> |y|; the phase uses |x - y| ~ |x| - x_hat . y.
    """
    if ctx.dim != 3:
        raise InvalidArgumentError("far_field_g0 is defined for dim=3")
    y = np.asarray(y, dtype=float)
    if R <= float(np.linalg.norm(y)):
        raise InvalidArgumentError("far-field radius must exceed |y|")
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    k = ctx.k
    return complex(-np.exp(1j * k * R) / (4.0 * np.pi * R) * np.exp(-1j * k * float(d @ y)))


def sinc_psf(r, ctx: WaveContext):
    """Homogeneous 3D time-reversal point spread function -sin(kr)/(4 pi k r)."""
    if ctx.dim != 3:
        raise InvalidArgumentError("sinc_psf is defined for dim=3")
    r = np.asarray(r, dtype=float)
    out = -np.sinc(ctx.k * r / np.pi) / (4.0 * np.pi)
    return out if out.ndim else float(out)


def sinc_psf_fwhm(ctx: WaveContext) -> float:
    """Full width at half maximum of |sinc_psf|, 2 x root of sin(x)/x = 1/2 over k."""
    root = brentq(lambda x: np.sin(x) / x - 0.5, 1.0, np.pi)
    return 2.0 * root / ctx.k
