import numpy as np
import pytest

from resonat import (
    ConstantProfile,
    WaveContext,
    build_disk_grid,
    sample_profile,
)
from resonat.spectral import eigendecompose
from resonat.volume import assemble_kd


@pytest.fixture(scope="session")
def disk16():
    """Unit disk, n = 1, k = 1, 16 cells per diameter (N = 208)."""
    ctx = WaveContext(k=1.0, dim=2)
    grid = build_disk_grid(1.0, 16, ctx)
    profile = sample_profile(grid, ConstantProfile(1.0))
    op = assemble_kd(grid, profile, ctx)
    return ctx, grid, op


@pytest.fixture(scope="session")
def disk16_sys(disk16):
    _, _, op = disk16
    return eigendecompose(op)


@pytest.fixture(scope="session")
def disk20_k6():
    """Unit disk, n = 1, k = 6, 20 cells per diameter (N = 316): the
    sub-wavelength-resonance setting used by the imaging experiments."""
    ctx = WaveContext(k=6.0, dim=2)
    grid = build_disk_grid(1.0, 20, ctx)
    profile = sample_profile(grid, ConstantProfile(1.0))
    op = assemble_kd(grid, profile, ctx)
    return ctx, grid, op


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(42)
