import numpy as np
import pytest

from resonat import (
    ConstantProfile,
    RadialBumpProfile,
    WaveContext,
    apply_kd,
    build_disk_grid,
    g0,
    green_matrix,
    operator_from_matrix,
    radiate,
    sample_profile,
    singular_values,
    solve_green_direct,
)
from resonat.errors import InvalidArgumentError, ResonanceProximityError
from resonat.grids import RefractiveProfile
from resonat.volume import assemble_kd, g0_column, g0_matrix, radiate_matrix

CTX2 = WaveContext(k=1.0, dim=2)


def small_op(cells=8, k=1.0, peak=None):
    ctx = WaveContext(k=k, dim=2)
    grid = build_disk_grid(1.0, cells, ctx)
    spec = ConstantProfile(1.0) if peak is None else RadialBumpProfile((0.0, 0.0), 0.5, peak)
    profile = sample_profile(grid, spec)
    return ctx, grid, assemble_kd(grid, profile, ctx)


class TestAssembly:
    def test_offdiagonal_formula(self):
        ctx, grid, op = small_op(cells=4)
        for i, j in [(0, 1), (2, 5), (7, 3)]:
            expect = -g0(grid.points[i], grid.points[j], ctx) * grid.weights[j]
            assert op.matrix[i, j] == pytest.approx(expect, rel=1e-14)

    def test_linearity_in_n(self):
        ctx, grid, _ = small_op(cells=6)
        p1 = sample_profile(grid, ConstantProfile(1.0))
        p2 = RefractiveProfile(values=2.0 * p1.values, profile_kind="doubled")
        M1 = assemble_kd(grid, p1, ctx).matrix
        M2 = assemble_kd(grid, p2, ctx).matrix
        assert np.allclose(M2, 2.0 * M1, rtol=1e-14)

    def test_kernel_symmetry(self):
        ctx, grid, op = small_op(cells=8, peak=2.0)
        sym = op.matrix / (op.n * op.weights)[None, :]
        assert np.linalg.norm(sym - sym.T) <= 1e-12 * np.linalg.norm(sym)

    def test_size_mismatch(self):
        ctx, grid, _ = small_op(cells=4)
        bad = RefractiveProfile(values=np.ones(3), profile_kind="bad")
        with pytest.raises(InvalidArgumentError):
            assemble_kd(grid, bad, ctx)

    def test_row_sums_bounded_by_kernel_integral(self, rng):
        # sum_j |M[i,j]| <= max(n) * int_D |g0(x_i, y)| dy (Monte-Carlo oracle)
        ctx, grid, op = small_op(cells=10)
        samples = rng.uniform(-1.0, 1.0, size=(200000, 2))
        samples = samples[np.linalg.norm(samples, axis=1) < 1.0]
        area_per = np.pi / samples.shape[0]
        i = grid.nearest_index([0.0, 0.0])
        r = np.linalg.norm(samples - grid.points[i], axis=1)
        from resonat.kernels import g0_from_distance
        integral = np.sum(np.abs(g0_from_distance(r, ctx))) * area_per
        row = np.sum(np.abs(op.matrix[i, :]))
        assert row <= 1.1 * integral


class TestApply:
    def test_zero(self):
        _, _, op = small_op()
        assert np.all(apply_kd(op, np.zeros(op.matrix.shape[0])) == 0)

    def test_unit_vector_column(self):
        _, _, op = small_op()
        e3 = np.zeros(op.matrix.shape[0])
        e3[3] = 1.0
        assert np.allclose(apply_kd(op, e3), op.matrix[:, 3])

    def test_double_application(self, rng):
        _, _, op = small_op()
        f = rng.normal(size=op.matrix.shape[0]) + 1j * rng.normal(size=op.matrix.shape[0])
        twice = apply_kd(op, apply_kd(op, f))
        assert np.linalg.norm(twice - (op.matrix @ op.matrix) @ f) <= 1e-12 * np.linalg.norm(twice)

    def test_length_mismatch(self):
        _, _, op = small_op()
        with pytest.raises(InvalidArgumentError):
            apply_kd(op, np.zeros(3))

    def test_nystrom_refinement_consistency(self):
        # midpoint lattices nest under 3x refinement, so (K f) can be compared
        # at the same physical point; the difference shrinks with h
        ctx = WaveContext(k=1.0, dim=2)
        x_eval = None
        vals = []
        for cells in (6, 18, 54):
            grid = build_disk_grid(1.0, cells, ctx)
            op = assemble_kd(grid, sample_profile(grid, ConstantProfile(1.0)), ctx)
            f = np.exp(-np.linalg.norm(grid.points, axis=1) ** 2)
            if x_eval is None:
                x_eval = grid.points[grid.nearest_index([0.21, -0.13])]
            i = grid.nearest_index(x_eval)
            assert np.allclose(grid.points[i], x_eval, atol=1e-12)
            vals.append(apply_kd(op, f)[i])
        assert abs(vals[1] - vals[2]) < abs(vals[0] - vals[1])
        assert abs(vals[1] - vals[2]) < 0.05 * abs(vals[2])


class TestDirectSolve:
    def test_tau_zero_returns_g0(self):
        _, _, op = small_op()
        assert np.allclose(solve_green_direct(op, 0.0, 5), g0_column(op, 5))

    def test_scalar_toy_system(self):
        mu, tau = 0.3, 2.0
        op = operator_from_matrix(np.array([[mu]], dtype=complex))
        g0c = g0_column(op, 0)
        got = solve_green_direct(op, tau, 0)
        expect = g0c * (1.0 + tau * mu / (1.0 - tau * mu))
        assert np.allclose(got, expect, rtol=1e-12)

    def test_resonance_proximity(self):
        op = operator_from_matrix(np.diag([0.5, 0.25]).astype(complex))
        with pytest.raises(ResonanceProximityError):
            solve_green_direct(op, 2.0, 0)  # 1/tau = 0.5 = lambda_1

    def test_residual_contract(self):
        _, _, op = small_op(cells=10)
        tau = 3.0
        col = solve_green_direct(op, tau, 7)
        g0c = g0_column(op, 7)
        v = col - g0c
        N = op.matrix.shape[0]
        rhs = tau * op.matrix @ g0c
        resid = np.linalg.norm((np.eye(N) - tau * op.matrix) @ v - rhs)
        assert resid <= 1e-10 * np.linalg.norm(rhs)

    def test_resolvent_identity(self):
        # the two forms of the solution agree after discretization:
        # G = G0 - (1/tau - M)^{-1} M^2 [delta_j / (n_j w_j)]
        _, _, op = small_op(cells=10)
        tau, j = 3.0, 11
        col = solve_green_direct(op, tau, j)
        N = op.matrix.shape[0]
        delta = np.zeros(N)
        delta[j] = 1.0 / (op.n[j] * op.weights[j])
        M = op.matrix
        alt = g0_column(op, j) - np.linalg.solve(np.eye(N) / tau - M, M @ (M @ delta))
        assert np.linalg.norm(col - alt) <= 1e-9 * np.linalg.norm(col)


class TestGreenMatrix:
    def test_tau_zero(self):
        _, _, op = small_op()
        assert np.allclose(green_matrix(op, 0.0), g0_matrix(op))

    def test_reciprocity(self):
        _, _, op = small_op(cells=10)
        G = green_matrix(op, 3.0)
        assert np.linalg.norm(G - G.T) <= 1e-8 * np.linalg.norm(G)

    def test_born_expansion_order(self):
        _, _, op = small_op(cells=10)
        G0 = g0_matrix(op)

        def born_err(tau):
            return np.linalg.norm(green_matrix(op, tau) - (G0 + tau * op.matrix @ G0))

        e1, e2 = born_err(1e-2), born_err(5e-3)
        assert e1 / e2 == pytest.approx(4.0, rel=0.1)


class TestRadiate:
    def test_tau_zero_free_field(self):
        ctx, grid, op = small_op()
        x0 = grid.points[4]
        col = g0_column(op, 4)
        x_ext = np.array([3.0, 1.0])
        assert radiate(op, col, x_ext, 0.0, x0) == pytest.approx(g0(x_ext, x0, ctx), rel=1e-12)

    def test_interior_point_rejected(self):
        _, grid, op = small_op()
        with pytest.raises(InvalidArgumentError):
            radiate(op, g0_column(op, 0), [0.1, 0.1], 1.0, grid.points[0])

    def test_reciprocity_of_radiated_field(self):
        # G(x_ext, x_a) evaluated by radiation from two interior sources is
        # consistent with kernel symmetry on the grid: swap-role comparison
        ctx, grid, op = small_op(cells=10)
        tau = 3.0
        G = green_matrix(op, tau)
        a, b = 5, 40
        x_ext = np.array([2.5, -1.0])
        va = radiate(op, G[:, a], x_ext, tau, grid.points[a])
        # reciprocity proxy: radiate the b-column and compare the symmetric pair
        vb = radiate(op, G[:, b], x_ext, tau, grid.points[b])
        K = radiate_matrix(op, x_ext[None, :], tau, G)
        assert va == pytest.approx(complex(K[0, a]), rel=1e-6)
        assert vb == pytest.approx(complex(K[0, b]), rel=1e-6)

    def test_refined_grid_oracle(self):
        # radiated exterior value converges as the interior grid is refined
        ctx = WaveContext(k=1.0, dim=2)
        x_ext = np.array([2.0, 0.5])
        tau = 3.0
        vals = []
        for cells in (8, 16, 32):
            grid = build_disk_grid(1.0, cells, ctx)
            op = assemble_kd(grid, sample_profile(grid, ConstantProfile(1.0)), ctx)
            j = grid.nearest_index([0.15, 0.05])
            col = solve_green_direct(op, tau, j)
            vals.append(radiate(op, col, x_ext, tau, grid.points[j]))
        assert abs(vals[1] - vals[2]) < abs(vals[0] - vals[1])


class TestSingularValues:
    def test_zero_matrix(self):
        op = operator_from_matrix(np.zeros((4, 4), dtype=complex))
        assert np.all(singular_values(op) == 0)

    def test_nonincreasing(self):
        _, _, op = small_op(cells=10)
        s = singular_values(op)
        assert np.all(np.diff(s) <= 0)

    def test_frobenius_identity(self):
        _, _, op = small_op(cells=10)
        s = singular_values(op)
        assert np.sum(s**2) == pytest.approx(np.linalg.norm(op.matrix, "fro") ** 2, rel=1e-10)

    def test_hilbert_schmidt_proxy_stabilizes(self):
        # sum sigma^2 approximates the squared HS norm of the kernel and
        # stabilizes under grid refinement (uniform weights make the two
        # quadrature weightings coincide)
        sums = []
        for cells in (12, 24):
            _, _, op = small_op(cells=cells)
            sums.append(float(np.sum(singular_values(op) ** 2)))
        assert abs(sums[0] - sums[1]) <= 0.05 * sums[1]

    def test_smallest_singular_value_positive(self, disk16):
        _, _, op = disk16
        assert singular_values(op)[-1] > 0
