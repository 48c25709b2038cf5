import numpy as np
import pytest

import cvxpy as cp

from smoothchol import _kernels
from smoothchol.model import PenaltySpec
from smoothchol.penalties import (
    solve_diagonal,
    solve_fused,
    solve_hp,
    solve_sparse_fused,
    solve_subdiagonal,
    solve_trend,
    sparse_threshold,
)


def block_objective(x, C, y, family="none", lam=0.0, lam1=0.0):
    val = float(x @ (C * x) + 2.0 * x @ y)
    if family == "fused":
        val += lam * np.abs(np.diff(x)).sum()
    elif family == "trend":
        val += lam * np.abs(np.diff(x, 2)).sum()
    elif family == "hp":
        val += lam * (np.diff(x, 2) ** 2).sum()
    elif family == "sparse-fused":
        val += lam * np.abs(np.diff(x)).sum() + lam1 * np.abs(x).sum()
    return val


def cvxpy_block(C, y, family, lam, lam1=0.0):
    m = C.shape[0]
    x = cp.Variable(m)
    obj = cp.sum(cp.multiply(C, cp.square(x))) + 2.0 * y @ x
    if family == "fused":
        obj += lam * cp.norm1(cp.diff(x))
    elif family == "trend":
        obj += lam * cp.norm1(cp.diff(x, 2))
    elif family == "hp":
        obj += lam * cp.sum_squares(cp.diff(x, 2))
    elif family == "sparse-fused":
        obj += lam * cp.norm1(cp.diff(x)) + lam1 * cp.norm1(x)
    prob = cp.Problem(cp.Minimize(obj))
    prob.solve(solver=cp.CLARABEL)
    assert prob.status == cp.OPTIMAL
    return np.asarray(x.value)


def random_block(m, rng):
    return rng.uniform(0.5, 2.0, size=m), rng.standard_normal(m)


class TestSolveDiagonal:
    def test_unit_problem(self):
        x = solve_diagonal(np.ones(3), np.zeros(3))
        assert np.allclose(x, 1.0, atol=1e-15)

    def test_first_coordinate_ignores_linear_term(self):
        x = solve_diagonal(np.array([4.0, 1.0]), np.array([9.9, 0.0]))
        assert x[0] == 0.5

    def test_positive_root_by_hand(self):
        # C = 2, y = 1: 2 x^2 + x - 1 = 0 has positive root x = 1/2
        x = solve_diagonal(np.array([1.0, 2.0]), np.array([0.0, 1.0]))
        assert x[1] == pytest.approx(0.5, abs=1e-15)

    def test_stationarity_residual(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            C, y = random_block(12, rng)
            y[0] = 0.0
            x = solve_diagonal(C, y)
            res = C * x * x + y * x - 1.0
            assert np.abs(res).max() <= 1e-10
            assert np.all(x > 0)

    def test_extreme_linear_terms_stay_finite(self):
        # the quadratic-formula branch must not cancel for large |y|;
        # the roots approach 1/y (y large positive) and -y/C (large negative)
        C = np.array([1.0, 1.0, 1.0])
        y = np.array([0.0, 1e12, -1e12])
        x = solve_diagonal(C, y)
        assert np.all(np.isfinite(x)) and np.all(x > 0)
        assert x[1] == pytest.approx(1e-12, rel=1e-9)
        assert x[2] == pytest.approx(1e12, rel=1e-9)

    def test_minimizes_log_objective(self):
        rng = np.random.default_rng(1)
        C, y = random_block(8, rng)
        y[0] = 0.0
        x = solve_diagonal(C, y)
        base = float(x @ (C * x) + 2 * x @ y - 2 * np.log(x).sum())
        for _ in range(30):
            z = np.abs(x + 0.3 * rng.standard_normal(8)) + 1e-3
            zval = float(z @ (C * z) + 2 * z @ y - 2 * np.log(z).sum())
            assert base <= zval + 1e-12

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            solve_diagonal(np.array([1.0, -1.0]), np.zeros(2))
        with pytest.raises(ValueError):
            solve_diagonal(np.ones(3), np.zeros(2))
        with pytest.raises(ValueError):
            solve_diagonal(np.ones(2), np.array([np.nan, 0.0]))


def fused_certificate(x, C, y, lam):
    """Subgradient check: recover the dual of the difference penalty by
    telescoping the stationarity system and verify it is feasible."""
    r = -(2.0 * C * x + 2.0 * y)
    u = np.cumsum(-r)[:-1]
    assert abs(r.sum()) <= 1e-8
    assert np.all(np.abs(u) <= lam + 1e-8)
    jumps = np.diff(x)
    active = np.abs(jumps) > 1e-7
    assert np.allclose(u[active], lam * np.sign(jumps[active]), atol=1e-6)


class TestSolveFused:
    def test_zero_weight_is_unconstrained(self):
        rng = np.random.default_rng(2)
        C, y = random_block(9, rng)
        assert np.allclose(solve_fused(C, y, 0.0), -y / C, atol=1e-14)

    def test_symmetric_block_by_hand(self):
        # x = (a, a, -a, -a) by symmetry reduces f to 4a^2 - 8a + lam 2a,
        # so a = (8 - 2 lam)/8 = 7/8 at lam = 1/2
        x = solve_fused(np.ones(4), np.array([-1.0, -1.0, 1.0, 1.0]), 0.5)
        assert np.allclose(x, [0.875, 0.875, -0.875, -0.875], atol=1e-12)

    def test_saturation_to_weighted_mean(self):
        rng = np.random.default_rng(3)
        C, y = random_block(10, rng)
        x = solve_fused(C, y, 1e6)
        assert np.ptp(x) <= 1e-9
        assert x[0] == pytest.approx(-y.sum() / C.sum(), rel=1e-9)

    def test_single_coordinate(self):
        x = solve_fused(np.array([2.0]), np.array([3.0]), 5.0)
        assert x[0] == pytest.approx(-1.5, abs=1e-15)

    def test_total_variation_nonincreasing_in_weight(self):
        rng = np.random.default_rng(4)
        C, y = random_block(14, rng)
        tvs = [
            np.abs(np.diff(solve_fused(C, y, lam))).sum()
            for lam in (0.0, 0.05, 0.2, 0.5, 1.0, 3.0)
        ]
        assert all(a >= b - 1e-10 for a, b in zip(tvs, tvs[1:]))

    def test_dual_certificate_random(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            m = int(rng.integers(2, 16))
            C, y = random_block(m, rng)
            lam = float(rng.uniform(0.05, 1.5))
            x = solve_fused(C, y, lam)
            fused_certificate(x, C, y, lam)

    def test_against_generic_solver(self):
        rng = np.random.default_rng(6)
        for _ in range(5):
            m = int(rng.integers(3, 13))
            C, y = random_block(m, rng)
            lam = float(rng.uniform(0.1, 1.0))
            ref = cvxpy_block(C, y, "fused", lam)
            assert np.abs(solve_fused(C, y, lam) - ref).max() <= 1e-6

    def test_rejects_negative_weight(self):
        with pytest.raises(ValueError):
            solve_fused(np.ones(3), np.zeros(3), -0.1)


class TestSparseFused:
    def test_reduces_to_fused(self):
        rng = np.random.default_rng(7)
        C, y = random_block(8, rng)
        assert np.allclose(
            solve_sparse_fused(C, y, 0.4, 0.0), solve_fused(C, y, 0.4), atol=1e-12
        )

    def test_threshold_shortcut_with_equal_weights(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            m = int(rng.integers(2, 12))
            C = np.full(m, 1.3)
            y = rng.standard_normal(m)
            lam, lam1 = 0.3, 0.25
            direct = solve_sparse_fused(C, y, lam, lam1)
            shortcut = sparse_threshold(solve_fused(C, y, lam), C, lam1)
            assert np.abs(direct - shortcut).max() <= 1e-10

    def test_threshold_values(self):
        x = np.array([1.0, -0.2, 0.05])
        C = np.array([1.0, 1.0, 1.0])
        assert np.allclose(
            sparse_threshold(x, C, 0.2), [0.9, -0.1, 0.0], atol=1e-15
        )

    def test_large_lam1_zeroes_block(self):
        rng = np.random.default_rng(9)
        C, y = random_block(7, rng)
        assert np.all(solve_sparse_fused(C, y, 0.2, 1e6) == 0.0)

    def test_against_generic_solver(self):
        rng = np.random.default_rng(10)
        for _ in range(4):
            m = int(rng.integers(3, 12))
            C, y = random_block(m, rng)
            ref = cvxpy_block(C, y, "sparse-fused", 0.35, 0.2)
            got = solve_sparse_fused(C, y, 0.35, 0.2)
            assert np.abs(got - ref).max() <= 1e-6


class TestSolveTrend:
    def test_zero_weight_is_unconstrained(self):
        rng = np.random.default_rng(12)
        C, y = random_block(9, rng)
        assert np.allclose(solve_trend(C, y, 0.0), -y / C, atol=1e-12)

    def test_short_blocks_have_no_curvature_term(self):
        C, y = np.array([1.0, 2.0]), np.array([0.5, -1.0])
        assert np.allclose(solve_trend(C, y, 7.0), -y / C, atol=1e-12)

    def test_heavy_weight_linearizes(self):
        rng = np.random.default_rng(13)
        C, y = random_block(12, rng)
        x = solve_trend(C, y, 1e7)
        assert np.abs(np.diff(x, 2)).sum() <= 1e-6

    def test_against_generic_solver(self):
        rng = np.random.default_rng(14)
        for _ in range(5):
            m = int(rng.integers(4, 13))
            C, y = random_block(m, rng)
            lam = float(rng.uniform(0.1, 1.0))
            ref = cvxpy_block(C, y, "trend", lam)
            assert np.abs(solve_trend(C, y, lam) - ref).max() <= 1e-6

    @pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="jitted kernels unavailable")
    def test_active_set_agrees_with_barrier(self):
        # two independent routes to the same dual box program
        rng = np.random.default_rng(15)
        for _ in range(15):
            m = int(rng.integers(4, 16))
            C, y = random_block(m, rng)
            lam = float(rng.uniform(0.05, 2.0))
            ref = solve_trend(C, y, lam)
            x = np.zeros(m)
            nu = np.zeros(m - 2)
            assert _kernels.trend_active_set(C, y, lam, 1e-11, x, nu, False)
            assert np.abs(x - ref).max() <= 1e-7
            # warm restart from the solved dual must not move the answer
            assert _kernels.trend_active_set(C, y, lam, 1e-11, x, nu, True)
            assert np.abs(x - ref).max() <= 1e-7


class TestSolveHp:
    def test_zero_weight_is_unconstrained(self):
        rng = np.random.default_rng(16)
        C, y = random_block(9, rng)
        assert np.allclose(solve_hp(C, y, 0.0), -y / C, atol=1e-14)

    def test_zero_linear_term_gives_zero(self):
        assert np.all(solve_hp(np.ones(6), np.zeros(6), 3.0) == 0.0)

    def test_matches_dense_solve(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            m = int(rng.integers(3, 15))
            C, y = random_block(m, rng)
            lam = float(rng.uniform(0.1, 5.0))
            D2 = np.diff(np.eye(m), 2, axis=0)
            ref = np.linalg.solve(np.diag(C) + lam * D2.T @ D2, -y)
            assert np.abs(solve_hp(C, y, lam) - ref).max() <= 1e-12

    def test_linear_in_y(self):
        rng = np.random.default_rng(18)
        C, y = random_block(10, rng)
        a = solve_hp(C, y, 0.8)
        b = solve_hp(C, 2.0 * y, 0.8)
        assert np.allclose(b, 2.0 * a, rtol=1e-13, atol=1e-13)

    def test_rejects_negative_weight(self):
        with pytest.raises(ValueError):
            solve_hp(np.ones(4), np.zeros(4), -1.0)


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="jitted kernels unavailable")
def test_pentadiagonal_kernel_matches_dense_solve():
    rng = np.random.default_rng(19)
    for _ in range(10):
        m = int(rng.integers(3, 20))
        C = rng.uniform(0.5, 2.0, size=m)
        lam = float(rng.uniform(0.1, 4.0))
        D2 = np.diff(np.eye(m), 2, axis=0)
        A = np.diag(C) + lam * D2.T @ D2
        b = rng.standard_normal(m)
        x = np.zeros(m)
        assert _kernels.pentasolve(
            np.diag(A).copy(),
            np.diag(A, -1).copy(),
            np.diag(A, -2).copy(),
            b,
            x,
        )
        assert np.abs(x - np.linalg.solve(A, b)).max() <= 1e-10


class TestDispatch:
    def test_each_family_routes_to_its_solver(self):
        rng = np.random.default_rng(20)
        C, y = random_block(8, rng)
        cases = [
            (PenaltySpec("none"), -y / C),
            (PenaltySpec("fused", lam=0.4), solve_fused(C, y, 0.4)),
            (PenaltySpec("trend", lam=0.4), solve_trend(C, y, 0.4)),
            (PenaltySpec("hp", lam=0.4), solve_hp(C, y, 0.4)),
            (
                PenaltySpec("sparse-fused", lam=0.4, lam1=0.1),
                solve_sparse_fused(C, y, 0.4, 0.1),
            ),
        ]
        for pen, ref in cases:
            assert np.allclose(solve_subdiagonal(C, y, pen), ref, atol=1e-12)

    def test_solutions_are_block_minimizers(self):
        rng = np.random.default_rng(21)
        pens = [
            PenaltySpec("fused", lam=0.6),
            PenaltySpec("trend", lam=0.6),
            PenaltySpec("hp", lam=0.6),
            PenaltySpec("sparse-fused", lam=0.6, lam1=0.3),
        ]
        for pen in pens:
            C, y = random_block(9, rng)
            x = solve_subdiagonal(C, y, pen)
            base = block_objective(x, C, y, pen.family, pen.lam, pen.lam1)
            for _ in range(40):
                z = x + 0.25 * rng.standard_normal(9)
                zval = block_objective(z, C, y, pen.family, pen.lam, pen.lam1)
                assert base <= zval + 1e-10
