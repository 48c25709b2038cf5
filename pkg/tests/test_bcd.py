import numpy as np
import pytest

from smoothchol import _kernels
from smoothchol.bcd import (
    DESCENT_SLACK,
    complexity_probe,
    fit,
    make_state,
    state_objective,
    sweep_once,
    _attach_flat,
    _fast_sweep,
    _trend_bufs,
)
from smoothchol.blockops import compute_ci, objective
from smoothchol.errors import NumericalError
from smoothchol.model import CholFactor, FitConfig, PenaltySpec, SampleCov
from smoothchol.penalties import solve_subdiagonal

from test_model import random_factor

ALL_PENALTIES = (
    PenaltySpec("none"),
    PenaltySpec("fused", lam=0.3),
    PenaltySpec("trend", lam=0.4),
    PenaltySpec("hp", lam=0.5),
    PenaltySpec("sparse-fused", lam=0.3, lam1=0.15),
)


def random_data(p, n, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, p))


class TestFitBasics:
    def test_identity_covariance_recovers_identity(self):
        result = fit(SampleCov(S=np.eye(6)))
        assert result.converged
        assert np.allclose(result.L.dense(), np.eye(6), atol=1e-10)

    def test_accepts_raw_data_matrix(self):
        X = random_data(4, 30, seed=0)
        result = fit(X, PenaltySpec("fused", lam=0.2))
        Xc = X - X.mean(axis=0)
        S = Xc.T @ Xc / 30
        assert result.converged
        # returned factor should reproduce the reported final objective
        assert objective(S, result.L, PenaltySpec("fused", lam=0.2)) == pytest.approx(
            result.objective_trace[-1], rel=1e-12
        )

    def test_trace_is_monotone_and_read_only(self):
        X = random_data(8, 40, seed=1)
        result = fit(X, PenaltySpec("trend", lam=0.6))
        diffs = np.diff(result.objective_trace)
        assert np.all(diffs <= DESCENT_SLACK)
        with pytest.raises(ValueError):
            result.objective_trace[0] = 0.0

    def test_unconverged_run_reports_flag(self):
        X = random_data(10, 60, seed=2)
        result = fit(X, config=FitConfig(epsilon=1e-14, max_iter=1))
        assert not result.converged
        assert result.iterations == 1

    def test_band_limit_zeroes_far_diagonals(self):
        X = random_data(9, 50, seed=3)
        result = fit(X, PenaltySpec("fused", lam=0.1), FitConfig(band=2))
        for i in range(3, 9):
            assert np.all(result.L.subdiagonal(i) == 0.0)
        assert np.any(result.L.subdiagonal(1) != 0.0)

    def test_determinism(self):
        X = random_data(7, 35, seed=4)
        pen = PenaltySpec("sparse-fused", lam=0.2, lam1=0.1)
        r1 = fit(X, pen)
        r2 = fit(X, pen)
        for a, b in zip(r1.L.diagonals, r2.L.diagonals):
            assert np.array_equal(a, b)
        assert np.array_equal(r1.objective_trace, r2.objective_trace)

    def test_init_must_match_dimension(self):
        X = random_data(5, 20, seed=5)
        bad = CholFactor.identity(4)
        with pytest.raises(ValueError):
            fit(X, config=FitConfig(init=bad))

    def test_warm_start_at_solution_stops_immediately(self):
        X = random_data(6, 30, seed=6)
        pen = PenaltySpec("hp", lam=0.4)
        first = fit(X, pen, FitConfig(epsilon=1e-10, max_iter=2000))
        assert first.converged
        again = fit(X, pen, FitConfig(epsilon=1e-8, max_iter=5, init=first.L))
        assert again.converged
        assert again.iterations <= 2
        assert np.allclose(again.L.dense(), first.L.dense(), atol=1e-7)


class TestPathSelection:
    def test_auto_prefers_lowrank_when_n_below_p(self):
        X = random_data(12, 6, seed=7)
        assert fit(X).path == "lowrank"
        assert fit(random_data(6, 12, seed=7)).path == "dense"

    def test_plain_covariance_uses_dense(self):
        S = np.eye(5)
        assert fit(SampleCov(S=S)).path == "dense"

    def test_lowrank_needs_data(self):
        with pytest.raises(ValueError):
            make_state(SampleCov(S=np.eye(4)), FitConfig(path="lowrank"))

    def test_paths_reach_the_same_minimizer(self):
        X = random_data(8, 5, seed=8)
        pen = PenaltySpec("fused", lam=0.25)
        cfg = dict(epsilon=1e-11, max_iter=4000)
        dense = fit(X, pen, FitConfig(path="dense", **cfg))
        low = fit(X, pen, FitConfig(path="lowrank", **cfg))
        assert dense.path == "dense" and low.path == "lowrank"
        assert np.allclose(dense.L.dense(), low.L.dense(), atol=1e-6)
        assert dense.objective_trace[-1] == pytest.approx(
            low.objective_trace[-1], abs=1e-9
        )


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="jitted kernels unavailable")
class TestSweepEquivalence:
    def test_jitted_sweep_matches_reference(self):
        for pen in ALL_PENALTIES:
            for path in ("dense", "lowrank"):
                X = random_data(7, 5 if path == "lowrank" else 20, seed=9)
                cov = SampleCov.from_data(X)
                slow = make_state(cov, FitConfig(path=path))
                fast = make_state(cov, FitConfig(path=path))
                _attach_flat(fast)
                bufs = _trend_bufs(fast.p, fast.band)
                for _ in range(8):
                    sweep_once(slow, pen)
                    _fast_sweep(fast, pen, bufs)
                for i in range(7):
                    assert np.allclose(
                        slow.diags[i], fast.diags[i], atol=1e-7, rtol=0
                    ), (pen.family, path, i)
                assert state_objective(slow, pen) == pytest.approx(
                    state_objective(fast, pen), abs=1e-9
                )

    def test_python_fallback_loop_matches_fast_path(self, monkeypatch):
        X = random_data(6, 25, seed=10)
        pen = PenaltySpec("fused", lam=0.3)
        cfg = FitConfig(epsilon=1e-9, max_iter=500)
        fast = fit(X, pen, cfg)
        monkeypatch.setattr(_kernels, "HAVE_NUMBA", False)
        slow = fit(X, pen, cfg)
        assert slow.converged and fast.converged
        assert np.allclose(slow.L.dense(), fast.L.dense(), atol=1e-6)
        assert slow.objective_trace[-1] == pytest.approx(
            fast.objective_trace[-1], abs=1e-8
        )


class TestOptimality:
    def test_blocks_are_stationary_after_convergence(self):
        X = random_data(8, 40, seed=11)
        for pen in ALL_PENALTIES:
            result = fit(X, pen, FitConfig(epsilon=1e-11, max_iter=4000))
            assert result.converged
            state = make_state(
                SampleCov.from_data(X), FitConfig(init=result.L)
            )
            for i in range(1, 8):
                C = compute_ci(state.S, i)
                best = solve_subdiagonal(C, state.y(i), pen)
                assert np.abs(best - state.diags[i]).max() <= 1e-7, pen.family

    def test_restarts_reach_one_objective(self):
        X = random_data(5, 30, seed=12)
        rng = np.random.default_rng(13)
        pen = PenaltySpec("sparse-fused", lam=0.3, lam1=0.1)
        vals = []
        for k in range(5):
            init = random_factor(5, rng)
            res = fit(X, pen, FitConfig(epsilon=1e-12, max_iter=6000, init=init))
            vals.append(res.objective_trace[-1])
        assert np.ptp(vals) <= 1e-6

    def test_estimates_stay_bounded(self):
        for seed in range(5):
            X = random_data(6, 9, seed=seed)
            res = fit(X, PenaltySpec("fused", lam=0.05))
            norm = np.sqrt(sum((d**2).sum() for d in res.L.diagonals))
            init = np.sqrt(np.diag(SampleCov.from_data(X).S).sum())
            assert norm <= 10.0 * init + 10.0

    def test_monotone_descent_across_families(self):
        rng = np.random.default_rng(14)
        for k in range(20):
            pen = ALL_PENALTIES[k % len(ALL_PENALTIES)]
            p = int(rng.integers(4, 10))
            n = int(rng.integers(4, 30))
            X = rng.standard_normal((n, p))
            res = fit(X, pen, FitConfig(max_iter=200))
            assert np.all(np.diff(res.objective_trace) <= DESCENT_SLACK)


class TestGuards:
    def test_nonfinite_data_rejected(self):
        X = random_data(4, 10, seed=15)
        X[0, 0] = np.nan
        with pytest.raises(Exception):
            fit(X)

    def test_zero_variance_column_rejected(self):
        X = random_data(4, 10, seed=16)
        X[:, 2] = 5.0  # constant column, centered away to zero
        with pytest.raises(Exception):
            fit(X)

    def test_tiny_epsilon_budget_raises_nothing(self):
        # running out of sweeps is not an error, only a flag
        X = random_data(5, 25, seed=17)
        res = fit(X, PenaltySpec("trend", lam=0.2), FitConfig(epsilon=0.0, max_iter=3))
        assert not res.converged


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="jitted kernels unavailable")
def test_complexity_probe_reports_both_paths():
    records = complexity_probe([4, 8], n=3, repeats=2, sweeps=5)
    assert len(records) == 4
    for rec in records:
        assert rec["p"] in (4, 8)
        assert rec["path"] in ("dense", "lowrank")
        assert rec["seconds"] > 0.0
    assert {(r["p"], r["path"]) for r in records} == {
        (4, "dense"),
        (4, "lowrank"),
        (8, "dense"),
        (8, "lowrank"),
    }
