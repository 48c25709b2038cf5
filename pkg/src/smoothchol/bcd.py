"""Block coordinate descent over the diagonals of the Cholesky factor.

Each sweep visits diagonals 0..band in order and replaces each with the
exact minimizer of its block problem given the others, so the penalized
objective is nonincreasing sweep to sweep; a violation beyond float slack
is a bug and raises.  Diagonals beyond the band limit are pinned to zero.
All families run on jitted whole-sweep kernels when numba is present;
sweep_once is the vectorized reference path the kernels are tested
against, and the fallback when it is not.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .blockops import DenseState, LowRankState, penalty_of_diagonal, penalty_value
from .errors import NumericalError
from .model import CholFactor, FitConfig, PenaltySpec, SampleCov
from .penalties import solve_diagonal, solve_subdiagonal

# slack for the per-sweep and per-block descent assertions
DESCENT_SLACK = 1e-9


@dataclass(frozen=True)
class FitResult:
    """Outcome of a block-descent run."""

    L: CholFactor
    iterations: int
    converged: bool
    objective_trace: np.ndarray
    final_gap: float
    path: str

    def __post_init__(self):
        trace = np.asarray(self.objective_trace, dtype=np.float64)
        trace.flags.writeable = False
        object.__setattr__(self, "objective_trace", trace)


def _as_cov(target):
    if isinstance(target, SampleCov):
        return target
    arr = np.asarray(target, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a SampleCov or an n x p data matrix, got shape {arr.shape}")
    return SampleCov.from_data(arr)


def _init_diagonals(cov_diag, config, band):
    p = cov_diag.shape[0]
    if isinstance(config.init, CholFactor):
        if config.init.p != p:
            raise ValueError(f"init factor has p = {config.init.p}, expected {p}")
        diags = [d.copy() for d in config.init.diagonals]
        for i in range(band + 1, p):
            diags[i] = np.zeros(p - i)
        return diags
    if config.init == "diag":
        diags = [np.zeros(p - i) for i in range(p)]
        diags[0] = np.sqrt(cov_diag)
        return diags
    raise ValueError(f"unknown init {config.init!r}")


def make_state(target, config=None):
    """Build the sweep state (dense or low-rank) for a covariance target."""
    config = config or FitConfig()
    cov = _as_cov(target)
    p = cov.p
    band = config.band_for(p)
    path = config.path
    if path == "auto":
        path = "lowrank" if cov.data is not None and cov.n is not None and cov.n < p else "dense"
    if path == "lowrank":
        if cov.data is None:
            raise ValueError("low-rank path requires the data matrix, not just S")
        diags = _init_diagonals(np.diag(cov.S), config, band)
        return LowRankState(cov.data, diags, band)
    diags = _init_diagonals(np.diag(cov.S), config, band)
    return DenseState(cov.S, diags, band)


def state_objective(state, penalty):
    """Q at the state's current factor, from path-local quantities."""
    d0 = state.diags[0]
    if np.any(d0 <= 0):
        raise NumericalError("main diagonal left the positive orthant")
    return state.tr_term() - 2.0 * float(np.log(d0).sum()) + penalty_value(state.diags, penalty)


def sweep_once(state, penalty):
    """One full pass over diagonals 0..band; returns (per-block deltas, gap).

    Every delta is the exact change of Q contributed by that block update
    and must be nonpositive up to float slack.
    """
    p = state.p
    deltas = np.zeros(state.band + 1)
    gap = 0.0
    for i in range(state.band + 1):
        C = state.sdiag[: p - i]
        y = state.y(i)
        xold = state.diags[i]
        if i == 0:
            y[0] = 0.0  # first variable regresses on nothing
            xnew = solve_diagonal(C, y)
            delta = float((xnew * xnew - xold * xold) @ C + 2.0 * (xnew - xold) @ y)
            delta -= 2.0 * float(np.log(xnew).sum() - np.log(xold).sum())
        else:
            xnew = solve_subdiagonal(C, y, penalty)
            delta = float((xnew * xnew - xold * xold) @ C + 2.0 * (xnew - xold) @ y)
            delta += penalty_of_diagonal(xnew, penalty) - penalty_of_diagonal(xold, penalty)
        if not np.isfinite(delta) or delta > 1e-6:
            raise NumericalError(
                f"block update on diagonal {i} increased the objective by {delta:.3e}"
            )
        if delta > 0:
            # an iterative block solver returned a within-tolerance tie at a
            # stationary block; keep the incumbent so descent stays exact
            deltas[i] = 0.0
            continue
        gap = max(gap, float(np.max(np.abs(xnew - xold))))
        state.set_diag(i, xnew)
        deltas[i] = delta
    return deltas, gap


TREND_GAP_TOL = 1e-11  # relative KKT tolerance of the trend block solver


def _trend_bufs(p, band):
    """Per-diagonal trend dual storage threaded through the sweep kernels."""
    nuoffs = np.zeros(band + 2, dtype=np.int64)
    pos = 0
    for i in range(1, band + 1):
        nuoffs[i] = pos
        pos += max(p - i - 2, 0)
    nuoffs[band + 1] = pos
    return np.zeros(max(pos, 1)), nuoffs, np.zeros(band + 1, dtype=bool)


def _fast_sweep(state, penalty, bufs=None):
    """Jitted whole-sweep update; state.diags must alias state's flat buffer."""
    fam = _kernels.FAMILY_CODES[penalty.family]
    if bufs is None:
        bufs = _trend_bufs(state.p, state.band)
    nubuf, nuoffs, warm = bufs
    if state.path == "dense":
        gap = _kernels.dense_sweep(
            state.W, state.S, state.sdiag, state._flat, state._offs,
            state.band, fam, penalty.lam, penalty.lam1, TREND_GAP_TOL,
            nubuf, nuoffs, warm,
        )
    else:
        gap = _kernels.lowrank_sweep(
            state.R, state.XT, state.sdiag, state.n, state._flat, state._offs,
            state.band, fam, penalty.lam, penalty.lam1, TREND_GAP_TOL,
            nubuf, nuoffs, warm,
        )
    if gap == _kernels.SWEEP_FAILED:
        raise NumericalError("a block update increased the objective; solver bug")
    return gap


def _attach_flat(state):
    p = state.p
    offs = np.zeros(state.band + 1, dtype=np.int64)
    pos = 0
    for i in range(state.band + 1):
        offs[i] = pos
        pos += p - i
    flat = np.concatenate([state.diags[i] for i in range(state.band + 1)])
    for i in range(state.band + 1):
        state.diags[i] = flat[offs[i] : offs[i] + p - i]
    state._flat = flat
    state._offs = offs


def fit(target, penalty=None, config=None):
    """Estimate the Cholesky factor of the precision by penalized block descent.

    Parameters
    ----------
    target : SampleCov or ndarray
        Sample covariance (optionally carrying data) or an n x p data
        matrix; raw data is centered and turned into S = X'X / n.
    penalty : PenaltySpec, optional
        Defaults to no penalty (maximum likelihood when S is invertible).
    config : FitConfig, optional
        Stopping rule, band limit, path and init choices.

    Returns
    -------
    FitResult
        Factor estimate, iteration count, convergence flag, per-sweep
        objective trace (nonincreasing), final sup-norm gap, path used.
    """
    penalty = penalty or PenaltySpec("none")
    config = config or FitConfig()
    state = make_state(target, config)
    fast = _kernels.HAVE_NUMBA
    if fast:
        _attach_flat(state)

    trace0 = state_objective(state, penalty)
    if not np.isfinite(trace0):
        raise NumericalError("objective is non-finite at the initial factor")

    if fast:
        # the whole sweep loop runs inside one jitted call: per-sweep
        # objective trace, descent check, gap test and periodic refresh
        fam = _kernels.FAMILY_CODES[penalty.family]
        nubuf, nuoffs, warm = _trend_bufs(state.p, state.band)
        tr = np.empty(config.max_iter + 1)
        tr[0] = trace0
        if state.path == "dense":
            sweeps, gap, code = _kernels.dense_run(
                state.W, state.S, state.sdiag, state._flat, state._offs,
                state.band, fam, penalty.lam, penalty.lam1, TREND_GAP_TOL,
                config.epsilon, config.max_iter, DESCENT_SLACK, tr,
                nubuf, nuoffs, warm,
            )
        else:
            sweeps, gap, code = _kernels.lowrank_run(
                state.R, state.XT, state.sdiag, state.n, state._flat, state._offs,
                state.band, fam, penalty.lam, penalty.lam1, TREND_GAP_TOL,
                config.epsilon, config.max_iter, DESCENT_SLACK, tr,
                nubuf, nuoffs, warm,
            )
        if code == _kernels.RUN_FAILED:
            raise NumericalError("a block update increased the objective; solver bug")
        if code == _kernels.RUN_NONFINITE:
            raise NumericalError(f"objective became non-finite at sweep {sweeps}")
        if code == _kernels.RUN_INCREASE:
            raise NumericalError(
                f"objective increased by {tr[sweeps] - tr[sweeps - 1]:.3e} at sweep {sweeps}"
            )
        iterations = int(sweeps)
        converged = code == _kernels.RUN_OK
        gap = float(gap)
        trace_arr = tr[: iterations + 1].copy()
    else:
        trace = [trace0]
        gap = np.inf
        iterations = 0
        converged = False
        for k in range(1, config.max_iter + 1):
            _, gap = sweep_once(state, penalty)
            q = state_objective(state, penalty)
            if not np.isfinite(q):
                raise NumericalError(f"objective became non-finite at sweep {k}")
            if q > trace[-1] + DESCENT_SLACK:
                raise NumericalError(
                    f"objective increased by {q - trace[-1]:.3e} at sweep {k}"
                )
            trace.append(q)
            iterations = k
            if gap <= config.epsilon:
                converged = True
                break
            if k % 64 == 0:
                state.refresh()  # shed incremental rounding drift
        trace_arr = np.asarray(trace)

    L = CholFactor(tuple(state.diags[i] for i in range(state.p)))
    return FitResult(
        L=L,
        iterations=iterations,
        converged=converged,
        objective_trace=trace_arr,
        final_gap=float(gap),
        path=state.path,
    )


def _timed_chunk(state, penalty, bufs, sweeps):
    """Run one jitted block of sweeps and return (cpu_seconds, sweeps_done)."""
    fam = _kernels.FAMILY_CODES[penalty.family]
    nubuf, nuoffs, warm = bufs
    trace = np.empty(sweeps + 1)
    trace[0] = state_objective(state, penalty)
    args = (state.band, fam, penalty.lam, penalty.lam1, TREND_GAP_TOL,
            0.0, sweeps, DESCENT_SLACK, trace, nubuf, nuoffs, warm)
    t0 = time.process_time()
    if state.path == "dense":
        done, _, code = _kernels.dense_run(
            state.W, state.S, state.sdiag, state._flat, state._offs, *args)
    else:
        done, _, code = _kernels.lowrank_run(
            state.R, state.XT, state.sdiag, state.n, state._flat,
            state._offs, *args)
    dt = time.process_time() - t0
    if code == _kernels.RUN_FAILED or code == _kernels.RUN_NONFINITE:
        raise NumericalError("timing probe hit a degenerate instance")
    return dt, max(int(done), 1)


# micro-chunks are sized to fit inside a scheduler quantum so that most
# of them run uninterrupted; 1 ms dodges the multi-ms preemption bursts
# seen on shared hosts
_CHUNK_TARGET_SECONDS = 1e-3
_CHUNKS_PER_SAMPLE = 24
_ALLOCS_PER_SAMPLE = 3


def complexity_probe(p_values, n=10, penalty=None, repeats=5, seed=0, sweeps=50):
    """Median per-sweep CPU time at each p, on both update paths.

    Each sample times jitted blocks of sweeps and divides by the sweeps
    actually run, so call dispatch does not pollute the scaling.  Process
    CPU time is used rather than wall time; on shared hosts wall clocks
    absorb scheduler steal and do not reproduce.  Preemption still leaks
    into CPU time through cache refills, so a sample splits into
    micro-chunks short enough to fit between interruptions and keeps a
    low quantile.  Chunks for the different p are interleaved so that
    every sample sees the same background load, and each repeat medians
    a few freshly allocated replicas of the state: physical page
    placement shifts cache conflict rates by enough to skew
    single-allocation ratios, and replication across allocations removes
    that draw.  One untimed block runs first per state to absorb JIT
    compilation and cache warmup.  Returns a list of dicts with keys p,
    path, seconds.
    """
    _kernels.warmup()
    if penalty is None:
        penalty = PenaltySpec("none")
    ps = [int(p) for p in p_values]
    keys = [(p, path) for p in ps for path in ("dense", "lowrank")]
    data = {p: np.random.default_rng(seed + p).standard_normal((n, p)) for p in ps}
    hold = []  # keeps prior allocations alive so every draw gets new pages

    def one_allocation():
        setups = {}
        for p, path in keys:
            cov = SampleCov.from_data(data[p])
            state = make_state(cov, FitConfig(path=path, band="all"))
            _attach_flat(state)
            setups[(p, path)] = (state, _trend_bufs(state.p, state.band))
        hold.append(setups)
        chunk_sweeps = {}
        for key, (state, bufs) in setups.items():
            _timed_chunk(state, penalty, bufs, sweeps)  # warm, discarded
            per_sweep = min(
                _timed_chunk(state, penalty, bufs, sweeps)[0] / sweeps
                for _ in range(2)
            )
            size = int(round(_CHUNK_TARGET_SECONDS / max(per_sweep, 1e-9)))
            chunk_sweeps[key] = max(1, min(size, sweeps))
        samples = {key: [] for key in keys}
        for _ in range(_CHUNKS_PER_SAMPLE):
            for key, (state, bufs) in setups.items():
                dt, done = _timed_chunk(state, penalty, bufs, chunk_sweeps[key])
                samples[key].append(dt / done)
        return {key: float(np.percentile(samples[key], 25)) for key in keys}

    times = {key: [] for key in keys}
    for _ in range(repeats):
        draws = [one_allocation() for _ in range(_ALLOCS_PER_SAMPLE)]
        for key in keys:
            times[key].append(float(np.median([d[key] for d in draws])))
    return [
        {"p": p, "path": path, "seconds": float(np.median(times[(p, path)]))}
        for p in ps
        for path in ("dense", "lowrank")
    ]
