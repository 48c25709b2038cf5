"""Penalty weight selection by BIC or K-fold cross validation.

Model complexity for BIC counts effective parameters per penalized
subdiagonal: fused families count distinct nonzero level runs, the
trend family counts active second-difference knots plus the two
endpoint degrees, and the smoothing family uses the trace of its
linear smoother.  The main diagonal always contributes p.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bcd import FitResult, fit
from .blockops import compute_ci
from .errors import NumericalError, SmoothCholError
from .model import FitConfig, PenaltySpec, SampleCov

RUN_TOL = 1e-8  # values closer than this fuse into one run / count as zero

DEFAULT_GRID = (0.1, 1.0, 100)


@dataclass(frozen=True)
class TuneGrid:
    """Candidate penalty weights; lam1s only applies to sparse-fused."""

    lams: tuple
    lam1s: tuple = (None,)

    def __post_init__(self):
        lams = tuple(float(v) for v in np.atleast_1d(np.asarray(self.lams, dtype=np.float64)))
        if not lams or any(v < 0 for v in lams):
            raise ValueError("lams must be nonnegative and nonempty")
        object.__setattr__(self, "lams", lams)
        raw1 = self.lam1s
        # sentinel check must not compare an ndarray against the tuple
        if not (isinstance(raw1, tuple) and raw1 == (None,)):
            lam1s = tuple(float(v) for v in np.atleast_1d(np.asarray(raw1, dtype=np.float64)))
            if not lam1s or any(v < 0 for v in lam1s):
                raise ValueError("lam1s must be nonnegative and nonempty")
            object.__setattr__(self, "lam1s", lam1s)

    @classmethod
    def default(cls):
        lo, hi, num = DEFAULT_GRID
        return cls(lams=np.linspace(lo, hi, num))

    def points(self):
        return [(lam, lam1) for lam in self.lams for lam1 in self.lam1s]


def _run_count(d):
    """Distinct nonzero levels in a stepwise vector."""
    d = np.asarray(d)
    if d.size == 0:
        return 0
    breaks = np.abs(np.diff(d)) > RUN_TOL
    starts = np.concatenate([[0], np.nonzero(breaks)[0] + 1])
    return int(np.sum(np.abs(d[starts]) > RUN_TOL))


def _trend_df(d):
    d = np.asarray(d)
    if d.size == 0 or np.abs(d).max() <= RUN_TOL:
        return 0
    if d.size <= 2:
        return d.size
    knots = int(np.sum(np.abs(np.diff(d, n=2)) > RUN_TOL))
    return min(d.size, knots + 2)


def _smoother_df(C, lam):
    """Trace of (diag(C) + lam D2'D2)^{-1} diag(C)."""
    m = len(C)
    if m <= 2 or lam == 0.0:
        return float(m)
    D2 = np.diff(np.eye(m), n=2, axis=0)
    A = np.diag(C) + lam * (D2.T @ D2)
    return float(np.trace(np.linalg.solve(A, np.diag(C))))


def effective_df(cov, L, penalty, band=None):
    """Effective parameter count of a fitted factor under a penalty."""
    cov = cov if isinstance(cov, SampleCov) else SampleCov(np.asarray(cov, dtype=np.float64))
    p = L.p
    band = p - 1 if band is None else min(band, p - 1)
    total = float(p)
    for i in range(1, band + 1):
        d = L.subdiagonal(i)
        if penalty.family in ("fused", "sparse-fused"):
            total += _run_count(d)
        elif penalty.family == "trend":
            total += _trend_df(d)
        elif penalty.family == "hp":
            total += _smoother_df(compute_ci(cov.S, i), penalty.lam)
        else:
            total += d.size
    return total


def bic_score(cov, L, n, penalty, band=None):
    """n times the Gaussian deviance plus log(n) times the effective df."""
    cov = cov if isinstance(cov, SampleCov) else SampleCov(np.asarray(cov, dtype=np.float64))
    Ld = L.dense()
    trace = float(np.sum((Ld @ cov.S) * Ld))
    logdet = 2.0 * float(np.sum(np.log(L.diagonals[0])))
    return n * (trace - logdet) + np.log(n) * effective_df(cov, L, penalty, band)


def _fold_indices(n, folds, seed):
    """Seeded shuffle, then round-robin assignment."""
    order = np.random.default_rng(seed).permutation(n)
    return [np.sort(order[k::folds]) for k in range(folds)]


def cv_score(data, penalty, config=None, folds=5, seed=0):
    """Mean held-out Gaussian deviance across folds.

    Rows are treated as draws from a zero-mean model (standardize
    upstream), so both the training covariance and the validation score
    use uncentered second moments.
    """
    data = np.asarray(data, dtype=np.float64)
    n = data.shape[0]
    if folds < 2 or folds > n:
        raise ValueError(f"folds must be in [2, {n}]")
    config = config or FitConfig()
    total = 0.0
    for idx in _fold_indices(n, folds, seed):
        mask = np.ones(n, dtype=bool)
        mask[idx] = False
        train = SampleCov.from_data(data[mask], center=False)
        res = fit(train, penalty, config)
        held = data[idx]
        Ld = res.L.dense()
        quad = float(np.sum((held @ Ld.T) ** 2))
        logdet = 2.0 * float(np.sum(np.log(res.L.diagonals[0])))
        total += quad - len(idx) * logdet
    return total / folds


@dataclass(frozen=True)
class TunePoint:
    lam: float
    lam1: float
    score: float
    converged: bool
    iterations: int


@dataclass(frozen=True)
class TuneResult:
    criterion: str
    points: tuple
    best: PenaltySpec
    best_score: float
    result: FitResult


def _thread_count():
    try:
        return max(1, int(os.environ.get("SC_THREADS", "1")))
    except ValueError:
        return 1


def tune(data, family, grid=None, criterion="bic", config=None, folds=5, seed=0):
    """Score every grid point and refit the best one on the full data.

    Failed grid points get a NaN score and stay in the table but are
    never selected.  Exact score ties resolve toward the larger weights.
    Set SC_THREADS to evaluate grid points concurrently; results do not
    depend on the thread count.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError("tune needs a data matrix, one row per observation")
    if criterion not in ("bic", "cv"):
        raise ValueError(f"unknown criterion {criterion!r}")
    config = config or FitConfig()
    grid = grid or TuneGrid.default()
    n = data.shape[0]
    full = SampleCov.from_data(data, center=False)

    def evaluate(point):
        lam, lam1 = point
        penalty = PenaltySpec(family=family, lam=lam, lam1=lam1 if lam1 is not None else 0.0)
        try:
            res = fit(full, penalty, config)
            if criterion == "bic":
                score = bic_score(full, res.L, n, penalty, config.band_for(full.p))
            else:
                score = cv_score(data, penalty, config, folds, seed)
            return TunePoint(lam, lam1 if lam1 is not None else 0.0,
                             float(score), res.converged, res.iterations), penalty, res
        except SmoothCholError:
            return TunePoint(lam, lam1 if lam1 is not None else 0.0,
                             float("nan"), False, 0), penalty, None

    pts = grid.points()
    workers = _thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(evaluate, pts))
    else:
        rows = [evaluate(pt) for pt in pts]

    best_row = None
    for row in rows:
        point = row[0]
        if not np.isfinite(point.score):
            continue
        if best_row is None:
            best_row = row
            continue
        cur = best_row[0]
        if point.score < cur.score or (
            point.score == cur.score and (point.lam, point.lam1) > (cur.lam, cur.lam1)
        ):
            best_row = row
    if best_row is None:
        raise NumericalError("every grid point failed to fit")

    point, penalty, res = best_row
    return TuneResult(
        criterion=criterion,
        points=tuple(r[0] for r in rows),
        best=penalty,
        best_score=point.score,
        result=res,
    )
