"""Synthetic ordered-data models and Gaussian sampling.

Each case generates a unit lower-triangular T (entries are the negated
AR coefficients) plus innovation variances, giving the precision
Omega = T' diag(lam)^{-1} T.  Cases A-D are banded with structured
subdiagonals; "mixed" draws a case profile per subdiagonal of a full
factor; "nonhier" places value bands at the near and far subdiagonals
with an exactly-zero block between them, so support recovery is
nontrivial.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import InvalidCovarianceError
from .model import CholFactor, ModifiedChol, from_modified

CASES = ("A", "B", "C", "D", "mixed", "nonhier")


def default_band(case_id, p):
    if case_id == "B":
        return 2
    if case_id in ("A", "C", "D"):
        return 5
    return p - 1


@dataclass(frozen=True)
class CaseSpec:
    """One synthetic scenario: case label, dimension, seed, band."""

    case_id: str
    p: int
    seed: int = 0
    band: int = None

    def __post_init__(self):
        if self.case_id not in CASES:
            raise ValueError(f"unknown case {self.case_id!r}; expected one of {CASES}")
        if self.p < 4:
            raise ValueError("p must be at least 4")
        if self.band is None:
            # the case defaults can exceed small dimensions; clamp like
            # FitConfig.band_for instead of rejecting the default
            band = min(default_band(self.case_id, self.p), self.p - 1)
            object.__setattr__(self, "band", band)
        if not 1 <= self.band <= self.p - 1:
            raise ValueError(f"band must be in [1, {self.p - 1}]")


def _markov_walk_profile(p, rng, b=0.5, keep=0.8):
    """Case D first subdiagonal: random walk with Markov increments plus noise."""
    x = np.zeros(p - 1)
    v = rng.uniform(-b, b)
    for i in range(1, p - 1):
        x[i] = x[i - 1] + v
        if rng.random() >= keep:
            v = rng.uniform(-b, b)
    return x + rng.standard_normal(p - 1)


def _first_subdiag_profile(case_id, p, rng):
    """First-subdiagonal T entries (length p-1) for one case."""
    if case_id == "A":
        phi = rng.uniform(0.3, 0.7)
        return np.full(p - 1, -phi)
    if case_id == "B":
        return _case_b_subdiags(p)[0]
    if case_id == "C":
        i = np.arange(1, p)
        return 2.0 * (i / p) ** 2 - 0.5
    if case_id == "D":
        return _markov_walk_profile(p, rng)
    raise ValueError(case_id)


def _case_b_subdiags(p):
    """Piecewise AR(2): three regimes split at floor(p/2) and floor(3p/4)."""
    b1, b2 = p // 2, (3 * p) // 4
    rows1 = np.arange(2, p + 1)  # row of each lag-1 entry
    phi1 = np.where(rows1 <= b1, -0.7, np.where(rows1 <= b2, 0.4, -0.3))
    rows2 = np.arange(3, p + 1)
    phi2 = np.where(rows2 <= b1, 0.0, -0.81)
    return -phi1, -phi2


def make_truth(spec):
    """Generate the (T, lam) truth for a CaseSpec; deterministic in the seed."""
    p = spec.p
    rng = np.random.default_rng(spec.seed)
    subdiags = [np.zeros(p - i) for i in range(1, p)]

    if spec.case_id in ("A", "C", "D"):
        head = _first_subdiag_profile(spec.case_id, p, rng)
        # lower subdiagonals repeat the profile with the tail trimmed
        for i in range(1, spec.band + 1):
            subdiags[i - 1] = head[: p - i].copy()
    elif spec.case_id == "B":
        t1, t2 = _case_b_subdiags(p)
        subdiags[0] = t1
        subdiags[1] = t2
    elif spec.case_id == "mixed":
        for i in range(1, p):
            case = ("A", "B", "C", "D")[rng.integers(0, 4)]
            subdiags[i - 1] = _first_subdiag_profile(case, p, rng)[: p - i].copy()
    elif spec.case_id == "nonhier":
        n3 = p // 3
        for i in range(1, p):
            if i <= n3 or i > p - 1 - n3:
                vals = rng.uniform(0.1, 0.2, p - i)
                signs = np.where(rng.random(p - i) < 0.5, -1.0, 1.0)
                subdiags[i - 1] = vals * signs

    T = np.eye(p)
    for i in range(1, p):
        T[np.arange(p - i) + i, np.arange(p - i)] = subdiags[i - 1]
    if spec.case_id in ("C", "D"):
        lam_sqrt = np.log(np.arange(1, p + 1) / 10.0 + 2.0)
        lam = lam_sqrt**2
    else:
        lam = np.ones(p)
    return ModifiedChol(T=T, lam=lam)


def sample_gaussian(truth, n, seed):
    """Draw n rows from N(0, (L'L)^{-1}) by back-substitution on z ~ N(0, I)."""
    L = from_modified(truth) if isinstance(truth, ModifiedChol) else truth
    if not isinstance(L, CholFactor):
        raise TypeError("truth must be a ModifiedChol or CholFactor")
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, L.p))
    return solve_triangular(L.dense(), Z.T, lower=True).T


def standardize(data):
    """Center columns and scale to unit variance (denominator n)."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError(f"data must be 2-D, got shape {data.shape}")
    centered = data - data.mean(axis=0)
    sd = np.sqrt((centered**2).mean(axis=0))
    if np.any(sd == 0):
        bad = int(np.argmin(sd))
        raise InvalidCovarianceError(f"column {bad} has zero variance")
    return centered / sd
