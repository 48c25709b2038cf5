"""Value types for Cholesky-parameterized covariance models.

A precision matrix for variables with a natural ordering is parameterized
through the lower-triangular factor L of Omega = L' L.  L is stored by
diagonals: ``diagonals[i]`` holds the entries L[k+i, k] for k = 0..p-i-1,
so ``diagonals[0]`` is the main diagonal (positive) and ``diagonals[i]``
the i-th subdiagonal.  The equivalent regression form splits L into a unit
lower-triangular matrix and innovation variances, L = diag(lam)^{-1/2} T,
where row t of T holds the negated autoregressive coefficients of variable
t on its predecessors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import InvalidCovarianceError, InvalidFactorError, InvalidModelError

PENALTY_FAMILIES = ("none", "fused", "trend", "hp", "sparse-fused")


def _readonly(a):
    a = np.array(a, dtype=np.float64, order="C", copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class CholFactor:
    """Lower-triangular factor L with Omega = L' L, stored by diagonals."""

    diagonals: tuple

    def __post_init__(self):
        diags = tuple(_readonly(d) for d in self.diagonals)
        object.__setattr__(self, "diagonals", diags)
        p = len(diags)
        if p == 0:
            raise InvalidFactorError("factor must have at least one diagonal")
        for i, d in enumerate(diags):
            if d.ndim != 1 or d.shape[0] != p - i:
                raise InvalidFactorError(
                    f"diagonal {i} must have length {p - i}, got shape {d.shape}"
                )
            if not np.all(np.isfinite(d)):
                raise InvalidFactorError(f"diagonal {i} contains non-finite entries")
        if np.any(diags[0] <= 0):
            raise InvalidFactorError("main diagonal entries must be strictly positive")

    @property
    def p(self):
        return len(self.diagonals)

    def subdiagonal(self, i):
        return self.diagonals[i]

    def dense(self):
        """Assemble the dense p x p lower-triangular matrix."""
        p = self.p
        out = np.zeros((p, p))
        for i, d in enumerate(self.diagonals):
            out[np.arange(p - i) + i, np.arange(p - i)] = d
        return out

    @classmethod
    def from_dense(cls, mat):
        mat = np.asarray(mat, dtype=np.float64)
        p = mat.shape[0]
        if mat.ndim != 2 or mat.shape[1] != p:
            raise InvalidFactorError(f"expected a square matrix, got shape {mat.shape}")
        if np.any(np.triu(mat, 1) != 0):
            raise InvalidFactorError("matrix has nonzero entries above the diagonal")
        return cls(tuple(np.diag(mat, -i).copy() for i in range(p)))

    @classmethod
    def identity(cls, p):
        return cls(tuple(np.ones(p - i) if i == 0 else np.zeros(p - i) for i in range(p)))


@dataclass(frozen=True)
class ModifiedChol:
    """Unit lower-triangular T and innovation variances lam, Omega = T' diag(lam)^{-1} T."""

    T: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        T = _readonly(self.T)
        lam = _readonly(self.lam)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "lam", lam)
        p = T.shape[0]
        if T.ndim != 2 or T.shape[1] != p:
            raise InvalidModelError(f"T must be square, got shape {T.shape}")
        if lam.shape != (p,):
            raise InvalidModelError(f"lam must have shape ({p},), got {lam.shape}")
        if not (np.all(np.isfinite(T)) and np.all(np.isfinite(lam))):
            raise InvalidModelError("non-finite entries in T or lam")
        if np.any(lam <= 0):
            raise InvalidModelError("innovation variances must be strictly positive")
        if np.any(np.diag(T) != 1.0):
            raise InvalidModelError("T must have a unit diagonal")
        if np.any(np.triu(T, 1) != 0):
            raise InvalidModelError("T has nonzero entries above the diagonal")

    @property
    def p(self):
        return self.T.shape[0]

    def subdiagonal(self, i):
        return np.diag(self.T, -i).copy()


@dataclass(frozen=True)
class SampleCov:
    """Sample covariance S, optionally carrying the n x p data it came from.

    S is symmetrized on ingestion, (S + S') / 2, to absorb round-trip noise;
    the diagonal must be strictly positive.
    """

    S: np.ndarray
    data: np.ndarray = None
    n: int = None

    def __post_init__(self):
        S = np.asarray(self.S, dtype=np.float64)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise InvalidCovarianceError(f"S must be square, got shape {S.shape}")
        if not np.all(np.isfinite(S)):
            raise InvalidCovarianceError("S contains non-finite entries")
        S = _readonly((S + S.T) / 2.0)
        object.__setattr__(self, "S", S)
        if np.any(np.diag(S) <= 0):
            bad = int(np.argmin(np.diag(S)))
            raise InvalidCovarianceError(
                f"S has a nonpositive diagonal entry at index {bad}"
            )
        if self.data is not None:
            data = _readonly(self.data)
            if data.ndim != 2 or data.shape[1] != S.shape[0]:
                raise InvalidCovarianceError(
                    f"data shape {data.shape} inconsistent with p = {S.shape[0]}"
                )
            object.__setattr__(self, "data", data)
            object.__setattr__(self, "n", data.shape[0])
        elif self.n is not None:
            object.__setattr__(self, "n", int(self.n))

    @property
    def p(self):
        return self.S.shape[0]

    @classmethod
    def from_data(cls, data, center=True):
        """Build S = X'X / n from n x p data, centering columns by default."""
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 2:
            raise InvalidCovarianceError(f"data must be 2-D, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise InvalidCovarianceError("data contains non-finite entries")
        n = data.shape[0]
        X = data - data.mean(axis=0) if center else data
        return cls(S=X.T @ X / n, data=X)


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty family and weights applied to the subdiagonals of L.

    families:
      none         no penalty (maximum likelihood)
      fused        lam * sum_i sum_j |L^i_j - L^i_{j-1}|
      trend        lam * sum_i ||D2 L^i||_1       (second differences)
      hp           lam * sum_i ||D2 L^i||_2^2
      sparse-fused fused at lam plus lam1 * sum_i ||L^i||_1
    The main diagonal is never penalized.
    """

    family: str
    lam: float = 0.0
    lam1: float = 0.0

    def __post_init__(self):
        if self.family not in PENALTY_FAMILIES:
            raise ValueError(
                f"unknown penalty family {self.family!r}; expected one of {PENALTY_FAMILIES}"
            )
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "lam1", float(self.lam1))
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValueError("lam must be finite and nonnegative")
        if not np.isfinite(self.lam1) or self.lam1 < 0:
            raise ValueError("lam1 must be finite and nonnegative")
        if self.family == "none" and self.lam != 0.0:
            raise ValueError("family 'none' takes no lam weight")
        if self.family != "sparse-fused" and self.lam1 != 0.0:
            raise ValueError("lam1 is only meaningful for the sparse-fused family")


@dataclass(frozen=True)
class FitConfig:
    """Solver settings: stopping rule, band limit, path selection, init."""

    epsilon: float = 1e-4
    max_iter: int = 500
    band: object = "all"
    path: str = "auto"
    init: object = "diag"

    def __post_init__(self):
        if not (np.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ValueError("epsilon must be finite and nonnegative")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.band != "all" and (not isinstance(self.band, (int, np.integer)) or self.band < 1):
            raise ValueError("band must be 'all' or an integer >= 1")
        if self.path not in ("auto", "dense", "lowrank"):
            raise ValueError("path must be one of 'auto', 'dense', 'lowrank'")

    def band_for(self, p):
        if self.band == "all":
            return p - 1
        return min(int(self.band), p - 1)


def to_modified(L):
    """Split L into the regression form (T, lam).

    T = diag(lam)^{1/2} L is unit lower triangular and lam_k = 1 / L[k,k]^2
    are the innovation variances; row t of T stores the negated regression
    coefficients of variable t on variables 1..t-1.
    """
    Ld = L.dense()
    d = np.diag(Ld)
    T = Ld / d[:, None]
    lam = 1.0 / d**2
    return ModifiedChol(T=T, lam=lam)


def from_modified(m):
    """Rebuild L = diag(lam)^{-1/2} T from the regression form."""
    Ld = m.T / np.sqrt(m.lam)[:, None]
    p = m.p
    return CholFactor(tuple(np.diag(Ld, -i).copy() for i in range(p)))


def precision(L):
    """Omega = L' L."""
    Ld = L.dense()
    return Ld.T @ Ld


def covariance(L):
    """Sigma = (L' L)^{-1}, computed by triangular solves, never an explicit inverse."""
    Linv = solve_triangular(L.dense(), np.eye(L.p), lower=True)
    return Linv @ Linv.T
