"""Per-diagonal quadratic coefficients of the Gaussian loss, and solver state.

Writing V = vec(L) column-major, tr(L S L') = V' (S kron I_p) V.  Grouping V
by diagonals of L, the block Gram matrix has diagonal blocks
C_i = diag(S_11, ..., S_{p-i,p-i}) and the cross-coupling of diagonal i with
the rest collapses to the vector y_i below, so the loss restricted to
diagonal i is x' C_i x + 2 x' y_i up to a constant.  The Kronecker product
is never materialized here; y_i comes out of banded index arithmetic or,
on the low-rank path, out of a running residual product with the data.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidCovarianceError
from .model import CholFactor

LOG_2PI = float(np.log(2.0 * np.pi))


def _diags(L):
    """Accept a CholFactor or a plain sequence of per-diagonal arrays."""
    if isinstance(L, CholFactor):
        return L.diagonals
    return tuple(np.asarray(d, dtype=np.float64) for d in L)


def compute_ci(S, i):
    """Quadratic coefficients for diagonal i: the first p-i entries of diag(S)."""
    d = np.diag(np.asarray(S, dtype=np.float64))
    if np.any(d <= 0):
        raise InvalidCovarianceError("S has a nonpositive diagonal entry")
    p = d.shape[0]
    if not 0 <= i < p:
        raise ValueError(f"diagonal index {i} out of range for p = {p}")
    return d[: p - i].copy()


def compute_yi(S, L, i, band=None):
    """Linear coefficients for diagonal i given the other diagonals of L.

    Entry a couples L[a+i, a] with the other in-band entries of row a+i:
    y_i[a] = sum over j != i of S[a, a+i-j] * L^j[a+i-j], which equals the
    i-th subdiagonal of L S minus C_i * L^i.  Cost O(p * band).
    """
    S = np.asarray(S, dtype=np.float64)
    diags = _diags(L)
    p = S.shape[0]
    if band is None:
        band = p - 1
    y = np.zeros(p - i)
    for j in range(0, min(band, p - 1) + 1):
        if j == i:
            continue
        dj = diags[j]
        a0 = max(0, j - i)
        if a0 >= p - i:
            continue
        aa = np.arange(a0, p - i)
        y[aa] += S[aa, aa + i - j] * dj[aa + i - j]
    return y


def penalty_of_diagonal(d, penalty):
    """Penalty contribution of one subdiagonal."""
    family = penalty.family
    if family == "none":
        return 0.0
    if family == "fused":
        return float(penalty.lam * np.abs(np.diff(d)).sum())
    if family == "trend":
        return float(penalty.lam * np.abs(np.diff(d, 2)).sum())
    if family == "hp":
        return float(penalty.lam * (np.diff(d, 2) ** 2).sum())
    if family == "sparse-fused":
        return float(
            penalty.lam * np.abs(np.diff(d)).sum() + penalty.lam1 * np.abs(d).sum()
        )
    raise ValueError(f"unknown penalty family {family!r}")


def penalty_value(L, penalty):
    """P(L): the penalty applied to subdiagonals i >= 1 (never the diagonal)."""
    diags = _diags(L)
    if penalty.family == "none":
        return 0.0
    return float(sum(penalty_of_diagonal(d, penalty) for d in diags[1:]))


def gaussian_loss(S, L):
    """Unpenalized loss tr(Omega S) - log|Omega| with Omega = L'L."""
    S = np.asarray(S, dtype=np.float64)
    Ld = L.dense() if isinstance(L, CholFactor) else CholFactor(_diags(L)).dense()
    tr = float(((Ld @ S) * Ld).sum())
    logdet = 2.0 * float(np.log(np.diag(Ld)).sum())
    return tr - logdet


def objective(S, L, penalty):
    """Q(L) = tr(L S L') - 2 sum log L_kk + penalty."""
    return gaussian_loss(S, L) + penalty_value(L, penalty)


def gaussian_loglik(S, L, n):
    """Exact Gaussian log-likelihood of n centered observations with precision L'L.

    Equals (n/2) (log|Omega| - tr(Omega S)) - (n p / 2) log(2 pi); the
    unpenalized fit criterion is -2/n times this up to the additive constant.
    """
    p = np.asarray(S).shape[0]
    return -0.5 * n * gaussian_loss(S, L) - 0.5 * n * p * LOG_2PI


class DenseState:
    """Sweep state on the dense path: keeps W = L S up to date, O(p^2) per block."""

    path = "dense"

    def __init__(self, S, diags, band):
        self.S = np.ascontiguousarray(S, dtype=np.float64)
        self.p = self.S.shape[0]
        self.sdiag = np.diag(self.S).copy()
        if np.any(self.sdiag <= 0):
            raise InvalidCovarianceError("S has a nonpositive diagonal entry")
        self.band = band
        self.diags = [np.asarray(d, dtype=np.float64).copy() for d in diags]
        self.refresh()

    def refresh(self):
        p = self.p
        self.W = np.zeros((p, p))
        for i in range(min(self.band, p - 1) + 1):
            d = self.diags[i]
            if np.any(d != 0):
                self.W[i:, :] += d[:, None] * self.S[: p - i, :]

    def y(self, i):
        p = self.p
        idx = np.arange(p - i)
        return self.W[idx + i, idx] - self.sdiag[: p - i] * self.diags[i]

    def set_diag(self, i, xnew):
        delta = xnew - self.diags[i]
        self.W[i:, :] += delta[:, None] * self.S[: self.p - i, :]
        self.diags[i] = xnew

    def tr_term(self):
        total = 0.0
        for i in range(min(self.band, self.p - 1) + 1):
            idx = np.arange(self.p - i)
            total += float(np.dot(self.W[idx + i, idx], self.diags[i]))
        return total


class LowRankState:
    """Sweep state on the low-rank path for S = X'X / n with n < p.

    Maintains the residual product R = L X' (p x n); a single-diagonal change
    updates R in O(n p) and y_i is recovered as the i-th subdiagonal of
    R X / n minus C_i * L^i, so a full sweep costs O(n p^2).
    """

    path = "lowrank"

    def __init__(self, data, diags, band):
        X = np.asarray(data, dtype=np.float64)
        self.n, self.p = X.shape
        self.XT = np.ascontiguousarray(X.T)
        self.sdiag = (self.XT**2).sum(axis=1) / self.n
        if np.any(self.sdiag <= 0):
            raise InvalidCovarianceError("data has a zero-variance column")
        self.band = band
        self.diags = [np.asarray(d, dtype=np.float64).copy() for d in diags]
        self.refresh()

    def refresh(self):
        p = self.p
        self.R = np.zeros((p, self.n))
        for i in range(min(self.band, p - 1) + 1):
            d = self.diags[i]
            if np.any(d != 0):
                self.R[i:, :] += d[:, None] * self.XT[: p - i, :]

    def y(self, i):
        p = self.p
        raw = np.einsum("as,as->a", self.R[i:, :], self.XT[: p - i, :])
        return raw / self.n - self.sdiag[: p - i] * self.diags[i]

    def set_diag(self, i, xnew):
        delta = xnew - self.diags[i]
        self.R[i:, :] += delta[:, None] * self.XT[: self.p - i, :]
        self.diags[i] = xnew

    def tr_term(self):
        return float((self.R**2).sum()) / self.n
