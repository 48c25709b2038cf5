"""Exact solvers for the per-diagonal block problems.

Every subdiagonal update of the coordinate solver minimizes
    h(x) = x' diag(C) x + 2 x' y + penalty(x)
with C > 0 coming from diag(S); the main-diagonal update instead carries
the log-barrier -2 sum log x_k and has a closed form.  All solvers return
the exact minimizer (to floating-point accuracy), which is what makes the
outer block descent monotone.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solveh_banded

from ._kernels import fused_dp
from .errors import NumericalError


def _check_cy(C, y):
    C = np.asarray(C, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if C.ndim != 1 or C.shape != y.shape:
        raise ValueError(f"C and y must be 1-D with equal length, got {C.shape} and {y.shape}")
    if np.any(C <= 0):
        raise ValueError("C must be strictly positive")
    if not (np.all(np.isfinite(C)) and np.all(np.isfinite(y))):
        raise ValueError("C and y must be finite")
    return C, y


def solve_diagonal(C, y):
    """Minimize x' C x + 2 x' y - 2 sum log x_k over x > 0, coordinatewise.

    Stationarity gives C_k x^2 + y_k x - 1 = 0 with a unique positive root;
    the first variable regresses on nothing, so y[0] is structurally zero
    and the root reduces to x[0] = 1/sqrt(C[0]).
    """
    C, y = _check_cy(C, y)
    disc = np.sqrt(y * y + 4.0 * C)
    # the two forms are equal; pick the cancellation-free one per sign
    # (the discarded where-branch may divide by zero, which is harmless)
    with np.errstate(divide="ignore"):
        x = np.where(y > 0, 2.0 / (y + disc), (disc - y) / (2.0 * C))
    x[0] = 1.0 / np.sqrt(C[0])
    return x


def solve_fused(C, y, lam):
    """Minimize x' C x + 2 x' y + lam * sum_j |x_j - x_{j-1}| exactly.

    Equivalent to weighted total-variation denoising of -y/C with weights C.
    Solved by an exact dynamic program over the piecewise-linear derivative
    of the forward messages; O(m) typical, O(m^2) worst case.
    """
    C, y = _check_cy(C, y)
    if lam < 0 or not np.isfinite(lam):
        raise ValueError("lam must be finite and nonnegative")
    return fused_dp(C, y, float(lam), 0.0)


def solve_sparse_fused(C, y, lam, lam1):
    """Minimize x' C x + 2 x' y + lam * TV(x) + lam1 * ||x||_1 exactly.

    Same dynamic program as solve_fused with an extra derivative jump at
    zero per coordinate.  Note the componentwise threshold shortcut
    (sparse_threshold after solve_fused) is only guaranteed to land on this
    minimizer when the weights in C are all equal.
    """
    C, y = _check_cy(C, y)
    if lam < 0 or lam1 < 0:
        raise ValueError("lam and lam1 must be nonnegative")
    return fused_dp(C, y, float(lam), float(lam1))


def sparse_threshold(x, C, lam1):
    """Componentwise soft threshold of a smoothed block at lam1 / (2 C_k)."""
    x = np.asarray(x, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    thr = lam1 / (2.0 * C)
    return np.sign(x) * np.maximum(np.abs(x) - thr, 0.0)


def solve_hp(C, y, lam):
    """Minimize x' C x + 2 x' y + lam * ||D2 x||_2^2 by one banded solve.

    Stationarity is (diag(C) + lam D2'D2) x = -y with a pentadiagonal
    positive-definite system matrix; D2 is the (1, -2, 1) second-difference
    operator.
    """
    C, y = _check_cy(C, y)
    if lam < 0 or not np.isfinite(lam):
        raise ValueError("lam must be finite and nonnegative")
    m = C.shape[0]
    if m <= 2 or lam == 0.0:
        return -y / C
    d0 = np.zeros(m)
    d0[: m - 2] += 1.0
    d0[1 : m - 1] += 4.0
    d0[2:] += 1.0
    off1 = np.zeros(m - 1)
    off1[: m - 2] += -2.0
    off1[1 : m - 1] += -2.0
    ab = np.zeros((3, m))
    ab[0, 2:] = lam  # second superdiagonal of lam * D2'D2 is all ones
    ab[1, 1:] = lam * off1
    ab[2, :] = C + lam * d0
    return solveh_banded(ab, -y, lower=False)


def _d2t(v, m):
    out = np.zeros(m)
    out[: m - 2] += v
    out[1 : m - 1] -= 2.0 * v
    out[2:] += v
    return out


def _d2(v):
    return v[:-2] - 2.0 * v[1:-1] + v[2:]


def solve_trend(C, y, lam, gap_tol=1e-11):
    """Minimize x' C x + 2 x' y + lam * ||D2 x||_1 via its box-constrained dual.

    With nu dual to the second differences, the problem is
        minimize (y + D2' nu)' C^{-1} (y + D2' nu)  s.t.  |nu| <= lam/2,
    a smooth QP with a pentadiagonal Hessian, solved by a log-barrier
    Newton method; each step is one symmetric banded solve.  The primal is
    recovered as x = -C^{-1} (y + D2' nu); the duality gap at exit is below
    gap_tol * max(1, |value|).
    """
    C, y = _check_cy(C, y)
    if lam < 0 or not np.isfinite(lam):
        raise ValueError("lam must be finite and nonnegative")
    m = C.shape[0]
    if m <= 2 or lam == 0.0:
        return -y / C
    k = m - 2
    eta = lam / 2.0
    cinv = 1.0 / C

    main = cinv[:k] + 4.0 * cinv[1 : k + 1] + cinv[2 : k + 2]
    off1 = -2.0 * (cinv[1:k] + cinv[2 : k + 1])
    off2 = cinv[2:k]

    def phi(nu):
        r = y + _d2t(nu, m)
        return float(r @ (cinv * r))

    def grad_phi(nu):
        r = y + _d2t(nu, m)
        return 2.0 * _d2(cinv * r)

    nu = np.zeros(k)
    t = 1.0
    mu = 25.0
    while True:
        for _ in range(60):
            gm = eta - nu
            gp = eta + nu
            grad = t * grad_phi(nu) + 1.0 / gm - 1.0 / gp
            hdiag = 1.0 / gm**2 + 1.0 / gp**2
            if k <= 2:
                H = 2.0 * t * (np.diag(main) if k == 1 else
                               np.array([[main[0], off1[0]], [off1[0], main[1]]]))
                H = H + np.diag(hdiag)
                step = np.linalg.solve(H, -grad)
            else:
                ab = np.zeros((3, k))
                ab[0, 2:] = 2.0 * t * off2
                ab[1, 1:] = 2.0 * t * off1
                ab[2, :] = 2.0 * t * main + hdiag
                step = solveh_banded(ab, -grad, lower=False)
            decrement = float(-grad @ step)
            if not np.isfinite(decrement):
                raise NumericalError("trend solver produced a non-finite Newton step")
            if decrement / 2.0 <= 1e-13:
                break
            # stay strictly inside the box, then backtrack on the barrier value
            alpha = 1.0
            neg = step < 0
            pos = step > 0
            if np.any(neg):
                alpha = min(alpha, 0.99 * np.min(gp[neg] / -step[neg]))
            if np.any(pos):
                alpha = min(alpha, 0.99 * np.min(gm[pos] / step[pos]))
            psi0 = t * phi(nu) - np.log(gm).sum() - np.log(gp).sum()
            gd = float(grad @ step)
            accepted = False
            for _ in range(60):
                cand = nu + alpha * step
                psic = t * phi(cand) - np.log(eta - cand).sum() - np.log(eta + cand).sum()
                if psic <= psi0 + 0.25 * alpha * gd:
                    accepted = True
                    break
                alpha /= 2.0
            if not accepted:
                break  # at numerical stationarity for this t
            nu = nu + alpha * step
        if 2.0 * k / t <= gap_tol * max(1.0, abs(phi(nu))):
            break
        t *= mu
    return -cinv * (y + _d2t(nu, m))


def solve_subdiagonal(C, y, penalty):
    """Dispatch the exact block solver for a subdiagonal under the given penalty."""
    if penalty.family == "none":
        C, y = _check_cy(C, y)
        return -y / C
    if penalty.family == "fused":
        return solve_fused(C, y, penalty.lam)
    if penalty.family == "sparse-fused":
        return solve_sparse_fused(C, y, penalty.lam, penalty.lam1)
    if penalty.family == "trend":
        return solve_trend(C, y, penalty.lam)
    if penalty.family == "hp":
        return solve_hp(C, y, penalty.lam)
    raise ValueError(f"unknown penalty family {penalty.family!r}")
