"""Inner numeric kernels, jitted when numba is available.

The fused DP, the pentadiagonal solver behind the trend and hp block
updates, and the whole-sweep engines below are the hot loops: per-sweep
cost is O(p^3) on the dense path and O(n p^2) on the low-rank path.
Everything here is plain-array code that also runs (slowly) under
CPython if numba is missing; the outer driver falls back to the
vectorized sweep in that case.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


FAMILY_CODES = {"none": 0, "fused": 1, "trend": 2, "hp": 3, "sparse-fused": 4}

# sentinel returned by the sweep kernels when a block update would
# increase the objective beyond tolerance (a solver bug, not roundoff)
SWEEP_FAILED = -1.0


@njit(cache=True)
def fused_dp(C, y, lam, s):
    """Exact minimizer of sum_k [C_k x_k^2 + 2 y_k x_k + s |x_k|] + lam sum |x_k - x_{k-1}|.

    Dynamic program over the derivative of the running message function,
    kept as a piecewise-linear nondecreasing map (jumps allowed at knots,
    which is how the |x_k| kink enters).  Each step clips the derivative at
    -lam/+lam, records the clip points for the backward pass, and absorbs
    the next coordinate's quadratic.  C must be strictly positive; lam and
    s nonnegative.
    """
    m = C.shape[0]
    x = np.empty(m)
    cap = 3 * m + 8
    # knots kt[0..N-1]; segment j in [0, N] covers (kt[j-1], kt[j]) with
    # derivative ka[j] * t + kb[j]; boundary knots are +-inf implicitly.
    kt = np.empty(cap)
    ka = np.empty(cap + 1)
    kb = np.empty(cap + 1)
    kt2 = np.empty(cap)
    ka2 = np.empty(cap + 1)
    kb2 = np.empty(cap + 1)
    bl = np.empty(m)
    bu = np.empty(m)

    if s > 0.0:
        N = 1
        kt[0] = 0.0
        ka[0] = 2.0 * C[0]
        kb[0] = 2.0 * y[0] - s
        ka[1] = 2.0 * C[0]
        kb[1] = 2.0 * y[0] + s
    else:
        N = 0
        ka[0] = 2.0 * C[0]
        kb[0] = 2.0 * y[0]

    for t in range(1, m):
        # leftmost crossing of -lam
        jl = 0
        bm = 0.0
        for j in range(N + 1):
            if j > 0 and ka[j] * kt[j - 1] + kb[j] >= -lam:
                bm = kt[j - 1]
                jl = j
                break
            if j < N:
                if ka[j] * kt[j] + kb[j] >= -lam:
                    bm = (-lam - kb[j]) / ka[j]
                    if j > 0 and bm < kt[j - 1]:
                        bm = kt[j - 1]
                    if bm > kt[j]:
                        bm = kt[j]
                    jl = j
                    break
            else:
                bm = (-lam - kb[j]) / ka[j]
                if j > 0 and bm < kt[j - 1]:
                    bm = kt[j - 1]
                jl = j
        # rightmost crossing of +lam
        jr = N
        bp = 0.0
        for j in range(N, -1, -1):
            if j < N and ka[j] * kt[j] + kb[j] <= lam:
                bp = kt[j]
                jr = j
                break
            if j > 0:
                if ka[j] * kt[j - 1] + kb[j] <= lam:
                    bp = (lam - kb[j]) / ka[j]
                    if j < N and bp > kt[j]:
                        bp = kt[j]
                    if bp < kt[j - 1]:
                        bp = kt[j - 1]
                    jr = j
                    break
            else:
                bp = (lam - kb[j]) / ka[j]
                if j < N and bp > kt[j]:
                    bp = kt[j]
                jr = j
        bl[t] = bm
        bu[t] = bp

        # rebuild the clipped derivative: flat tails at -lam / +lam
        if jl > jr:
            # both crossings hit the same knot: empty interior
            N2 = 1
            kt2[0] = bm
            ka2[0] = 0.0
            kb2[0] = -lam
            ka2[1] = 0.0
            kb2[1] = lam
        else:
            N2 = jr - jl + 2
            kt2[0] = bm
            for j in range(jl, jr):
                kt2[j - jl + 1] = kt[j]
            kt2[N2 - 1] = bp
            ka2[0] = 0.0
            kb2[0] = -lam
            for j in range(jl, jr + 1):
                ka2[j - jl + 1] = ka[j]
                kb2[j - jl + 1] = kb[j]
            ka2[N2] = 0.0
            kb2[N2] = lam
        kt, kt2 = kt2, kt
        ka, ka2 = ka2, ka
        kb, kb2 = kb2, kb
        N = N2

        # absorb the quadratic of coordinate t
        for j in range(N + 1):
            ka[j] += 2.0 * C[t]
            kb[j] += 2.0 * y[t]
        if s > 0.0:
            # absorb s |x_t|: -s left of zero, +s right of zero
            q = 0
            while q < N and kt[q] < 0.0:
                q += 1
            if q < N and kt[q] == 0.0:
                for j in range(q + 1):
                    kb[j] -= s
                for j in range(q + 1, N + 1):
                    kb[j] += s
            else:
                # zero sits strictly inside segment q: split it
                for j in range(N, q, -1):
                    kt[j] = kt[j - 1]
                kt[q] = 0.0
                for j in range(N + 1, q, -1):
                    ka[j] = ka[j - 1]
                    kb[j] = kb[j - 1]
                for j in range(q + 1):
                    kb[j] -= s
                for j in range(q + 1, N + 2):
                    kb[j] += s
                N += 1

    # root of the final derivative
    root = 0.0
    for j in range(N + 1):
        if j > 0 and ka[j] * kt[j - 1] + kb[j] >= 0.0:
            root = kt[j - 1]
            break
        if j < N:
            if ka[j] * kt[j] + kb[j] >= 0.0:
                root = -kb[j] / ka[j]
                if j > 0 and root < kt[j - 1]:
                    root = kt[j - 1]
                if root > kt[j]:
                    root = kt[j]
                break
        else:
            root = -kb[j] / ka[j]
            if j > 0 and root < kt[j - 1]:
                root = kt[j - 1]
    x[m - 1] = root
    for t in range(m - 1, 0, -1):
        xv = x[t]
        if xv < bl[t]:
            xv = bl[t]
        elif xv > bu[t]:
            xv = bu[t]
        x[t - 1] = xv
    return x


@njit(cache=True)
def pentasolve(d0, d1, d2, b, x):
    """Solve A x = b for symmetric positive-definite pentadiagonal A.

    d0, d1, d2 are the main, first and second subdiagonals.  LDL'
    factorization without pivoting; returns False if a pivot is not
    strictly positive (A not PD to working precision).
    """
    m = d0.shape[0]
    d = np.empty(m)
    l1 = np.empty(m)
    l2 = np.empty(m)
    for i in range(m):
        a0 = d0[i]
        if i >= 1:
            a0 -= l1[i - 1] * l1[i - 1] * d[i - 1]
        if i >= 2:
            a0 -= l2[i - 2] * l2[i - 2] * d[i - 2]
        if not np.isfinite(a0) or a0 <= 0.0:
            return False
        d[i] = a0
        if i + 1 < m:
            a1 = d1[i]
            if i >= 1:
                a1 -= l2[i - 1] * l1[i - 1] * d[i - 1]
            l1[i] = a1 / a0
        if i + 2 < m:
            l2[i] = d2[i] / a0
    for i in range(m):
        z = b[i]
        if i >= 1:
            z -= l1[i - 1] * x[i - 1]
        if i >= 2:
            z -= l2[i - 2] * x[i - 2]
        x[i] = z
    for i in range(m):
        x[i] /= d[i]
    for i in range(m - 1, -1, -1):
        z = x[i]
        if i + 1 < m:
            z -= l1[i] * x[i + 1]
        if i + 2 < m:
            z -= l2[i] * x[i + 2]
        x[i] = z
    return True


@njit(cache=True)
def hp_solve(C, y, lam, x):
    """Write the minimizer of x'Cx + 2x'y + lam ||D2 x||^2 into x."""
    m = C.shape[0]
    if m <= 2 or lam == 0.0:
        for i in range(m):
            x[i] = -y[i] / C[i]
        return True
    d0 = np.zeros(m)
    d1 = np.zeros(m - 1)
    d2 = np.zeros(m - 2)
    for j in range(m - 2):
        d0[j] += lam
        d0[j + 1] += 4.0 * lam
        d0[j + 2] += lam
        d1[j] -= 2.0 * lam
        d1[j + 1] -= 2.0 * lam
        d2[j] += lam
    for i in range(m):
        d0[i] += C[i]
    b = np.empty(m)
    for i in range(m):
        b[i] = -y[i]
    return pentasolve(d0, d1, d2, b, x)


@njit(cache=True)
def trend_active_set(C, y, lam, tol_rel, x, nu, warm):
    """Write the minimizer of x'Cx + 2x'y + lam ||D2 x||_1 into x.

    Works on the box-constrained dual: minimize (y + D2'nu)' C^{-1}
    (y + D2'nu) over |nu_j| <= lam/2, a quadratic with a constant
    pentadiagonal Hessian.  Solved by a primal active-set method whose
    subproblems stay pentadiagonal (a subset of a banded index set keeps
    the band), so each step is one O(m) solve.  nu carries the dual
    across calls; with warm=True the previous solution seeds the active
    set and typically one or two steps suffice.  Returns False only on
    a numerical breakdown.
    """
    m = C.shape[0]
    if m <= 2 or lam == 0.0:
        for i in range(m):
            x[i] = -y[i] / C[i]
        return True
    k = m - 2
    eta = lam / 2.0
    cinv = np.empty(m)
    for i in range(m):
        cinv[i] = 1.0 / C[i]
    # constant dual Hessian 2 D2 C^{-1} D2'
    hm = np.empty(k)
    h1 = np.empty(max(k - 1, 1))
    h2 = np.empty(max(k - 2, 1))
    for j in range(k):
        hm[j] = 2.0 * (cinv[j] + 4.0 * cinv[j + 1] + cinv[j + 2])
    for j in range(k - 1):
        h1[j] = -4.0 * (cinv[j + 1] + cinv[j + 2])
    for j in range(k - 2):
        h2[j] = 2.0 * cinv[j + 2]

    r = np.empty(m)
    grad = np.empty(k)
    clamped = np.empty(k, dtype=np.bool_)
    freeidx = np.empty(k, dtype=np.int64)
    f0 = np.empty(k)
    f1 = np.empty(k)
    f2 = np.empty(k)
    rhs = np.empty(k)
    d = np.empty(k)

    # gradient at nu = 0 sets the KKT scale
    g0 = 0.0
    for j in range(k):
        g = 2.0 * (cinv[j] * y[j] - 2.0 * cinv[j + 1] * y[j + 1]
                   + cinv[j + 2] * y[j + 2])
        a = abs(g)
        if a > g0:
            g0 = a
    tolg = tol_rel * (1.0 if g0 < 1.0 else g0)

    if not warm:
        # seed with the clipped unconstrained dual minimizer
        for j in range(k):
            rhs[j] = -2.0 * (cinv[j] * y[j] - 2.0 * cinv[j + 1] * y[j + 1]
                             + cinv[j + 2] * y[j + 2])
        if not pentasolve(hm, h1, h2, rhs, nu):
            return False
    for j in range(k):
        if nu[j] > eta:
            nu[j] = eta
        elif nu[j] < -eta:
            nu[j] = -eta

    for j in range(k):
        clamped[j] = (nu[j] == eta) or (nu[j] == -eta)

    # each multiplier drop may take O(k) partial steps to settle, so the
    # round cap is quadratic; warm starts finish in one or two rounds
    for _ in range(4 * k * k + 100):
        for i in range(m):
            r[i] = y[i]
        for j in range(k):
            r[j] += nu[j]
            r[j + 1] -= 2.0 * nu[j]
            r[j + 2] += nu[j]
        for j in range(k):
            grad[j] = 2.0 * (cinv[j] * r[j] - 2.0 * cinv[j + 1] * r[j + 1]
                             + cinv[j + 2] * r[j + 2])

        # assemble the free subproblem
        nf = 0
        for j in range(k):
            if not clamped[j]:
                freeidx[nf] = j
                nf += 1
        if nf == 0:
            # all at bounds; drop the worst wrongly-signed multiplier if any
            worst = -1
            wv = tolg
            for j in range(k):
                # retaining sign is grad <= 0 at +eta, grad >= 0 at -eta
                v = grad[j] if nu[j] > 0.0 else -grad[j]
                if v > wv:
                    wv = v
                    worst = j
            if worst < 0:
                break
            clamped[worst] = False
            continue
        for a in range(nf):
            j = freeidx[a]
            f0[a] = hm[j]
            rhs[a] = -grad[j]
        for a in range(nf - 1):
            # original indices 2 apart land on the first compressed off-diagonal
            gj = freeidx[a + 1] - freeidx[a]
            if gj == 1:
                f1[a] = h1[freeidx[a]]
            elif gj == 2:
                f1[a] = h2[freeidx[a]]
            else:
                f1[a] = 0.0
        for a in range(nf - 2):
            f2[a] = h2[freeidx[a]] if freeidx[a + 2] - freeidx[a] == 2 else 0.0
        if not pentasolve(f0[:nf], f1[: max(nf - 1, 1)], f2[: max(nf - 2, 1)],
                          rhs[:nf], d[:nf]):
            return False

        # longest feasible fraction of the Newton step
        alpha = 1.0
        blocker = -1
        blocker_hi = False
        for a in range(nf):
            j = freeidx[a]
            if d[a] > 0.0 and nu[j] + d[a] > eta:
                step = (eta - nu[j]) / d[a]
                if step < alpha:
                    alpha = step
                    blocker = j
                    blocker_hi = True
            elif d[a] < 0.0 and nu[j] + d[a] < -eta:
                step = (-eta - nu[j]) / d[a]
                if step < alpha:
                    alpha = step
                    blocker = j
                    blocker_hi = False
        if not np.isfinite(alpha):
            return False
        for a in range(nf):
            j = freeidx[a]
            nu[j] += alpha * d[a]
            if nu[j] >= eta:
                nu[j] = eta
            elif nu[j] <= -eta:
                nu[j] = -eta
        if blocker >= 0:
            # pin exactly; the += above can round to just inside the bound
            nu[blocker] = eta if blocker_hi else -eta
            clamped[blocker] = True
            continue

        # full step taken: check stationarity of free coords and the
        # multiplier signs of clamped ones
        for i in range(m):
            r[i] = y[i]
        for j in range(k):
            r[j] += nu[j]
            r[j + 1] -= 2.0 * nu[j]
            r[j + 2] += nu[j]
        for j in range(k):
            grad[j] = 2.0 * (cinv[j] * r[j] - 2.0 * cinv[j + 1] * r[j + 1]
                             + cinv[j + 2] * r[j + 2])
        worst = -1
        wv = tolg
        done = True
        for a in range(nf):
            if abs(grad[freeidx[a]]) > tolg:
                done = False
        for j in range(k):
            if clamped[j]:
                v = grad[j] if nu[j] > 0.0 else -grad[j]
                if v > wv:
                    wv = v
                    worst = j
        if done and worst < 0:
            break
        if worst >= 0:
            clamped[worst] = False

    for i in range(m):
        r[i] = y[i]
    for j in range(k):
        r[j] += nu[j]
        r[j + 1] -= 2.0 * nu[j]
        r[j + 2] += nu[j]
    for i in range(m):
        x[i] = -cinv[i] * r[i]
    return True


@njit(cache=True)
def _solve_block(i, C, y, fam, lam, lam1, trend_tol, x, nu, warm):
    """Exact block minimizer for diagonal i written into x; False on failure."""
    m = C.shape[0]
    if i == 0:
        for a in range(m):
            yv = y[a]
            c = C[a]
            if yv > 0.0:
                x[a] = 2.0 / (yv + np.sqrt(yv * yv + 4.0 * c))
            else:
                x[a] = (-yv + np.sqrt(yv * yv + 4.0 * c)) / (2.0 * c)
        return True
    if fam == 0:
        for a in range(m):
            x[a] = -y[a] / C[a]
        return True
    if fam == 1 or fam == 4:
        s = lam1 if fam == 4 else 0.0
        res = fused_dp(C, y, lam, s)
        for a in range(m):
            x[a] = res[a]
        return True
    if fam == 2:
        return trend_active_set(C, y, lam, trend_tol, x, nu, warm)
    return hp_solve(C, y, lam, x)


@njit(cache=True)
def _block_delta(i, C, y, xold, xnew, fam, lam, lam1):
    """Exact change of Q from replacing block i: new minus old."""
    m = C.shape[0]
    delta = 0.0
    for a in range(m):
        delta += (xnew[a] * xnew[a] - xold[a] * xold[a]) * C[a] \
            + 2.0 * (xnew[a] - xold[a]) * y[a]
    if i == 0:
        for a in range(m):
            delta -= 2.0 * (np.log(xnew[a]) - np.log(xold[a]))
        return delta
    if fam == 1 or fam == 4:
        tv = 0.0
        for a in range(1, m):
            tv += abs(xnew[a] - xnew[a - 1]) - abs(xold[a] - xold[a - 1])
        delta += lam * tv
        if fam == 4:
            l1 = 0.0
            for a in range(m):
                l1 += abs(xnew[a]) - abs(xold[a])
            delta += lam1 * l1
    elif fam == 2:
        dd = 0.0
        for a in range(2, m):
            dd += abs(xnew[a] - 2.0 * xnew[a - 1] + xnew[a - 2]) \
                - abs(xold[a] - 2.0 * xold[a - 1] + xold[a - 2])
        delta += lam * dd
    elif fam == 3:
        dd = 0.0
        for a in range(2, m):
            vn = xnew[a] - 2.0 * xnew[a - 1] + xnew[a - 2]
            vo = xold[a] - 2.0 * xold[a - 1] + xold[a - 2]
            dd += vn * vn - vo * vo
        delta += lam * dd
    return delta


@njit(cache=True)
def dense_sweep(W, S, sdiag, flat, offs, band, fam, lam, lam1, trend_tol,
                nubuf, nuoffs, warm):
    """One sweep over diagonals 0..band on the dense path; W = L S in place.

    flat holds the diagonals of L concatenated (diagonal i starts at
    offs[i]); both flat and W are updated.  nubuf/nuoffs/warm carry the
    per-diagonal trend duals between sweeps (unused by other families).
    Returns the max-abs coordinate change, or SWEEP_FAILED if a block
    update would raise the objective.
    """
    p = S.shape[0]
    gap = 0.0
    ybuf = np.empty(p)
    xnew = np.empty(p)
    xold = np.empty(p)
    for i in range(band + 1):
        base = offs[i]
        m = p - i
        for a in range(m):
            xo = flat[base + a]
            xold[a] = xo
            ybuf[a] = W[a + i, a] - sdiag[a] * xo
        if i == 0:
            ybuf[0] = 0.0  # first variable regresses on nothing
        nu = nubuf[nuoffs[i] : nuoffs[i + 1]]
        if not _solve_block(i, sdiag[:m], ybuf[:m], fam, lam, lam1, trend_tol,
                            xnew[:m], nu, warm[i]):
            return SWEEP_FAILED
        warm[i] = True
        delta = _block_delta(i, sdiag[:m], ybuf[:m], xold[:m], xnew[:m], fam, lam, lam1)
        if not np.isfinite(delta) or delta > 1e-6:
            return SWEEP_FAILED
        if delta > 0.0:
            continue  # iterative-solver tie at a stationary block: keep incumbent
        for a in range(m):
            dv = xnew[a] - xold[a]
            if dv != 0.0:
                ad = abs(dv)
                if ad > gap:
                    gap = ad
                flat[base + a] = xnew[a]
                for c in range(p):
                    W[a + i, c] += dv * S[a, c]
    return gap


@njit(cache=True)
def lowrank_sweep(R, XT, sdiag, n, flat, offs, band, fam, lam, lam1, trend_tol,
                  nubuf, nuoffs, warm):
    """One sweep on the low-rank path; R = L X' kept current in place."""
    p = XT.shape[0]
    gap = 0.0
    ybuf = np.empty(p)
    xnew = np.empty(p)
    xold = np.empty(p)
    for i in range(band + 1):
        base = offs[i]
        m = p - i
        for a in range(m):
            raw = 0.0
            for sidx in range(n):
                raw += R[a + i, sidx] * XT[a, sidx]
            xo = flat[base + a]
            xold[a] = xo
            ybuf[a] = raw / n - sdiag[a] * xo
        if i == 0:
            ybuf[0] = 0.0
        nu = nubuf[nuoffs[i] : nuoffs[i + 1]]
        if not _solve_block(i, sdiag[:m], ybuf[:m], fam, lam, lam1, trend_tol,
                            xnew[:m], nu, warm[i]):
            return SWEEP_FAILED
        warm[i] = True
        delta = _block_delta(i, sdiag[:m], ybuf[:m], xold[:m], xnew[:m], fam, lam, lam1)
        if not np.isfinite(delta) or delta > 1e-6:
            return SWEEP_FAILED
        if delta > 0.0:
            continue
        for a in range(m):
            dv = xnew[a] - xold[a]
            if dv != 0.0:
                ad = abs(dv)
                if ad > gap:
                    gap = ad
                flat[base + a] = xnew[a]
                for sidx in range(n):
                    R[a + i, sidx] += dv * XT[a, sidx]
    return gap


@njit(cache=True)
def penalty_flat(flat, offs, band, p, fam, lam, lam1):
    """Penalty term of Q over the in-band subdiagonals stored in flat."""
    pen = 0.0
    if fam == 0:
        return pen
    for i in range(1, band + 1):
        base = offs[i]
        m = p - i
        if fam == 1 or fam == 4:
            for a in range(1, m):
                pen += lam * abs(flat[base + a] - flat[base + a - 1])
            if fam == 4:
                for a in range(m):
                    pen += lam1 * abs(flat[base + a])
        elif fam == 2:
            for a in range(2, m):
                pen += lam * abs(flat[base + a] - 2.0 * flat[base + a - 1]
                                 + flat[base + a - 2])
        else:
            for a in range(2, m):
                v = flat[base + a] - 2.0 * flat[base + a - 1] + flat[base + a - 2]
                pen += lam * v * v
    return pen


@njit(cache=True)
def obj_dense(W, flat, offs, band, p, fam, lam, lam1):
    """Q from the dense-path state: tr(LSL') via W = L S, plus penalty."""
    tr = 0.0
    for i in range(band + 1):
        base = offs[i]
        for a in range(p - i):
            tr += W[a + i, a] * flat[base + a]
    logs = 0.0
    for a in range(p):
        logs += np.log(flat[a])
    return tr - 2.0 * logs + penalty_flat(flat, offs, band, p, fam, lam, lam1)


@njit(cache=True)
def obj_lowrank(R, n, flat, offs, band, p, fam, lam, lam1):
    """Q from the low-rank state: tr(LSL') = ||L X'||_F^2 / n, plus penalty."""
    tr = 0.0
    for r in range(p):
        for s in range(R.shape[1]):
            tr += R[r, s] * R[r, s]
    tr /= n
    logs = 0.0
    for a in range(p):
        logs += np.log(flat[a])
    return tr - 2.0 * logs + penalty_flat(flat, offs, band, p, fam, lam, lam1)


@njit(cache=True)
def refresh_dense(W, S, flat, offs, band):
    """Recompute W = L S from scratch to shed incremental rounding drift."""
    p = S.shape[0]
    for r in range(p):
        jmax = r if r < band else band
        for c in range(p):
            acc = 0.0
            for j in range(jmax + 1):
                acc += flat[offs[j] + r - j] * S[r - j, c]
            W[r, c] = acc


@njit(cache=True)
def refresh_lowrank(R, XT, flat, offs, band):
    """Recompute R = L X' from scratch."""
    p = XT.shape[0]
    n = XT.shape[1]
    for r in range(p):
        jmax = r if r < band else band
        for s in range(n):
            acc = 0.0
            for j in range(jmax + 1):
                acc += flat[offs[j] + r - j] * XT[r - j, s]
            R[r, s] = acc


# run-driver exit codes
RUN_OK = 0         # sup-norm gap reached eps
RUN_FAILED = 1     # a block update raised the objective (solver bug)
RUN_BUDGET = 2     # sweep budget exhausted
RUN_INCREASE = 3   # per-sweep objective rose beyond slack
RUN_NONFINITE = 4  # objective left the finite range


@njit(cache=True)
def dense_run(W, S, sdiag, flat, offs, band, fam, lam, lam1, trend_tol,
              eps, max_sweeps, slack, trace, nubuf, nuoffs, warm):
    """Sweep the dense path until the gap drops to eps or the budget runs out.

    trace[0] must hold the initial objective; trace[k] is filled with Q
    after sweep k.  Returns (sweeps done, last gap, exit code).
    """
    p = S.shape[0]
    gap = np.inf
    k = 0
    while k < max_sweeps:
        k += 1
        gap = dense_sweep(W, S, sdiag, flat, offs, band, fam, lam, lam1,
                          trend_tol, nubuf, nuoffs, warm)
        if gap == SWEEP_FAILED:
            return k, gap, RUN_FAILED
        q = obj_dense(W, flat, offs, band, p, fam, lam, lam1)
        trace[k] = q
        if not np.isfinite(q):
            return k, gap, RUN_NONFINITE
        if q > trace[k - 1] + slack:
            return k, gap, RUN_INCREASE
        if gap <= eps:
            return k, gap, RUN_OK
        if k % 64 == 0:
            refresh_dense(W, S, flat, offs, band)
    return k, gap, RUN_BUDGET


@njit(cache=True)
def lowrank_run(R, XT, sdiag, n, flat, offs, band, fam, lam, lam1, trend_tol,
                eps, max_sweeps, slack, trace, nubuf, nuoffs, warm):
    """Low-rank-path counterpart of dense_run."""
    p = XT.shape[0]
    gap = np.inf
    k = 0
    while k < max_sweeps:
        k += 1
        gap = lowrank_sweep(R, XT, sdiag, n, flat, offs, band, fam, lam, lam1,
                            trend_tol, nubuf, nuoffs, warm)
        if gap == SWEEP_FAILED:
            return k, gap, RUN_FAILED
        q = obj_lowrank(R, n, flat, offs, band, p, fam, lam, lam1)
        trace[k] = q
        if not np.isfinite(q):
            return k, gap, RUN_NONFINITE
        if q > trace[k - 1] + slack:
            return k, gap, RUN_INCREASE
        if gap <= eps:
            return k, gap, RUN_OK
        if k % 64 == 0:
            refresh_lowrank(R, XT, flat, offs, band)
    return k, gap, RUN_BUDGET


def warmup():
    """Trigger JIT compilation on tiny inputs so timings exclude compile cost."""
    C = np.array([1.0, 2.0, 1.5, 1.2])
    y = np.array([0.1, -0.2, 0.3, 0.05])
    fused_dp(C, y, 0.5, 0.0)
    fused_dp(C, y, 0.5, 0.3)
    out = np.empty(4)
    pentasolve(C, np.array([0.1, 0.1, 0.1]), np.array([0.01, 0.01]), y, out)
    hp_solve(C, y, 0.7, out)
    nu = np.zeros(2)
    trend_active_set(C, y, 0.7, 1e-11, out, nu, False)
    trend_active_set(C, y, 0.7, 1e-11, out, nu, True)
    S = np.eye(4) + 0.1
    flat = np.concatenate([np.ones(4), np.zeros(3), np.zeros(2)])
    offs = np.array([0, 4, 7], dtype=np.int64)
    nuoffs = np.array([0, 0, 1, 1], dtype=np.int64)
    sdiag = np.diag(S).copy()
    XT = np.ones((4, 2))
    trace = np.zeros(3)
    for fam in range(5):
        nubuf = np.zeros(1)
        wflags = np.zeros(3, dtype=np.bool_)
        W = np.diag(flat[:4]) @ S
        lowrank_sweep(np.ones((4, 2)), XT, np.full(4, 2.0), 2,
                      flat.copy(), offs, 2, fam, 0.3, 0.1, 1e-11,
                      nubuf, nuoffs, wflags)
        dense_sweep(W, S, sdiag, flat.copy(), offs, 2, fam, 0.3, 0.1, 1e-11,
                    nubuf, nuoffs, wflags)
        W = np.diag(flat[:4]) @ S
        dense_run(W, S, sdiag, flat.copy(), offs, 2, fam, 0.3, 0.1, 1e-11,
                  1e-12, 2, 1e-9, trace.copy(), nubuf, nuoffs,
                  np.zeros(3, dtype=np.bool_))
        lowrank_run(np.ones((4, 2)), XT, np.full(4, 2.0), 2,
                    flat.copy(), offs, 2, fam, 0.3, 0.1, 1e-11,
                    1e-12, 2, 1e-9, trace.copy(), nubuf, nuoffs,
                    np.zeros(3, dtype=np.bool_))
