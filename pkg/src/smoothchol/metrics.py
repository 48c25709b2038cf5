"""Estimation losses, support recovery curves, and conditional forecasting."""

from __future__ import annotations

import warnings

import numpy as np
from scipy.linalg import solve

from .errors import InvalidCovarianceError
from .model import CholFactor

ERROR_KINDS = ("frob_scaled", "inf")


def matrix_error(est, truth, kind="frob_scaled"):
    """Distance between two matrices.

    frob_scaled is the squared Frobenius norm divided by the dimension;
    inf is the operator infinity norm (max absolute row sum) of the
    difference.
    """
    est = np.asarray(est, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if est.shape != truth.shape:
        raise ValueError(f"shape mismatch: {est.shape} vs {truth.shape}")
    diff = est - truth
    if kind == "frob_scaled":
        return float((diff**2).sum() / est.shape[0])
    if kind == "inf":
        return float(np.abs(diff).sum(axis=1).max())
    raise ValueError(f"unknown kind {kind!r}; expected one of {ERROR_KINDS}")


def kl_loss(omega_est, sigma_true):
    """Gaussian KL divergence per coordinate, (tr(OS) - logdet(OS) - p) / p."""
    omega_est = np.asarray(omega_est, dtype=np.float64)
    sigma_true = np.asarray(sigma_true, dtype=np.float64)
    p = omega_est.shape[0]
    prod = omega_est @ sigma_true
    sign, logdet = np.linalg.slogdet(prod)
    if sign <= 0 or not np.isfinite(logdet):
        raise InvalidCovarianceError("omega_est @ sigma_true is not positive definite")
    return float((np.trace(prod) - logdet - p) / p)


def total_variation(x):
    """Sum of absolute first differences."""
    x = np.asarray(x, dtype=np.float64).ravel()
    return float(np.abs(np.diff(x)).sum())


def _support_mask(factor, tol):
    if isinstance(factor, CholFactor):
        dense = factor.dense()
    else:
        dense = np.asarray(factor, dtype=np.float64)
    return np.abs(np.tril(dense, -1)) > tol


def support_roc(path, truth, fpr_cap=0.15, tol=1e-8):
    """ROC over a path of fitted factors against the true sparsity pattern.

    Entries are the strictly-lower-triangular positions; an entry counts
    as selected when its magnitude exceeds tol.  Returns the (FPR, TPR)
    points sorted by FPR and the trapezoid area over [0, fpr_cap], with
    the curve taken as the running-max TPR, interpolated linearly and
    extended flat past the last point.
    """
    truth_mask = _support_mask(truth, tol)
    pos = truth_mask.sum()
    neg = np.tril(np.ones_like(truth_mask, dtype=bool), -1).sum() - pos
    if pos == 0 or neg == 0:
        warnings.warn("truth support is empty or full; ROC curve is degenerate",
                      stacklevel=2)
    pts = []
    for est in path:
        est_mask = _support_mask(est, tol)
        tp = np.sum(est_mask & truth_mask)
        fp = np.sum(est_mask & ~truth_mask & np.tril(np.ones_like(truth_mask, dtype=bool), -1))
        tpr = tp / pos if pos else 1.0
        fpr = fp / neg if neg else 0.0
        pts.append((float(fpr), float(tpr)))
    pts.sort()
    points = np.array(pts)

    # staircase envelope: best TPR achieved at or below each FPR
    fprs, tprs = [0.0], [0.0]
    best = 0.0
    for f, t in pts:
        best = max(best, t)
        if f == fprs[-1]:
            tprs[-1] = best
        else:
            fprs.append(f)
            tprs.append(best)
    fprs.append(max(fpr_cap, fprs[-1]))
    tprs.append(tprs[-1])

    f = np.array(fprs)
    t = np.array(tprs)
    keep = f <= fpr_cap
    fc = np.concatenate([f[keep], [fpr_cap]])
    tc = np.concatenate([t[keep], [np.interp(fpr_cap, f, t)]])
    auc = float(np.trapezoid(tc, fc))
    return points, auc


def conditional_forecast(mu, sigma, observed, split):
    """Predict the trailing block given the leading one under N(mu, sigma).

    observed holds the first `split` coordinates, one row per instance.
    Returns the conditional means of coordinates split..p-1.
    """
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    observed = np.atleast_2d(np.asarray(observed, dtype=np.float64))
    p = sigma.shape[0]
    if not 0 < split < p:
        raise ValueError(f"split must be in (0, {p})")
    if observed.shape[1] != split:
        raise ValueError(f"observed has {observed.shape[1]} columns, expected {split}")
    s11 = sigma[:split, :split]
    s21 = sigma[split:, :split]
    adj = solve(s11, (observed - mu[:split]).T, assume_a="pos")
    return mu[split:] + (s21 @ adj).T


def forecast_error(pred, actual):
    """Mean absolute error per forecast coordinate, plus the total.

    Returns (fe, aggregate) where fe[t] averages |pred - actual| at
    coordinate t over instances and aggregate is fe.sum().
    """
    pred = np.atleast_2d(np.asarray(pred, dtype=np.float64))
    actual = np.atleast_2d(np.asarray(actual, dtype=np.float64))
    if pred.shape != actual.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {actual.shape}")
    fe = np.abs(pred - actual).mean(axis=0)
    return fe, float(fe.sum())
