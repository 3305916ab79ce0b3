"""Vectorized exact-ML fitting of regressions with AR(1) errors.

The calibration studies refit the same small regression tens of thousands
of times inside nested bootstrap loops; this module batches those fits
across replicates.  For AR(1) noise the innovations whitening has the
closed Prais-Winsten form, so the profile likelihood in the single lag
coefficient can be evaluated for a whole batch of series at once on a
coarse grid and then polished per series by bounded scalar search.

Numerically this is the same objective as
:func:`climtrend.noise.fit_regression_arma` with ``p=1, q=0`` (verified in
the test suite); it exists purely for speed.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import minimize_scalar


def _whiten(arr: np.ndarray, phi: float) -> np.ndarray:
    """Prais-Winsten transform along the last axis."""
    out = np.empty_like(arr)
    out[..., 0] = math.sqrt(1.0 - phi * phi) * arr[..., 0]
    out[..., 1:] = arr[..., 1:] - phi * arr[..., :-1]
    return out


def _negll_batch(Y: np.ndarray, X: np.ndarray, phi: float, reml: bool) -> np.ndarray:
    """Negative profile log likelihood at one phi for every row of Y."""
    n, k = X.shape
    Yt = _whiten(Y, phi)
    Xt = _whiten(X.T, phi).T
    G = Xt.T @ Xt
    Gi = np.linalg.inv(G)
    B = (Yt @ Xt) @ Gi                     # (R, k) GLS coefficients
    rss = np.einsum("ij,ij->i", Yt, Yt) - np.einsum("ij,ij->i", B @ G, B)
    rss = np.maximum(rss, 1e-300)
    log_det_r = -math.log(1.0 - phi * phi)
    if reml:
        dof = n - k
        s2 = rss / dof
        logdet_g = np.linalg.slogdet(G)[1]
        return 0.5 * (dof * (np.log(2.0 * np.pi * s2) + 1.0) + log_det_r + logdet_g)
    s2 = rss / n
    return 0.5 * (n * (np.log(2.0 * np.pi * s2) + 1.0) + log_det_r)


def _negll_single(y: np.ndarray, X: np.ndarray, phi: float, reml: bool) -> float:
    return float(_negll_batch(y[None, :], X, phi, reml)[0])


def fit_ar1_regression_batch(
    Y: np.ndarray,
    X: np.ndarray,
    reml: bool = False,
    coarse: int = 41,
    xatol: float = 1e-6,
):
    """Exact ML (or REML) AR(1)-regression fits for each row of ``Y``.

    Returns ``(phi, beta, se, sigma2, loglik)`` with ``beta``/``se`` of
    shape ``(R, k)``.  A shared coarse grid brackets each row's optimum,
    then a bounded Brent search polishes it per row.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    X = np.asarray(X, dtype=float)
    n, k = X.shape
    R = Y.shape[0]
    phis = np.linspace(-0.995, 0.995, coarse)
    obj = np.column_stack([_negll_batch(Y, X, phi, reml) for phi in phis])
    best = np.argmin(obj, axis=1)

    phi_hat = np.empty(R)
    beta = np.empty((R, k))
    se = np.empty((R, k))
    sigma2 = np.empty(R)
    loglik = np.empty(R)
    dof = (n - k) if reml else n
    for i in range(R):
        lo = phis[max(best[i] - 1, 0)]
        hi = phis[min(best[i] + 1, coarse - 1)]
        y = Y[i]
        res = minimize_scalar(
            lambda phi: _negll_single(y, X, phi, reml),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": xatol},
        )
        phi = float(res.x)
        yt = _whiten(y, phi)
        Xt = _whiten(X.T, phi).T
        G = Xt.T @ Xt
        b = np.linalg.solve(G, Xt.T @ yt)
        resid = yt - Xt @ b
        rss = float(resid @ resid)
        s2 = rss / dof
        cov = s2 * np.linalg.inv(G)
        phi_hat[i] = phi
        beta[i] = b
        se[i] = np.sqrt(np.diag(cov))
        sigma2[i] = s2
        loglik[i] = -float(res.fun)
    return phi_hat, beta, se, sigma2, loglik
