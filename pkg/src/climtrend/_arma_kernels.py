"""Innovations-algorithm kernels for exact Gaussian ARMA likelihoods.

The recursion follows the banded formulation on the AR-filtered process:
the first ``m = max(p, q)`` observations enter untransformed and the rest
are AR-differenced, which makes the working covariance ``q``-banded and
the whole pass O(n * max(p, q)^2).  The kernels are numba-compiled (with
on-disk caching) because the recursion is inherently sequential in ``t``.

All quantities here are unit-innovation scaled: ``racf`` is the model
autocovariance divided by ``sigma^2`` and the returned prediction-error
variances ``v`` multiply ``sigma^2``.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _kappa(i, j, racf, phi, theta, m):
    """Covariance of the AR-filtered process at (i, j), 1-based indices."""
    if i < j:
        i, j = j, i
    k = i - j
    p = phi.shape[0]
    q = theta.shape[0]
    if i <= m:
        return racf[k]
    if j <= m:
        if i > 2 * m or k > racf.shape[0] - 1:
            return 0.0
        s = racf[k]
        for r in range(1, p + 1):
            s -= phi[r - 1] * racf[abs(r - k)]
        return s
    # both beyond m: pure MA covariance
    if k > q:
        return 0.0
    s = 0.0
    for r in range(0, q - k + 1):
        a = 1.0 if r == 0 else theta[r - 1]
        b = 1.0 if r + k == 0 else theta[r + k - 1]
        s += a * b
    return s


@njit(cache=True)
def innovations_transform(M, racf, phi, theta):
    """One-step prediction errors of each column of ``M`` under the model.

    Returns ``(E, v, ok)`` where row ``t`` of ``E`` holds the prediction
    errors ``M[t] - Mhat[t]`` and ``v[t]`` the unit-innovation variance of
    that prediction.  ``ok`` is False when the recursion hit a
    non-positive variance (numerically invalid model).
    """
    n, ncol = M.shape
    p = phi.shape[0]
    q = theta.shape[0]
    m = max(p, q)
    bw = max(m, q, 1)

    th = np.zeros((n, bw))
    v = np.empty(n)
    v[0] = _kappa(1, 1, racf, phi, theta, m)
    if v[0] <= 0.0:
        return M.copy(), v, False

    for t in range(1, n):
        kmin = 0 if t < m else t - q
        if kmin < 0:
            kmin = 0
        for k in range(kmin, t):
            a = _kappa(t + 1, k + 1, racf, phi, theta, m)
            lo = 0 if k < m else k - q
            if kmin > lo:
                lo = kmin
            for j in range(lo, k):
                a -= th[k, k - j - 1] * th[t, t - j - 1] * v[j]
            th[t, t - k - 1] = a / v[k]
        acc = _kappa(t + 1, t + 1, racf, phi, theta, m)
        for j in range(kmin, t):
            acc -= th[t, t - j - 1] * th[t, t - j - 1] * v[j]
        v[t] = acc
        if v[t] <= 0.0:
            return M.copy(), v, False

    E = np.empty_like(M)
    for c in range(ncol):
        E[0, c] = M[0, c]
    for t in range(1, n):
        if t < m:
            for c in range(ncol):
                pred = 0.0
                for j in range(1, t + 1):
                    pred += th[t, j - 1] * E[t - j, c]
                E[t, c] = M[t, c] - pred
        else:
            for c in range(ncol):
                pred = 0.0
                for i in range(1, p + 1):
                    pred += phi[i - 1] * M[t - i, c]
                for j in range(1, q + 1):
                    pred += th[t, j - 1] * E[t - j, c]
                E[t, c] = M[t, c] - pred
    return E, v, True


@njit(cache=True)
def innovations_loglik_terms(x, racf, phi, theta):
    """Return ``(sum_log_v, weighted_rss, ok)`` for a single series.

    ``weighted_rss = sum_t (x_t - xhat_t)^2 / v_t`` with unit-innovation
    ``v``; the Gaussian log likelihood at innovation scale ``sigma`` is
    ``-0.5 * (n*log(2*pi*sigma^2) + sum_log_v + weighted_rss / sigma^2)``.
    """
    n = x.shape[0]
    M = x.reshape(n, 1)
    E, v, ok = innovations_transform(M, racf, phi, theta)
    if not ok:
        return 0.0, 0.0, False
    sum_log_v = 0.0
    wrss = 0.0
    for t in range(n):
        sum_log_v += np.log(v[t])
        wrss += E[t, 0] * E[t, 0] / v[t]
    return sum_log_v, wrss, True
