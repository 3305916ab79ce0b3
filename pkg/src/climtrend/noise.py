"""Stationary noise models: ARMA and fractionally integrated ARMA.

Covers representation and validation, spectral densities, autocovariances,
Gaussian simulation, periodograms and smoothing, exact maximum likelihood
(via the innovations recursion; no conditional approximations), regression
with ARMA errors (ML and REML), information criteria, order selection, and
the spectral-divergence-best AR(1) approximation to an arbitrary target
spectrum.

Conventions, frozen in the tests:

* AR polynomial ``1 - sum phi_k z^k``, MA polynomial ``1 + sum theta_k z^k``.
* Spectral density is two-sided, ``f(w) = sigma^2/(2 pi) |MA|^2/|AR|^2``
  times ``(2 sin(w/2))^(-2d)``; the integral of ``2 f`` over ``(0, pi]``
  equals the process variance.
* Periodogram ordinate ``I(w_j) = |sum_t (x_t - xbar) e^(-i w_j t)|^2 / n``
  at Fourier frequencies ``w_j = 2 pi j / n``, ``j = 1..floor(n/2)``; the
  weighted ordinate mean (Nyquist weighted 1/2 for even n, total weight
  ``(n-1)/2``) equals the sample variance exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.signal import fftconvolve, lfilter

from ._arma_kernels import innovations_loglik_terms, innovations_transform
from .exceptions import OptimizationError
from .series import UNIT_NONE, AnnualSeries


# ---------------------------------------------------------------------------
# Model and spectral containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ArfimaModel:
    """ARFIMA(p, d, q) with Gaussian innovations of standard deviation sigma."""

    ar: tuple = ()
    ma: tuple = ()
    d: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "ar", tuple(float(c) for c in self.ar))
        object.__setattr__(self, "ma", tuple(float(c) for c in self.ma))
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")
        if not 0 <= self.d < 0.5:
            raise ValueError(f"d must be in [0, 0.5), got {self.d}")
        if self.ar and _min_root_modulus(np.r_[1.0, -np.asarray(self.ar)]) <= 1.0 + 1e-12:
            raise ValueError(f"AR coefficients {self.ar} are not stationary")
        if self.ma and _min_root_modulus(np.r_[1.0, np.asarray(self.ma)]) <= 1.0 + 1e-12:
            raise ValueError(f"MA coefficients {self.ma} are not invertible")

    @property
    def p(self) -> int:
        return len(self.ar)

    @property
    def q(self) -> int:
        return len(self.ma)

    @property
    def is_short_memory(self) -> bool:
        return self.d == 0.0

    def to_dict(self) -> dict:
        return {"ar": list(self.ar), "ma": list(self.ma), "d": self.d, "sigma": self.sigma}

    @classmethod
    def from_dict(cls, obj: dict) -> "ArfimaModel":
        return cls(
            ar=tuple(obj.get("ar", ())),
            ma=tuple(obj.get("ma", ())),
            d=float(obj.get("d", 0.0)),
            sigma=float(obj.get("sigma", 1.0)),
        )


def _min_root_modulus(poly_ascending: np.ndarray) -> float:
    """Smallest root modulus of a polynomial given in ascending powers."""
    trimmed = np.trim_zeros(poly_ascending, "b")
    if len(trimmed) <= 1:
        return np.inf
    roots = np.roots(trimmed[::-1])
    return float(np.min(np.abs(roots)))


SPECTRUM_NORMALIZATION = "two-sided: integral of 2*f(w) over (0, pi] equals process variance"


@dataclass(frozen=True)
class Spectrum:
    frequencies: np.ndarray
    power: np.ndarray
    normalization: str = SPECTRUM_NORMALIZATION

    def __post_init__(self):
        freqs = np.asarray(self.frequencies, dtype=float)
        power = np.asarray(self.power, dtype=float)
        if freqs.shape != power.shape or freqs.ndim != 1:
            raise ValueError("frequencies and power must be matching 1-D arrays")
        if np.any(np.diff(freqs) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        if not np.all(np.isfinite(power)) or np.any(power < 0):
            raise ValueError("power must be finite and nonnegative")
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "power", power)


@dataclass(frozen=True)
class Periodogram:
    frequencies: np.ndarray
    ordinates: np.ndarray
    n: int

    def __post_init__(self):
        object.__setattr__(self, "frequencies", np.asarray(self.frequencies, dtype=float))
        object.__setattr__(self, "ordinates", np.asarray(self.ordinates, dtype=float))

    def weighted_ordinate_mean(self) -> float:
        """Ordinate mean under the frozen Parseval weighting (equals s^2)."""
        w = np.ones(len(self.ordinates))
        if self.n % 2 == 0:
            w[-1] = 0.5
        return float(np.sum(w * self.ordinates) / ((self.n - 1) / 2.0))


# ---------------------------------------------------------------------------
# Spectral densities and autocovariance
# ---------------------------------------------------------------------------

def _transfer_sq(coeffs: Sequence[float], omegas: np.ndarray, sign: float) -> np.ndarray:
    """|1 + sign * sum c_k e^{-ikw}|^2 evaluated at each frequency."""
    acc = np.ones(len(omegas), dtype=complex)
    for k, c in enumerate(coeffs, start=1):
        acc += sign * c * np.exp(-1j * k * omegas)
    return np.abs(acc) ** 2


def arma_spectral_density(model: ArfimaModel, omegas) -> Spectrum:
    """Two-sided ARMA spectral density at the given frequencies."""
    if model.d != 0:
        raise ValueError("arma_spectral_density requires d = 0; use arfima_spectral_density")
    omegas = np.asarray(omegas, dtype=float)
    num = _transfer_sq(model.ma, omegas, +1.0)
    den = _transfer_sq(model.ar, omegas, -1.0)
    power = model.sigma ** 2 / (2.0 * np.pi) * num / den
    return Spectrum(frequencies=omegas, power=power)


def arfima_spectral_density(model: ArfimaModel, omegas) -> Spectrum:
    """ARMA spectrum times the long-memory factor ``(2 sin(w/2))^(-2d)``."""
    omegas = np.asarray(omegas, dtype=float)
    if model.d > 0 and np.any(omegas <= 0):
        raise ValueError("omega = 0 is excluded for d > 0 (infinite power at the origin)")
    num = _transfer_sq(model.ma, omegas, +1.0)
    den = _transfer_sq(model.ar, omegas, -1.0)
    power = model.sigma ** 2 / (2.0 * np.pi) * num / den
    if model.d > 0:
        power = power * (2.0 * np.sin(omegas / 2.0)) ** (-2.0 * model.d)
    return Spectrum(frequencies=omegas, power=power)


def _arma_acvf_unit(ar: Sequence[float], ma: Sequence[float], max_lag: int) -> np.ndarray:
    """Autocovariance gamma(0..max_lag) of an ARMA with unit innovation variance."""
    p, q = len(ar), len(ma)
    phi = np.asarray(ar, dtype=float)
    theta_full = np.r_[1.0, np.asarray(ma, dtype=float)]

    psi = np.zeros(q + 1)
    psi[0] = 1.0
    for j in range(1, q + 1):
        psi[j] = theta_full[j]
        for i in range(1, min(j, p) + 1):
            psi[j] += phi[i - 1] * psi[j - i]

    top = max(max_lag, p, q)
    rhs = np.zeros(top + 1)
    for k in range(q + 1):
        rhs[k] = np.sum(theta_full[k:q + 1] * psi[: q + 1 - k])

    A = np.zeros((p + 1, p + 1))
    for k in range(p + 1):
        A[k, k] += 1.0
        for i in range(1, p + 1):
            A[k, abs(k - i)] -= phi[i - 1]
    gam = np.zeros(top + 1)
    gam[: p + 1] = np.linalg.solve(A, rhs[: p + 1])
    for k in range(p + 1, top + 1):
        acc = rhs[k] if k <= q else 0.0
        for i in range(1, p + 1):
            acc += phi[i - 1] * gam[k - i]
        gam[k] = acc
    return gam[: max_lag + 1]


def arma_autocovariance(model: ArfimaModel, max_lag: int) -> np.ndarray:
    """gamma(0..max_lag) for a short-memory model, in squared data units."""
    if model.d != 0:
        raise ValueError("arma_autocovariance requires d = 0")
    if max_lag < 0:
        raise ValueError("max_lag must be >= 0")
    return model.sigma ** 2 * _arma_acvf_unit(model.ar, model.ma, max_lag)


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

def fractional_ma_weights(d: float, length: int) -> np.ndarray:
    """First ``length + 1`` MA(inf) weights of ``(1 - B)^(-d)``."""
    w = np.empty(length + 1)
    w[0] = 1.0
    for j in range(1, length + 1):
        w[j] = w[j - 1] * (j - 1 + d) / j
    return w


def _simulate_paths(model: ArfimaModel, n: int, count: int, rng, burn_in: int) -> np.ndarray:
    """(count, n) stationary sample paths; linear in the innovations."""
    b = np.r_[1.0, np.asarray(model.ma)]
    a = np.r_[1.0, -np.asarray(model.ar)]
    if model.d > 0:
        m_trunc = max(10 * n, 1000)
        z = rng.standard_normal((count, burn_in + n + m_trunc))
        arma = lfilter(b, a, z, axis=1)[:, burn_in:]
        w = fractional_ma_weights(model.d, m_trunc)
        out = fftconvolve(arma, w[None, :], axes=1)[:, m_trunc:m_trunc + n]
    else:
        z = rng.standard_normal((count, burn_in + n))
        out = lfilter(b, a, z, axis=1)[:, burn_in:]
    return model.sigma * out


def simulate(model: ArfimaModel, n: int, seed, burn_in: int = 500,
             start_year: int = 1) -> AnnualSeries:
    """Simulate a stationary Gaussian sample path of length ``n``.

    Fractional integration is realized by truncated MA(inf) weights of
    length ``max(10 n, 1000)`` applied to the ARMA output.  The path is a
    fixed linear function of the seeded standard-normal draws, so scaling
    ``sigma`` rescales the output exactly.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    rng = np.random.default_rng(seed)
    path = _simulate_paths(model, n, 1, rng, burn_in)[0]
    return AnnualSeries(start_year=start_year, values=path, unit=UNIT_NONE)


def simulate_batch(model: ArfimaModel, n: int, count: int, seed,
                   burn_in: int = 500) -> np.ndarray:
    """(count, n) array of independent sample paths from one seeded stream."""
    if n < 1 or count < 1:
        raise ValueError("n and count must be >= 1")
    rng = np.random.default_rng(seed)
    return _simulate_paths(model, n, count, rng, burn_in)


# ---------------------------------------------------------------------------
# Periodogram
# ---------------------------------------------------------------------------

def _as_values(x) -> np.ndarray:
    if isinstance(x, AnnualSeries):
        return np.asarray(x.values, dtype=float)
    return np.asarray(x, dtype=float)


def periodogram(x) -> Periodogram:
    """Raw periodogram at Fourier frequencies, sample mean removed."""
    values = _as_values(x)
    n = len(values)
    if n < 4:
        raise ValueError(f"need at least 4 observations for a periodogram, got {n}")
    centered = values - values.mean()
    spec = np.fft.rfft(centered)
    nfreq = n // 2
    ordinates = (np.abs(spec[1:nfreq + 1]) ** 2) / n
    freqs = 2.0 * np.pi * np.arange(1, nfreq + 1) / n
    return Periodogram(frequencies=freqs, ordinates=ordinates, n=n)


def smooth_periodogram(p: Periodogram, width: int = 5, passes: int = 2) -> Periodogram:
    """Repeated centered moving average with reflected (symmetric) edges."""
    if width < 1 or width % 2 == 0:
        raise ValueError(f"width must be odd and >= 1, got {width}")
    if passes < 1:
        raise ValueError(f"passes must be >= 1, got {passes}")
    ords = np.asarray(p.ordinates, dtype=float)
    if width == 1:
        return Periodogram(frequencies=p.frequencies, ordinates=ords.copy(), n=p.n)
    half = width // 2
    kernel = np.full(width, 1.0 / width)
    for _ in range(passes):
        padded = np.pad(ords, half, mode="symmetric")
        ords = np.convolve(padded, kernel, mode="valid")
    return Periodogram(frequencies=p.frequencies, ordinates=ords, n=p.n)


# ---------------------------------------------------------------------------
# Exact likelihood and innovations
# ---------------------------------------------------------------------------

def _racf_for(ar, ma) -> np.ndarray:
    m = max(len(ar), len(ma))
    return _arma_acvf_unit(ar, ma, max(2 * m, 1))


def loglik_exact(model: ArfimaModel, x) -> float:
    """Exact Gaussian log likelihood of a zero-mean short-memory model."""
    if model.d != 0:
        raise ValueError("exact likelihood is implemented for short-memory models (d = 0)")
    values = _as_values(x)
    n = len(values)
    if n < model.p + model.q + 1:
        raise ValueError(f"series too short (n={n}) for ARMA({model.p},{model.q})")
    phi = np.asarray(model.ar, dtype=float)
    theta = np.asarray(model.ma, dtype=float)
    sum_log_v, wrss, ok = innovations_loglik_terms(values, _racf_for(model.ar, model.ma), phi, theta)
    if not ok:
        raise ValueError("innovations recursion failed: model numerically non-stationary")
    s2 = model.sigma ** 2
    return float(-0.5 * (n * math.log(2.0 * math.pi * s2) + sum_log_v + wrss / s2))


def sample_innovations(model: ArfimaModel, x, demean: bool = True) -> np.ndarray:
    """Standardized one-step prediction errors under the model.

    The sample mean is removed first (the noise models are zero-mean but
    observed residual series need not be exactly centered).  Under the
    true model the result is iid standard normal.
    """
    if model.d != 0:
        raise ValueError("sample innovations are implemented for short-memory models (d = 0)")
    values = _as_values(x)
    if demean:
        values = values - values.mean()
    phi = np.asarray(model.ar, dtype=float)
    theta = np.asarray(model.ma, dtype=float)
    E, v, ok = innovations_transform(values[:, None], _racf_for(model.ar, model.ma), phi, theta)
    if not ok:
        raise ValueError("innovations recursion failed: model numerically non-stationary")
    return E[:, 0] / (model.sigma * np.sqrt(v))


# ---------------------------------------------------------------------------
# Maximum likelihood fitting
# ---------------------------------------------------------------------------

def _pacf_to_coef(pacf: np.ndarray) -> np.ndarray:
    """Levinson-Durbin map from partial autocorrelations to AR coefficients."""
    a = np.zeros(len(pacf))
    for k in range(len(pacf)):
        akk = pacf[k]
        prev = a[:k].copy()
        a[:k] = prev - akk * prev[::-1]
        a[k] = akk
    return a


def _coef_to_pacf(coef: np.ndarray) -> np.ndarray:
    """Inverse Levinson-Durbin; raises if the coefficients are on/outside the boundary."""
    a = np.asarray(coef, dtype=float).copy()
    k = len(a)
    pacf = np.zeros(k)
    for step in range(k - 1, -1, -1):
        akk = a[step]
        if abs(akk) >= 1:
            raise ValueError("coefficients outside the stationarity region")
        pacf[step] = akk
        if step:
            prev = a[:step]
            a[:step] = (prev + akk * prev[::-1]) / (1.0 - akk * akk)
    return pacf


def _unpack_arma(u: np.ndarray, p: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    phi = _pacf_to_coef(np.tanh(u[:p])) if p else np.empty(0)
    # invertibility of 1 + sum theta z^k == stationarity of the negated vector
    theta = -_pacf_to_coef(np.tanh(u[p:])) if q else np.empty(0)
    return phi, theta


def _pack_arma(phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    parts = []
    if len(phi):
        parts.append(np.arctanh(np.clip(_coef_to_pacf(phi), -0.998, 0.998)))
    if len(theta):
        parts.append(np.arctanh(np.clip(_coef_to_pacf(-np.asarray(theta)), -0.998, 0.998)))
    if not parts:
        return np.empty(0)
    return np.concatenate(parts)


def sample_acf(x, max_lag: int) -> np.ndarray:
    """Biased-denominator sample autocorrelations at lags 0..max_lag."""
    values = _as_values(x)
    values = values - values.mean()
    n = len(values)
    denom = float(values @ values)
    if denom == 0:
        return np.r_[1.0, np.zeros(max_lag)]
    return np.array([values[: n - k] @ values[k:] / denom for k in range(max_lag + 1)])


def _yule_walker_start(x, p: int) -> np.ndarray:
    rho = sample_acf(x, p)
    try:
        import scipy.linalg as sla

        phi = sla.solve_toeplitz(rho[:p], rho[1:p + 1])
    except Exception:
        return np.zeros(p)
    try:
        pacf = _coef_to_pacf(phi)
    except ValueError:
        return np.zeros(p)
    return np.arctanh(np.clip(pacf, -0.95, 0.95))


@dataclass(frozen=True)
class ArmaFit:
    """Result of an exact-ML ARMA fit."""

    model: ArfimaModel
    loglik: float
    converged: bool

    def __iter__(self):
        return iter((self.model, self.loglik))


def fit_arma_mle(x, p: int, q: int, demean: bool = True) -> ArmaFit:
    """Exact maximum-likelihood ARMA(p, q) fit with sigma profiled out.

    The coefficients are optimized through a partial-autocorrelation
    parameterization, which keeps every iterate strictly stationary and
    invertible.  Multi-start: Yule-Walker moments and zero coefficients.
    """
    values = _as_values(x)
    n = len(values)
    if n <= p + q + 2:
        raise ValueError(f"series too short (n={n}) to fit ARMA({p},{q})")
    if demean:
        values = values - values.mean()

    if p + q == 0:
        s2 = float(values @ values) / n
        if s2 <= 0:
            raise OptimizationError("degenerate series: zero variance")
        ll = -0.5 * n * (math.log(2.0 * math.pi * s2) + 1.0)
        return ArmaFit(model=ArfimaModel(sigma=math.sqrt(s2)), loglik=ll, converged=True)

    def negll(u):
        phi, theta = _unpack_arma(u, p, q)
        racf = _arma_acvf_unit(phi, theta, max(2 * max(p, q), 1))
        sum_log_v, wrss, ok = innovations_loglik_terms(values, racf, phi, theta)
        if not ok or wrss <= 0:
            return 1e300
        s2 = wrss / n
        return 0.5 * (n * (math.log(2.0 * math.pi * s2) + 1.0) + sum_log_v)

    starts = [np.zeros(p + q)]
    if p:
        yw = np.zeros(p + q)
        yw[:p] = _yule_walker_start(values, p)
        starts.append(yw)

    best = None
    converged = False
    for u0 in starts:
        res = minimize(
            negll, u0, method="Nelder-Mead",
            options={"maxiter": 250 * (p + q), "xatol": 1e-6, "fatol": 1e-10},
        )
        if best is None or res.fun < best.fun:
            best = res
            converged = bool(res.success)
    if best is None or not np.isfinite(best.fun) or best.fun >= 1e299:
        raise OptimizationError(f"ARMA({p},{q}) likelihood optimization failed", best=best)

    phi, theta = _unpack_arma(best.x, p, q)
    racf = _arma_acvf_unit(phi, theta, max(2 * max(p, q), 1))
    _, wrss, _ = innovations_loglik_terms(values, racf, phi, theta)
    s2 = wrss / n
    model = ArfimaModel(ar=tuple(phi), ma=tuple(theta), d=0.0, sigma=math.sqrt(s2))
    return ArmaFit(model=model, loglik=float(-best.fun), converged=converged)


# ---------------------------------------------------------------------------
# Regression with ARMA errors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegressionArmaFit:
    """Joint regression + ARMA noise fit (ML or REML)."""

    coefficients: np.ndarray
    noise: ArfimaModel
    loglik: float
    coef_covariance: np.ndarray
    criterion: str
    converged: bool


def _gls_terms(y: np.ndarray, X: np.ndarray, phi: np.ndarray, theta: np.ndarray):
    """Whitened-regression pieces at fixed ARMA coefficients (unit sigma)."""
    racf = _arma_acvf_unit(phi, theta, max(2 * max(len(phi), len(theta)), 1))
    M = np.column_stack([y, X])
    E, v, ok = innovations_transform(M, racf, phi, theta)
    if not ok:
        return None
    sqv = np.sqrt(v)
    yt = E[:, 0] / sqv
    Xt = E[:, 1:] / sqv[:, None]
    sum_log_v = float(np.sum(np.log(v)))
    return yt, Xt, sum_log_v


def fit_regression_arma(
    x,
    design,
    p: int,
    q: int,
    criterion: str = "ml",
) -> RegressionArmaFit:
    """Regression with ARMA(p, q) errors by exact ML or REML.

    At fixed noise coefficients the regression coefficients are profiled by
    generalized least squares (innovations whitening) and the innovation
    variance in closed form; the remaining objective is optimized over the
    partial-autocorrelation parameterization.  ``coef_covariance`` is
    ``(X' V^-1 X)^-1`` at the optimum, with V the fitted noise covariance.
    """
    if criterion not in ("ml", "reml"):
        raise ValueError(f"criterion must be 'ml' or 'reml', got {criterion!r}")
    y = _as_values(x)
    X = np.asarray(design, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    if len(y) != n:
        raise ValueError(f"design has {n} rows but series has {len(y)}")
    if n <= p + q + k + 2:
        raise ValueError(f"series too short (n={n}) for {k} coefficients + ARMA({p},{q})")
    if np.linalg.matrix_rank(X) < k:
        raise np.linalg.LinAlgError("design matrix is rank deficient")
    reml = criterion == "reml"
    dof = n - k if reml else n

    def solve_at(phi, theta):
        terms = _gls_terms(y, X, phi, theta)
        if terms is None:
            return None
        yt, Xt, sum_log_v = terms
        G = Xt.T @ Xt
        try:
            beta = np.linalg.solve(G, Xt.T @ yt)
        except np.linalg.LinAlgError:
            return None
        resid = yt - Xt @ beta
        rss = float(resid @ resid)
        if rss <= 0:
            return None
        s2 = rss / dof
        obj = 0.5 * (dof * (math.log(2.0 * math.pi * s2) + 1.0) + sum_log_v)
        if reml:
            sign, logdet = np.linalg.slogdet(G)
            if sign <= 0:
                return None
            obj += 0.5 * logdet
        return obj, beta, s2, G

    if p + q == 0:
        out = solve_at(np.empty(0), np.empty(0))
        if out is None:
            raise OptimizationError("regression fit failed")
        obj, beta, s2, G = out
        cov = s2 * np.linalg.inv(G)
        noise = ArfimaModel(sigma=math.sqrt(s2))
        return RegressionArmaFit(beta, noise, -obj, cov, criterion, True)

    def negll(u):
        phi, theta = _unpack_arma(u, p, q)
        out = solve_at(phi, theta)
        return 1e300 if out is None else out[0]

    # moment start: Yule-Walker on OLS residuals
    beta_ols, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    resid_ols = y - X @ beta_ols
    starts = [np.zeros(p + q)]
    if p:
        yw = np.zeros(p + q)
        yw[:p] = _yule_walker_start(resid_ols, p)
        starts.append(yw)

    best = None
    converged = False
    for u0 in starts:
        res = minimize(
            negll, u0, method="Nelder-Mead",
            options={"maxiter": 250 * (p + q), "xatol": 1e-6, "fatol": 1e-10},
        )
        if best is None or res.fun < best.fun:
            best = res
            converged = bool(res.success)
    if best is None or not np.isfinite(best.fun) or best.fun >= 1e299:
        raise OptimizationError(f"regression-ARMA({p},{q}) optimization failed", best=best)

    phi, theta = _unpack_arma(best.x, p, q)
    out = solve_at(phi, theta)
    if out is None:
        raise OptimizationError("regression-ARMA fit failed at the optimum", best=best)
    _, beta, s2, G = out
    cov = s2 * np.linalg.inv(G)
    noise = ArfimaModel(ar=tuple(phi), ma=tuple(theta), d=0.0, sigma=math.sqrt(s2))
    return RegressionArmaFit(beta, noise, float(-best.fun), cov, criterion, converged)


# ---------------------------------------------------------------------------
# Information criteria and order selection
# ---------------------------------------------------------------------------

def information_criteria(loglik: float, k: int, n: int) -> tuple[float, float]:
    """(AICc, BIC) for a fit with ``k`` parameters on ``n`` observations.

    For noise-only fits ``k`` counts AR + MA + innovation variance,
    ``k = p + q + 1``.
    """
    if n <= k + 1:
        raise ValueError(f"AICc undefined: need n > k+1, got n={n}, k={k}")
    aic = -2.0 * loglik + 2.0 * k
    aicc = aic + 2.0 * k * (k + 1) / (n - k - 1)
    bic = -2.0 * loglik + k * math.log(n)
    return aicc, bic


@dataclass(frozen=True)
class OrderSelection:
    """Winner of an exhaustive (p, q) grid search plus the full search log."""

    p: int
    q: int
    model: ArfimaModel
    criterion: str
    candidates: tuple  # rows: (p, q, loglik, aicc, bic, converged)

    def __iter__(self):
        return iter((self.p, self.q, self.model))


def select_order(x, p_max: int, q_max: int, criterion: str = "aicc") -> OrderSelection:
    """Exhaustive ARMA order search minimizing AICc or BIC.

    Ties break toward smaller ``p + q``, then smaller ``q``.  Candidates
    whose optimization fails outright are skipped and recorded with
    non-finite criterion values.
    """
    if criterion not in ("aicc", "bic"):
        raise ValueError(f"criterion must be 'aicc' or 'bic', got {criterion!r}")
    values = _as_values(x)
    n = len(values)
    rows = []
    fits = {}
    for p in range(p_max + 1):
        for q in range(q_max + 1):
            try:
                fit = fit_arma_mle(values, p, q)
                aicc, bic = information_criteria(fit.loglik, p + q + 1, n)
                rows.append((p, q, fit.loglik, aicc, bic, fit.converged))
                fits[(p, q)] = fit
            except (ValueError, OptimizationError):
                rows.append((p, q, -np.inf, np.inf, np.inf, False))
    idx = 3 if criterion == "aicc" else 4
    valid = [row for row in rows if np.isfinite(row[idx])]
    if not valid:
        raise OptimizationError("every candidate order failed to fit")
    best = min(valid, key=lambda row: (row[idx], row[0] + row[1], row[1]))
    fit = fits[(best[0], best[1])]
    return OrderSelection(
        p=best[0], q=best[1], model=fit.model, criterion=criterion, candidates=tuple(rows)
    )


# ---------------------------------------------------------------------------
# Best AR(1) approximation in spectral (Gaussian Kullback-Leibler) divergence
# ---------------------------------------------------------------------------

KL_GRID_SIZE = 4096


def _kl_grid() -> np.ndarray:
    return np.pi * np.arange(1, KL_GRID_SIZE + 1) / KL_GRID_SIZE


def best_ar1_kl(target: Union[Spectrum, ArfimaModel]) -> ArfimaModel:
    """Best AR(1) approximation to a target spectrum.

    Minimizes the Gaussian spectral divergence
    ``integral of [f_t/f_a + log f_a]`` over AR(1) parameters, evaluated on
    a fixed 4096-point grid on (0, pi] (lowest point pi/4096, so
    long-memory targets stay finite).  The innovation variance is profiled
    in closed form; the AR coefficient is found by bounded 1-D search.
    """
    omegas = _kl_grid()
    if isinstance(target, ArfimaModel):
        f_t = arfima_spectral_density(target, omegas).power
    else:
        f_t = np.interp(omegas, target.frequencies, target.power)
    if not np.all(np.isfinite(f_t)) or np.any(f_t <= 0):
        raise ValueError("target spectrum must be finite and positive on the grid")

    two_pi = 2.0 * np.pi

    def profile(phi):
        g = 1.0 / (two_pi * np.abs(1.0 - phi * np.exp(-1j * omegas)) ** 2)
        s2 = float(np.mean(f_t / g))
        # divergence up to constants: mean log g + log s2 + 1 at the profile
        return float(np.mean(np.log(g))) + math.log(s2) + 1.0, s2

    res = minimize_scalar(
        lambda phi: profile(phi)[0],
        bounds=(-0.999, 0.999),
        method="bounded",
        options={"xatol": 1e-7},
    )
    phi_hat = float(res.x)
    _, s2_hat = profile(phi_hat)
    return ArfimaModel(ar=(phi_hat,), sigma=math.sqrt(s2_hat))
