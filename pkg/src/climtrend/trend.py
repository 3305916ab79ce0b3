"""Forced-response trend models and their least-squares fits.

The mean model decomposes global mean temperature into an intercept plus
exponentially-lagged responses to anthropogenic and natural forcing:

    m(t) = mu0 + lambda_a * h(rho_a, F_A(t)/F_2x) + lambda_n * h(rho_n, F_N(t)/F_2x)

where ``h(rho, x)(t) = (1 - rho) * sum_{k>=0} rho^k x(t - k)`` is a
one-timescale distributed lag with unit DC gain.  Years before the start
of the forcing table are treated as constant at the first tabulated value,
which closes the infinite sum.

Fitting profiles out the linear parameters: for fixed ``(rho_a, rho_n)``
the model is linear in ``(mu0, lambda_a, lambda_n)`` and solved exactly by
least squares; the two lag parameters are found by a coarse grid scan
followed by Nelder-Mead refinement.  Every objective evaluation is
recorded in ``TrendFit.optimizer_trace`` for auditability.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter

from .exceptions import CoverageError, DegenerateDesignError
from .series import UNIT_CELSIUS, AnnualSeries, ForcingTable, Scenario

DEFAULT_F2X = 3.7
DEFAULT_RHO_MAX = 0.9999


@dataclass(frozen=True)
class TrendParams:
    """The five parameters of the forced-response model."""

    mu0: float
    lambda_a: float
    rho_a: float
    lambda_n: float
    rho_n: float
    rho_max: float = DEFAULT_RHO_MAX

    def __post_init__(self):
        for name in ("mu0", "lambda_a", "rho_a", "lambda_n", "rho_n", "rho_max"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not 0 < self.rho_max < 1:
            raise ValueError(f"rho_max must be in (0, 1), got {self.rho_max}")
        for name in ("rho_a", "rho_n"):
            rho = getattr(self, name)
            if not 0 <= rho <= self.rho_max:
                raise ValueError(f"{name}={rho} outside [0, rho_max={self.rho_max}]")

    def to_dict(self) -> dict:
        return {
            "mu0": self.mu0,
            "lambda_a": self.lambda_a,
            "rho_a": self.rho_a,
            "lambda_n": self.lambda_n,
            "rho_n": self.rho_n,
            "rho_max": self.rho_max,
        }


@dataclass(frozen=True)
class LinearTrendParams:
    """Straight-line-in-time fit over the window [t0, t1]."""

    alpha: float
    beta: float
    t0: int
    t1: int

    def __post_init__(self):
        if self.t0 >= self.t1:
            raise ValueError(f"need t0 < t1, got {self.t0} >= {self.t1}")

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "t0": self.t0, "t1": self.t1}


@dataclass(frozen=True)
class TrendFit:
    """A fitted trend model with residuals and the optimizer audit trail."""

    params: Union[TrendParams, LinearTrendParams]
    fitted: AnnualSeries
    residuals: AnnualSeries
    rss: float
    optimizer_trace: tuple = ()
    at_rho_cap: tuple = (False, False)
    grid: Optional["RhoGrid"] = None

    def to_dict(self) -> dict:
        return {
            "model": "forced_response" if isinstance(self.params, TrendParams) else "linear_time",
            "params": self.params.to_dict(),
            "rss": self.rss,
            "start_year": self.fitted.start_year,
            "fitted": list(self.fitted.values),
            "residuals": list(self.residuals.values),
            "at_rho_cap": list(self.at_rho_cap),
            "optimizer_trace": [list(entry) for entry in self.optimizer_trace],
        }

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)


@dataclass(frozen=True)
class RhoGrid:
    """Outer-search specification for the two lag parameters."""

    n_a: int = 40
    n_n: int = 40
    rho_max: float = DEFAULT_RHO_MAX
    refine: bool = True
    refine_maxiter: int = 400
    condition_limit: float = 1e10

    def __post_init__(self):
        if self.n_a < 2 or self.n_n < 2:
            raise ValueError("grid needs at least 2 points per axis")
        if not 0 < self.rho_max < 1:
            raise ValueError(f"rho_max must be in (0, 1), got {self.rho_max}")

    @property
    def rho_a_values(self) -> np.ndarray:
        return np.linspace(0.0, self.rho_max, self.n_a)

    @property
    def rho_n_values(self) -> np.ndarray:
        return np.linspace(0.0, self.rho_max, self.n_n)


# ---------------------------------------------------------------------------
# Lag responses
# ---------------------------------------------------------------------------

def _lag_filter(rho: float, values: np.ndarray, spinup_value: float) -> np.ndarray:
    """h_t = rho*h_{t-1} + (1-rho)*x_t with h initialized at spinup_value."""
    if not 0 <= rho < 1:
        raise ValueError(f"rho must be in [0, 1), got {rho}")
    out, _ = lfilter([1.0 - rho], [1.0, -rho], values, zi=[rho * spinup_value])
    return out


def lag_response(rho: float, x: AnnualSeries, spinup_value: float) -> AnnualSeries:
    """Exponentially-weighted distributed lag of an annual series.

    Output year ``t`` is ``(1-rho) * sum_{k>=0} rho^k x(t-k)`` with values
    before the series start equal to ``spinup_value``.  The weights sum to
    one, so a constant input (with matching spin-up) is reproduced exactly.
    """
    out = _lag_filter(float(rho), x.values, float(spinup_value))
    return AnnualSeries(start_year=x.start_year, values=out, unit=x.unit, baseline=x.baseline)


def step_response(lam: float, rho: float, horizon: int) -> np.ndarray:
    """Discrete response to a unit step: ``lam * (1 - rho^(k+1))`` for k < horizon.

    Matches :func:`lag_response` applied to an explicit step series with
    zero spin-up (the discrete convolution puts the first response one
    weight past the step onset).
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if not 0 <= rho < 1:
        raise ValueError(f"rho must be in [0, 1), got {rho}")
    k = np.arange(horizon)
    return lam * (1.0 - rho ** (k + 1))


def _response_columns(
    forcing: ForcingTable,
    rho_a: float,
    rho_n: float,
    f2x: float,
    first_year: int,
    last_year: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Lagged, f2x-normalized forcing columns over ``first_year..last_year``."""
    if not f2x > 0:
        raise ValueError(f"f2x must be positive, got {f2x}")
    if not forcing.covers(first_year, last_year):
        raise CoverageError(
            f"forcing table ({forcing.start_year}-{forcing.end_year}) does not cover "
            f"requested years {first_year}-{last_year}"
        )
    fa = forcing.anthropogenic / f2x
    fn = forcing.natural / f2x
    ha = _lag_filter(rho_a, fa, fa[0])
    hn = _lag_filter(rho_n, fn, fn[0])
    i0 = first_year - forcing.start_year
    i1 = last_year - forcing.start_year + 1
    return ha[i0:i1], hn[i0:i1]


def mean_response(
    params: TrendParams,
    forcing: ForcingTable,
    years: tuple[int, int],
    f2x: float = DEFAULT_F2X,
) -> AnnualSeries:
    """Evaluate the forced-response mean model over ``years = (first, last)``."""
    first_year, last_year = int(years[0]), int(years[1])
    ha, hn = _response_columns(forcing, params.rho_a, params.rho_n, f2x, first_year, last_year)
    values = params.mu0 + params.lambda_a * ha + params.lambda_n * hn
    return AnnualSeries(start_year=first_year, values=values, unit=UNIT_CELSIUS)


def project(
    params: TrendParams,
    scenario: Scenario,
    f2x: float = DEFAULT_F2X,
    years: Optional[tuple[int, int]] = None,
) -> AnnualSeries:
    """Mean response under a spliced future-forcing scenario."""
    if years is None:
        years = (scenario.splice_year, scenario.forcing.end_year)
    return mean_response(params, scenario.forcing, years, f2x)


def tcr(params: TrendParams, f2x: float = DEFAULT_F2X) -> float:
    """Warming after 70 years of forcing rising linearly to one doubling.

    The ramp is linear in forcing (1 %/yr concentration growth gives
    near-linear forcing growth since forcing is logarithmic in CO2), with
    natural forcing held at zero; the result is relative to ``mu0``.
    ``f2x`` cancels: the ramp is defined as a fraction of one doubling.
    """
    del f2x  # the ramp endpoint is one doubling by definition
    ramp = np.arange(1, 71) / 70.0
    response = _lag_filter(params.rho_a, ramp, 0.0)
    return float(params.lambda_a * response[-1])


def energy_balance_sensitivity(
    delta_t: float, delta_f: float, delta_q: float, f2x: float = DEFAULT_F2X
) -> float:
    """Sensitivity from period changes in temperature, forcing, heat uptake.

    ``f2x * delta_t / (delta_f - delta_q)``, the closed-form estimate used
    by observational energy-budget studies.
    """
    if delta_f == delta_q:
        raise ZeroDivisionError("delta_f equals delta_q: sensitivity undefined")
    return f2x * delta_t / (delta_f - delta_q)


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------

class TrendDesign:
    """Prepared profile-OLS evaluator for repeated fits against one forcing.

    Building the design once and reusing it across bootstrap replicates
    avoids recomputing the normalized forcing arrays; every evaluation
    recomputes the two lag columns (O(n) recursions) and solves the
    3-parameter least-squares problem by SVD.
    """

    def __init__(self, forcing: ForcingTable, first_year: int, last_year: int,
                 f2x: float, grid: RhoGrid):
        if not f2x > 0:
            raise ValueError(f"f2x must be positive, got {f2x}")
        if not forcing.covers(first_year, last_year):
            raise CoverageError(
                f"forcing table ({forcing.start_year}-{forcing.end_year}) does not cover "
                f"fit years {first_year}-{last_year}"
            )
        self.first_year = int(first_year)
        self.last_year = int(last_year)
        self.f2x = float(f2x)
        self.grid = grid
        self.n = self.last_year - self.first_year + 1
        self._fa = forcing.anthropogenic / f2x
        self._fn = forcing.natural / f2x
        self._i0 = self.first_year - forcing.start_year
        self._i1 = self.last_year - forcing.start_year + 1
        self._ones = np.ones(self.n)

    def columns(self, rho_a: float, rho_n: float) -> tuple[np.ndarray, np.ndarray]:
        ha = _lag_filter(rho_a, self._fa, self._fa[0])[self._i0:self._i1]
        hn = _lag_filter(rho_n, self._fn, self._fn[0])[self._i0:self._i1]
        return ha, hn

    def evaluate(self, y: np.ndarray, rho_a: float, rho_n: float):
        """Profile OLS at fixed lag parameters.

        Returns ``(coef, rss, fitted, cond)``; ``rss`` is ``inf`` when the
        design is ill-conditioned past the configured limit.
        """
        ha, hn = self.columns(rho_a, rho_n)
        X = np.column_stack((self._ones, ha, hn))
        coef, _, rank, sv = np.linalg.lstsq(X, y, rcond=None)
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
        if rank < 3 or cond > self.grid.condition_limit:
            return coef, np.inf, None, cond
        fitted = X @ coef
        resid = y - fitted
        rss = float(resid @ resid)
        return coef, rss, fitted, cond

    def fit(self, y: np.ndarray) -> TrendFit:
        """Grid scan plus simplex refinement of the two lag parameters."""
        y = np.asarray(y, dtype=float)
        if y.shape != (self.n,):
            raise ValueError(f"y must have length {self.n}, got {y.shape}")
        grid = self.grid
        trace: list[tuple[float, float, float]] = []
        best = (np.inf, 0.0, 0.0)
        for rho_a in grid.rho_a_values:
            for rho_n in grid.rho_n_values:
                _, rss, _, _ = self.evaluate(y, rho_a, rho_n)
                trace.append((float(rho_a), float(rho_n), rss))
                if rss < best[0]:
                    best = (rss, float(rho_a), float(rho_n))
        if not np.isfinite(best[0]):
            raise DegenerateDesignError(
                "all grid points exceeded the design condition limit "
                f"{grid.condition_limit:g}"
            )

        if grid.refine:
            def objective(v):
                rho_a = float(min(max(v[0], 0.0), grid.rho_max))
                rho_n = float(min(max(v[1], 0.0), grid.rho_max))
                _, rss, _, _ = self.evaluate(y, rho_a, rho_n)
                trace.append((rho_a, rho_n, rss))
                return rss if np.isfinite(rss) else 1e300

            minimize(
                objective,
                x0=[best[1], best[2]],
                method="Nelder-Mead",
                bounds=[(0.0, grid.rho_max), (0.0, grid.rho_max)],
                options={
                    "maxiter": grid.refine_maxiter,
                    "xatol": 1e-8,
                    "fatol": 1e-13,
                },
            )

        finite = [entry for entry in trace if np.isfinite(entry[2])]
        rho_a, rho_n = min(finite, key=lambda entry: entry[2])[:2]
        coef, rss, fitted, cond = self.evaluate(y, rho_a, rho_n)
        if not np.isfinite(rss):
            raise DegenerateDesignError(
                f"design at optimum (rho_a={rho_a:.6g}, rho_n={rho_n:.6g}) is "
                f"ill-conditioned (cond={cond:.3g})"
            )
        params = TrendParams(
            mu0=float(coef[0]),
            lambda_a=float(coef[1]),
            rho_a=rho_a,
            lambda_n=float(coef[2]),
            rho_n=rho_n,
            rho_max=grid.rho_max,
        )
        fitted_series = AnnualSeries(self.first_year, fitted, unit=UNIT_CELSIUS)
        residual_series = AnnualSeries(self.first_year, y - fitted, unit=UNIT_CELSIUS)
        cap_eps = 1e-12
        at_cap = (rho_a >= grid.rho_max - cap_eps, rho_n >= grid.rho_max - cap_eps)
        return TrendFit(
            params=params,
            fitted=fitted_series,
            residuals=residual_series,
            rss=rss,
            optimizer_trace=tuple(trace),
            at_rho_cap=at_cap,
            grid=grid,
        )


def fit_trend(
    temps: AnnualSeries,
    forcing: ForcingTable,
    f2x: float = DEFAULT_F2X,
    grid: Optional[RhoGrid] = None,
) -> TrendFit:
    """Least-squares fit of the forced-response model to a temperature record."""
    if len(temps) < 10:
        raise ValueError(f"need at least 10 annual temperatures, got {len(temps)}")
    grid = grid or RhoGrid()
    design = TrendDesign(forcing, temps.start_year, temps.end_year, f2x, grid)
    return design.fit(temps.values)


def fit_linear_trend(temps: AnnualSeries, t0: int, t1: int) -> TrendFit:
    """OLS straight line in calendar time over the window ``[t0, t1]``."""
    t0, t1 = int(t0), int(t1)
    if t1 - t0 < 2:
        raise ValueError(f"window must span at least 2 years, got [{t0}, {t1}]")
    if not temps.covers(t0, t1):
        raise CoverageError(
            f"window {t0}-{t1} outside data range {temps.start_year}-{temps.end_year}"
        )
    window = temps.window(t0, t1)
    years = window.years.astype(float)
    y = window.values
    tbar = years.mean()
    X = np.column_stack((np.ones(len(years)), years - tbar))
    coef, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    fitted = X @ coef
    resid = y - fitted
    beta = float(coef[1])
    alpha = float(coef[0] - beta * tbar)
    params = LinearTrendParams(alpha=alpha, beta=beta, t0=t0, t1=t1)
    return TrendFit(
        params=params,
        fitted=AnnualSeries(t0, fitted, unit=temps.unit),
        residuals=AnnualSeries(t0, resid, unit=temps.unit),
        rss=float(resid @ resid),
    )
