import numpy as np
import pytest

from climtrend import (
    AnnualSeries,
    DegenerateDesignError,
    ForcingTable,
    RhoGrid,
    TrendParams,
    energy_balance_sensitivity,
    fit_linear_trend,
    fit_trend,
    lag_response,
    mean_response,
    project,
    step_response,
    tcr,
)
from climtrend.series import Scenario, build_scenario


@pytest.fixture(scope="module")
def forcing():
    """Smooth anthropogenic ramp plus episodic natural spikes, 1750-2015."""
    years = np.arange(1750, 2016)
    anthro = 2.3 * ((years - 1750) / 261.0) ** 3
    natural = 0.05 * np.sin(2 * np.pi * (years - 1750) / 11.0)
    for year, mag in [(1815, -3.0), (1883, -2.0), (1902, -1.2), (1963, -1.5),
                      (1982, -1.8), (1991, -2.6)]:
        i = year - 1750
        natural[i] += mag
        natural[i + 1] += 0.6 * mag
        natural[i + 2] += 0.25 * mag
    return ForcingTable(1750, anthro, natural)


TRUTH = TrendParams(mu0=-0.1, lambda_a=1.8, rho_a=0.80, lambda_n=0.21, rho_n=0.58)


class TestLagResponse:
    def test_rho_zero_identity(self):
        x = AnnualSeries(2000, [0.3, -1.2, 4.5, 0.0])
        out = lag_response(0.0, x, spinup_value=9.9)
        assert np.array_equal(out.values, x.values)

    @pytest.mark.parametrize("rho", [0.0, 0.3, 0.8, 0.99])
    def test_dc_gain(self, rho):
        c = 1.37
        x = AnnualSeries(2000, np.full(60, c))
        out = lag_response(rho, x, spinup_value=c)
        assert np.allclose(out.values, c, rtol=1e-12, atol=1e-12)

    def test_unit_step(self):
        x = AnnualSeries(2000, np.r_[np.zeros(3), np.ones(5)])
        out = lag_response(0.5, x, spinup_value=0.0)
        expected = np.r_[np.zeros(3), 1 - 0.5 ** np.arange(1, 6)]
        assert np.allclose(out.values, expected, atol=1e-14)

    def test_linearity(self):
        rng = np.random.default_rng(0)
        xv, yv = rng.standard_normal(50), rng.standard_normal(50)
        a, b = 1.7, -0.6
        rho = 0.77
        combo = lag_response(rho, AnnualSeries(2000, a * xv + b * yv), a * 0.5 + b * 0.2)
        parts = (a * lag_response(rho, AnnualSeries(2000, xv), 0.5).values
                 + b * lag_response(rho, AnnualSeries(2000, yv), 0.2).values)
        assert np.allclose(combo.values, parts, rtol=1e-12, atol=1e-12)

    def test_rho_out_of_range(self):
        x = AnnualSeries(2000, [1.0, 2.0])
        with pytest.raises(ValueError, match="rho"):
            lag_response(1.0, x, 0.0)


class TestStepResponse:
    def test_examples(self):
        assert np.allclose(step_response(1.0, 0.0, 4), [1, 1, 1, 1])
        assert np.allclose(step_response(2.0, 0.5, 3), [1.0, 1.5, 1.75])
        assert np.allclose(step_response(0.0, 0.7, 5), np.zeros(5))

    def test_matches_lag_response_on_explicit_step(self):
        lam, rho, horizon = 1.6, 0.83, 40
        series = AnnualSeries(2000, np.ones(horizon))
        via_lag = lam * lag_response(rho, series, 0.0).values
        assert np.allclose(step_response(lam, rho, horizon), via_lag,
                           rtol=1e-12, atol=1e-12)


class TestMeanResponse:
    def test_zero_sensitivities(self, forcing):
        params = TrendParams(0.4, 0.0, 0.5, 0.0, 0.5)
        out = mean_response(params, forcing, (1900, 1950))
        assert np.allclose(out.values, 0.4)
        assert out.start_year == 1900 and out.end_year == 1950

    def test_forcing_scaling_bilinearity(self, forcing):
        c = 3.0
        base = mean_response(TRUTH, forcing, (1880, 2015))
        scaled_params = TrendParams(TRUTH.mu0, TRUTH.lambda_a / c, TRUTH.rho_a,
                                    TRUTH.lambda_n / c, TRUTH.rho_n)
        scaled = mean_response(scaled_params, forcing.scaled(c, c), (1880, 2015))
        assert np.allclose(base.values, scaled.values, rtol=1e-12)

    def test_coverage_error(self, forcing):
        with pytest.raises(Exception, match="cover"):
            mean_response(TRUTH, forcing, (1900, 2100))


class TestFitTrend:
    def test_noiseless_recovery(self, forcing):
        temps = AnnualSeries(1880, mean_response(TRUTH, forcing, (1880, 2015)).values)
        fit = fit_trend(temps, forcing)
        p = fit.params
        assert abs(p.mu0 - TRUTH.mu0) < 1e-4
        assert abs(p.lambda_a - TRUTH.lambda_a) < 1e-4
        assert abs(p.lambda_n - TRUTH.lambda_n) < 1e-4
        assert abs(p.rho_a - TRUTH.rho_a) < 1e-3
        assert abs(p.rho_n - TRUTH.rho_n) < 1e-3

    def test_profile_optimality_and_resolve(self, forcing):
        rng = np.random.default_rng(3)
        temps = AnnualSeries(
            1880,
            mean_response(TRUTH, forcing, (1880, 2015)).values + 0.1 * rng.standard_normal(136),
        )
        fit = fit_trend(temps, forcing)
        finite = [t[2] for t in fit.optimizer_trace if np.isfinite(t[2])]
        assert fit.rss <= min(finite)
        # re-solving the inner OLS at the returned lag parameters reproduces
        # the linear coefficients
        from climtrend.trend import TrendDesign

        design = TrendDesign(forcing, 1880, 2015, 3.7, fit.grid)
        coef, rss, _, _ = design.evaluate(temps.values, fit.params.rho_a, fit.params.rho_n)
        assert abs(coef[0] - fit.params.mu0) < 1e-10
        assert abs(coef[1] - fit.params.lambda_a) < 1e-10
        assert abs(coef[2] - fit.params.lambda_n) < 1e-10
        assert rss == fit.rss
        # residuals and rss are mutually consistent
        assert np.allclose(fit.residuals.values,
                           temps.values - fit.fitted.values, atol=1e-12)
        assert abs(fit.rss - fit.residuals.values @ fit.residuals.values) <= 1e-10 * fit.rss

    def test_argmin_invariance_under_forcing_rescale(self, forcing):
        rng = np.random.default_rng(4)
        temps = AnnualSeries(
            1880,
            mean_response(TRUTH, forcing, (1880, 2015)).values + 0.09 * rng.standard_normal(136),
        )
        fit1 = fit_trend(temps, forcing)
        c = 2.5
        fit2 = fit_trend(temps, forcing.scaled(c, c))
        assert abs(fit2.params.lambda_a * c - fit1.params.lambda_a) < 1e-8 * abs(fit1.params.lambda_a)
        assert abs(fit2.params.lambda_n * c - fit1.params.lambda_n) < 1e-6
        assert abs(fit2.params.rho_a - fit1.params.rho_a) < 1e-8
        assert abs(fit2.params.mu0 - fit1.params.mu0) < 1e-8
        assert abs(fit2.rss - fit1.rss) < 1e-8 * fit1.rss
        assert np.allclose(fit2.fitted.values, fit1.fitted.values, rtol=1e-8)

    def test_degenerate_design(self):
        flat = ForcingTable(1900, np.full(60, 1.0), np.full(60, 0.5))
        temps = AnnualSeries(1920, np.random.default_rng(0).standard_normal(40))
        with pytest.raises(DegenerateDesignError):
            fit_trend(temps, flat, grid=RhoGrid(n_a=5, n_n=5, refine=False))

    def test_too_short(self, forcing):
        temps = AnnualSeries(2000, np.zeros(5))
        with pytest.raises(ValueError, match="at least 10"):
            fit_trend(temps, forcing)


class TestFitLinearTrend:
    def test_exact_line(self):
        years = np.arange(1950, 2001)
        a, b = -3.4, 0.0123
        temps = AnnualSeries(1950, a + b * years)
        fit = fit_linear_trend(temps, 1950, 2000)
        assert fit.params.alpha == pytest.approx(a, rel=1e-12)
        assert fit.params.beta == pytest.approx(b, rel=1e-12)
        assert fit.rss < 1e-20

    def test_constant_series(self):
        temps = AnnualSeries(1950, np.full(30, 0.7))
        fit = fit_linear_trend(temps, 1950, 1979)
        assert fit.params.beta == pytest.approx(0.0, abs=1e-15)

    def test_window_errors(self):
        temps = AnnualSeries(1950, np.arange(30.0))
        with pytest.raises(ValueError):
            fit_linear_trend(temps, 1960, 1961)
        with pytest.raises(Exception):
            fit_linear_trend(temps, 1940, 1960)


class TestProjection:
    def test_equilibrium_convergence(self):
        years = np.arange(1900, 2201)
        anthro = np.where(years < 1950, 0.0, 2.0)
        forcing = ForcingTable(1900, anthro, np.full(len(years), 0.5))
        scenario = Scenario(forcing=forcing, label="const", splice_year=1950)
        params = TrendParams(0.2, 1.5, 0.8, 0.3, 0.5)
        out = project(params, scenario, 3.7, years=(2150, 2200))
        equilibrium = 0.2 + 1.5 * 2.0 / 3.7 + 0.3 * 0.5 / 3.7
        assert abs(out.values[-1] - equilibrium) < 0.8 ** 200 + 1e-12

    def test_zero_sensitivity_flat(self):
        forcing = ForcingTable(1900, np.linspace(0, 3, 200), np.zeros(200))
        scenario = Scenario(forcing=forcing, label="x", splice_year=2000)
        out = project(TrendParams(0.1, 0.0, 0.5, 0.0, 0.5), scenario, years=(2000, 2099))
        assert np.allclose(out.values, 0.1)

    def test_within_one_percent_of_equilibrium_30y_after_stabilization(self):
        years = np.arange(1750, 2401)
        ramp = np.clip((years - 1750) / 500.0, 0, 1) * 12.0
        forcing = ForcingTable(1750, ramp, np.zeros(len(years)))
        scenario = Scenario(forcing=forcing, label="ramp", splice_year=2015)
        params = TrendParams(0.0, 1.8, 0.80, 0.0, 0.5)
        out = project(params, scenario, 3.7, years=(2250, 2320))
        equilibrium = 1.8 * 12.0 / 3.7
        gap = abs(out.value_at(2280) - equilibrium)
        assert gap < 0.01 * equilibrium


class TestTcr:
    def test_rho_zero_gives_lambda(self):
        assert tcr(TrendParams(0.0, 1.8, 0.0, 0.5, 0.3)) == pytest.approx(1.8, rel=1e-12)

    def test_zero_sensitivity(self):
        assert tcr(TrendParams(0.0, 0.0, 0.9, 0.5, 0.3)) == 0.0

    def test_closed_form(self):
        # (1/70) * (1-rho) * sum_{k=0}^{69} rho^k (70-k), evaluated directly
        rho = 0.8
        k = np.arange(70)
        expected = 1.8 * (1 - rho) * np.sum(rho ** k * (70 - k)) / 70.0
        assert tcr(TrendParams(0.0, 1.8, rho, 0.0, 0.5)) == pytest.approx(expected, rel=1e-12)


class TestEnergyBalance:
    def test_examples(self):
        assert energy_balance_sensitivity(1.0, 3.7, 0.0, 3.7) == pytest.approx(1.0)
        assert energy_balance_sensitivity(0.0, 2.0, 0.5, 3.7) == 0.0
        assert energy_balance_sensitivity(0.75, 1.9, 0.5, 3.7) == pytest.approx(
            3.7 * 0.75 / 1.4)

    def test_degenerate(self):
        with pytest.raises(ZeroDivisionError):
            energy_balance_sensitivity(1.0, 2.0, 2.0, 3.7)


class TestParamValidation:
    def test_rho_bounds(self):
        with pytest.raises(ValueError):
            TrendParams(0.0, 1.0, 1.2, 0.0, 0.5)
        with pytest.raises(ValueError):
            TrendParams(0.0, 1.0, 0.5, 0.0, -0.1)
        with pytest.raises(ValueError):
            TrendParams(np.nan, 1.0, 0.5, 0.0, 0.1)
