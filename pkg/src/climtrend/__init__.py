"""Radiatively-forced temperature trend estimation with bootstrap UQ.

The package is organized around five layers:

* :mod:`climtrend.series` — annual series / forcing ingestion and scenarios
* :mod:`climtrend.trend` — the forced-response trend model and its fits
* :mod:`climtrend.noise` — ARMA / ARFIMA noise models and spectral tools
* :mod:`climtrend.uncertainty` — bootstrap and test procedures
* :mod:`climtrend.experiments` — seeded end-to-end study recipes (and the
  CLI in :mod:`climtrend.cli`)
"""

__version__ = "0.1.0"

from .exceptions import (
    ClimTrendError,
    CoverageError,
    DataError,
    DegenerateDesignError,
    NumericalError,
    OptimizationError,
    UnusableSampleError,
    YearGapError,
)
from .series import (
    AnnualSeries,
    ForcingTable,
    Scenario,
    build_scenario,
    load_column_map,
    normalize_forcing,
    parse_forcing_table,
    parse_temperature_csv,
)
from .trend import (
    LinearTrendParams,
    RhoGrid,
    TrendDesign,
    TrendFit,
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
from .noise import (
    ArfimaModel,
    ArmaFit,
    OrderSelection,
    Periodogram,
    RegressionArmaFit,
    Spectrum,
    arfima_spectral_density,
    arma_autocovariance,
    arma_spectral_density,
    best_ar1_kl,
    fit_arma_mle,
    fit_regression_arma,
    information_criteria,
    loglik_exact,
    periodogram,
    sample_innovations,
    select_order,
    simulate,
    smooth_periodogram,
)
from .uncertainty import (
    BlockBootstrapPvalues,
    BootstrapPvalue,
    BootstrapSample,
    LearningRow,
    PercentileInterval,
    TrendTest,
    circular_block_bootstrap_pvalue,
    learning_experiment,
    parametric_bootstrap,
    parametric_bootstrap_pvalue,
    percentile_interval,
    ttest_trend,
)
