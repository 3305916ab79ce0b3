"""Seeded end-to-end experiment recipes.

Each ``run_*`` function takes an :class:`ExperimentConfig` and writes one
report directory (tables, figures, ``config.json``, ``summary.json``)
through :class:`climtrend.reports.ReportWriter`.  Inputs default to the
bundled fixtures; every knob has an explicit default that is materialized
into the recorded config, so reports never depend on hidden state and
re-running a config is bit-identical.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from . import calibration, datasets, figures
from .exceptions import DataError
from .noise import (
    ArfimaModel,
    arma_spectral_density,
    fit_arma_mle,
    information_criteria,
    periodogram,
    sample_innovations,
    smooth_periodogram,
)
from .reports import ReportWriter
from .series import AnnualSeries, ForcingTable, Scenario, build_scenario, load_column_map, parse_forcing_table, parse_temperature_csv
from .trend import (
    DEFAULT_F2X,
    RhoGrid,
    TrendFit,
    TrendParams,
    fit_trend,
    mean_response,
    tcr,
    energy_balance_sensitivity,
)
from .uncertainty import (
    BootstrapSample,
    learning_experiment,
    parametric_bootstrap,
    percentile_interval,
)

MIN_HISTORICAL_FORCING_START = 1750


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully-resolved configuration of one experiment run."""

    name: str
    seed: int
    replicates: int
    output_dir: str = "reports"
    inputs: dict = field(default_factory=dict)
    overrides: dict = field(default_factory=dict)
    threads: int = 1

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "replicates": self.replicates,
            "output_dir": str(self.output_dir),
            "inputs": {k: str(v) for k, v in self.inputs.items()},
            "overrides": _jsonable(self.overrides),
            "threads": self.threads,
        }


@dataclass(frozen=True)
class ExperimentResult:
    directory: Path
    summary: dict


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _knobs(cfg: ExperimentConfig, defaults: dict) -> dict:
    unknown = set(cfg.overrides) - set(defaults)
    if unknown:
        raise ValueError(f"unknown override key(s) for {cfg.name}: {sorted(unknown)}")
    merged = dict(defaults)
    merged.update(cfg.overrides)
    return merged


def _input_path(cfg: ExperimentConfig, key: str, default_path) -> Path:
    return Path(cfg.inputs.get(key, default_path))


def _load_temperature(cfg: ExperimentConfig) -> tuple[AnnualSeries, Path]:
    path = _input_path(cfg, "temperature", datasets.data_path(datasets.TEMPERATURE_FILE))
    fmt = cfg.inputs.get("temperature_format", "giss_annual")
    return parse_temperature_csv(path, format=fmt), path


def _load_forcing(cfg: ExperimentConfig, require_spinup: bool = True) -> tuple[ForcingTable, Path, Path]:
    path = _input_path(cfg, "forcing", datasets.data_path(datasets.FORCING_FILE))
    cmap_path = _input_path(cfg, "forcing_columns",
                            datasets.data_path(datasets.FORCING_COLUMNS_FILE))
    table = parse_forcing_table(path, load_column_map(cmap_path))
    if require_spinup and table.start_year > MIN_HISTORICAL_FORCING_START:
        raise DataError(
            f"historical fits need forcings starting by {MIN_HISTORICAL_FORCING_START}; "
            f"table starts {table.start_year}"
        )
    return table, path, cmap_path


def _load_scenario(cfg: ExperimentConfig, forcing: ForcingTable, splice_year: int):
    path = _input_path(cfg, "scenario", datasets.data_path(datasets.RCP85_FILE))
    cmap_path = _input_path(cfg, "scenario_columns",
                            datasets.data_path(datasets.RCP85_COLUMNS_FILE))
    future = parse_forcing_table(path, load_column_map(cmap_path))
    scenario = build_scenario(forcing, future, splice_year, label=path.stem)
    return scenario, path, cmap_path


def _grid_from(knobs: dict) -> RhoGrid:
    return RhoGrid(n_a=knobs["grid_n"], n_n=knobs["grid_n"], rho_max=knobs["rho_max"])


def _params_from_row(row) -> TrendParams:
    return TrendParams(mu0=row[0], lambda_a=row[1], rho_a=row[2],
                       lambda_n=row[3], rho_n=row[4])


def _relative_response(params: TrendParams, forcing, years: tuple[int, int],
                       f2x: float, base=(1951, 1980)) -> np.ndarray:
    """Mean response over ``years`` minus its own mean over ``base``."""
    first = min(years[0], base[0])
    m = mean_response(params, forcing, (first, years[1]), f2x)
    baseline = float(np.mean(m.window(base[0], base[1]).values))
    return m.window(years[0], years[1]).values - baseline


# ---------------------------------------------------------------------------
# Historical fit (+ bootstrap): the headline pipeline
# ---------------------------------------------------------------------------

HISTORICAL_DEFAULTS = {
    "f2x": DEFAULT_F2X,
    "rho_max": 0.9999,
    "grid_n": 40,
    "noise_order": (4, 1),
    "p_max": 5,
    "q_max": 2,
    "smooth_width": 5,
    "smooth_passes": 2,
    "percentiles": ((5.0, 95.0), (2.5, 97.5), (0.5, 99.5)),
}


def _noise_order_table(residuals: np.ndarray, p_max: int, q_max: int):
    rows = []
    fits = {}
    n = len(residuals)
    for p in range(p_max + 1):
        for q in range(q_max + 1):
            try:
                fit = fit_arma_mle(residuals, p, q)
                aicc, bic = information_criteria(fit.loglik, p + q + 1, n)
                rows.append((p, q, fit.loglik, aicc, bic, fit.converged))
                fits[(p, q)] = fit
            except Exception:
                rows.append((p, q, float("nan"), float("nan"), float("nan"), False))
    return rows, fits


def _select_from_table(rows, criterion_index):
    valid = [r for r in rows if np.isfinite(r[criterion_index])]
    best = min(valid, key=lambda r: (r[criterion_index], r[0] + r[1], r[1]))
    return best[0], best[1]


def run_historical_fit(cfg: ExperimentConfig) -> ExperimentResult:
    """Fit the trend model to the historical record and quantify uncertainty.

    Writes the fitted series, residual periodogram (raw and smoothed),
    the ARMA order table with AICc/BIC, innovations Q-Q data for the
    adopted noise model, bootstrap replicate parameters, and percentile
    intervals.
    """
    knobs = _knobs(cfg, HISTORICAL_DEFAULTS)
    temps, temp_path = _load_temperature(cfg)
    forcing, forcing_path, cmap_path = _load_forcing(cfg)
    writer = ReportWriter(cfg.output_dir, cfg.name, {**cfg.to_dict(), "effective": _jsonable(knobs)},
                          inputs={"temperature": temp_path, "forcing": forcing_path,
                                  "forcing_columns": cmap_path})

    fit = fit_trend(temps, forcing, knobs["f2x"], _grid_from(knobs))
    writer.write_table(
        "fitted_series.csv",
        ["year", "observed", "fitted", "residual"],
        zip(temps.years.tolist(), temps.values, fit.fitted.values, fit.residuals.values),
    )
    fit.to_json(writer.path("trend_fit.json"))

    raw = periodogram(fit.residuals)
    smoothed = smooth_periodogram(raw, knobs["smooth_width"], knobs["smooth_passes"])
    writer.write_table(
        "periodogram.csv",
        ["frequency", "raw", "smoothed"],
        zip(raw.frequencies, raw.ordinates, smoothed.ordinates),
    )

    order_rows, order_fits = _noise_order_table(fit.residuals.values,
                                                knobs["p_max"], knobs["q_max"])
    writer.write_table("noise_orders.csv",
                       ["p", "q", "loglik", "aicc", "bic", "converged"], order_rows)
    aicc_order = _select_from_table(order_rows, 3)
    bic_order = _select_from_table(order_rows, 4)

    noise_order = tuple(knobs["noise_order"])
    noise_fit = order_fits.get(noise_order) or fit_arma_mle(fit.residuals.values, *noise_order)
    alt_order = bic_order if bic_order != noise_order else aicc_order
    alt_fit = order_fits.get(alt_order) or fit_arma_mle(fit.residuals.values, *alt_order)

    writer.write_table(
        "noise_spectra.csv",
        ["frequency",
         f"arma_{noise_order[0]}_{noise_order[1]}",
         f"arma_{alt_order[0]}_{alt_order[1]}"],
        zip(raw.frequencies,
            arma_spectral_density(noise_fit.model, raw.frequencies).power,
            arma_spectral_density(alt_fit.model, raw.frequencies).power),
    )

    innov = np.sort(sample_innovations(noise_fit.model, fit.residuals.values))
    theo = stats.norm.ppf((np.arange(1, len(innov) + 1) - 0.5) / len(innov))
    writer.write_table("innovations_qq.csv",
                       ["normal_quantile", "innovation_quantile"], zip(theo, innov))

    sample = parametric_bootstrap(fit, noise_fit.model, forcing, b=cfg.replicates,
                                  seed=cfg.seed, refit_noise_order=noise_order,
                                  f2x=knobs["f2x"], threads=cfg.threads)
    sample.to_csv(writer.path("bootstrap_replicates.csv"))
    interval_rows = []
    for param in ("lambda_a", "lambda_n", "rho_a", "rho_n", "mu0", "sigma"):
        for lo, hi in knobs["percentiles"]:
            iv = percentile_interval(sample, param, lo, hi)
            interval_rows.append((param, lo, hi, iv.lower, iv.upper))
    writer.write_table("intervals.csv",
                       ["param", "lower_pct", "upper_pct", "lower", "upper"],
                       interval_rows)

    writer.save_figure("fit.png", figures.fit_figure(
        temps.years, temps.values, fit.fitted.values))
    writer.save_figure("periodogram.png", figures.periodogram_figure(
        raw.frequencies, raw.ordinates, smoothed.ordinates,
        {f"ARMA({noise_order[0]},{noise_order[1]})":
             (raw.frequencies, arma_spectral_density(noise_fit.model, raw.frequencies).power),
         f"ARMA({alt_order[0]},{alt_order[1]})":
             (raw.frequencies, arma_spectral_density(alt_fit.model, raw.frequencies).power)}))
    writer.save_figure("innovations_qq.png", figures.qq_figure(theo, innov))
    writer.save_figure("bootstrap_cloud.png", figures.bootstrap_cloud_figure(
        sample.column("lambda_a"), sample.column("rho_a")))

    summary = {
        "params": fit.params.to_dict(),
        "rss": fit.rss,
        "at_rho_cap": list(fit.at_rho_cap),
        "tcr": tcr(fit.params, knobs["f2x"]),
        "noise_order": list(noise_order),
        "noise_model": noise_fit.model.to_dict(),
        "noise_loglik": noise_fit.loglik,
        "alt_order": list(alt_order),
        "alt_model": alt_fit.model.to_dict(),
        "aicc_selected_order": list(aicc_order),
        "bic_selected_order": list(bic_order),
        "bootstrap": sample.summary_dict(),
        "intervals": {
            f"{param}_{lo:g}_{hi:g}": [lower, upper]
            for (param, lo, hi, lower, upper) in interval_rows
        },
    }
    return ExperimentResult(writer.directory, writer_finalize(writer, summary))


def writer_finalize(writer: ReportWriter, summary: dict) -> dict:
    summary = _jsonable(summary)
    writer.finalize(summary)
    return summary


BOOTSTRAP_DEFAULTS = {
    "f2x": DEFAULT_F2X,
    "rho_max": 0.9999,
    "grid_n": 40,
    "noise_order": (4, 1),
    "percentiles": ((5.0, 95.0), (2.5, 97.5), (0.5, 99.5)),
}


def run_bootstrap(cfg: ExperimentConfig) -> ExperimentResult:
    """Standalone parametric bootstrap of the two-step historical fit."""
    knobs = _knobs(cfg, BOOTSTRAP_DEFAULTS)
    temps, temp_path = _load_temperature(cfg)
    forcing, forcing_path, cmap_path = _load_forcing(cfg)
    writer = ReportWriter(cfg.output_dir, cfg.name,
                          {**cfg.to_dict(), "effective": _jsonable(knobs)},
                          inputs={"temperature": temp_path, "forcing": forcing_path,
                                  "forcing_columns": cmap_path})
    fit = fit_trend(temps, forcing, knobs["f2x"], _grid_from(knobs))
    noise_order = tuple(knobs["noise_order"])
    noise = fit_arma_mle(fit.residuals.values, *noise_order)
    sample = parametric_bootstrap(fit, noise.model, forcing, b=cfg.replicates,
                                  seed=cfg.seed, refit_noise_order=noise_order,
                                  f2x=knobs["f2x"], threads=cfg.threads)
    sample.to_csv(writer.path("bootstrap_replicates.csv"))
    writer.write_json("bootstrap_summary.json", _jsonable(sample.summary_dict()))
    interval_rows = []
    for param in ("lambda_a", "lambda_n", "rho_a", "rho_n", "mu0", "sigma"):
        for lo, hi in knobs["percentiles"]:
            iv = percentile_interval(sample, param, lo, hi)
            interval_rows.append((param, lo, hi, iv.lower, iv.upper))
    writer.write_table("intervals.csv",
                       ["param", "lower_pct", "upper_pct", "lower", "upper"],
                       interval_rows)
    writer.save_figure("bootstrap_cloud.png", figures.bootstrap_cloud_figure(
        sample.column("lambda_a"), sample.column("rho_a")))
    summary = {
        "params": fit.params.to_dict(),
        "noise_model": noise.model.to_dict(),
        "bootstrap": sample.summary_dict(),
        "intervals": {
            f"{param}_{lo:g}_{hi:g}": [lower, upper]
            for (param, lo, hi, lower, upper) in interval_rows
        },
    }
    return ExperimentResult(writer.directory, writer_finalize(writer, summary))


# ---------------------------------------------------------------------------
# Projection bands under the spliced scenario
# ---------------------------------------------------------------------------

PROJECTION_DEFAULTS = {
    "f2x": DEFAULT_F2X,
    "splice_year": 2015,
    "end_year": 2400,
    "percentiles": (2.5, 97.5),
    "baseline": (1951, 1980),
}


def _read_fit_report(report_dir) -> tuple[TrendParams, ArfimaModel, np.ndarray, dict]:
    report_dir = Path(report_dir)
    with open(report_dir / "summary.json", "r", encoding="utf-8") as fh:
        summary = json.load(fh)["results"]
    params = TrendParams(**{k: v for k, v in summary["params"].items()})
    noise = ArfimaModel.from_dict(summary["noise_model"])
    reps = []
    with open(report_dir / "bootstrap_replicates.csv", "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        for row in reader:
            reps.append([float(v) for v in row])
    return params, noise, np.asarray(reps), summary


def run_projection(cfg: ExperimentConfig) -> ExperimentResult:
    """Pointwise mean-response bands under the spliced scenario forcing."""
    knobs = _knobs(cfg, PROJECTION_DEFAULTS)
    fit_report = Path(cfg.inputs.get("fit_report", ""))
    if not fit_report.name:
        raise DataError("projection needs inputs.fit_report (a run_historical_fit directory)")
    params, _noise, reps, fit_summary = _read_fit_report(fit_report)
    temps, temp_path = _load_temperature(cfg)
    forcing, forcing_path, cmap_path = _load_forcing(cfg)
    scenario, scen_path, scen_cmap = _load_scenario(cfg, forcing, knobs["splice_year"])
    writer = ReportWriter(cfg.output_dir, cfg.name,
                          {**cfg.to_dict(), "effective": _jsonable(knobs)},
                          inputs={"temperature": temp_path, "forcing": forcing_path,
                                  "forcing_columns": cmap_path, "scenario": scen_path,
                                  "scenario_columns": scen_cmap,
                                  "fit_report_summary": fit_report / "summary.json"})

    start = temps.start_year
    end = int(knobs["end_year"])
    years = np.arange(start, end + 1)
    base = tuple(knobs["baseline"])
    f2x = knobs["f2x"]
    point = _relative_response(params, scenario.forcing, (start, end), f2x, base)

    lo_pct, hi_pct = knobs["percentiles"]
    paths = np.empty((len(reps), len(years)))
    for i, row in enumerate(reps):
        paths[i] = _relative_response(_params_from_row(row), scenario.forcing,
                                      (start, end), f2x, base)
    lower = np.percentile(paths, lo_pct, axis=0)
    upper = np.percentile(paths, hi_pct, axis=0)

    writer.write_table("projection_bands.csv",
                       ["year", "point", "lower", "upper"],
                       zip(years.tolist(), point, lower, upper))
    writer.save_figure("projection.png", figures.projection_figure(
        temps.years, temps.values, years, point, lower, upper))

    widths = upper - lower
    decades = [(int(y0), float(np.median(widths[(years >= y0) & (years < y0 + 10)])))
               for y0 in range(2020, 2250, 10)]
    writer.write_table("band_width_by_decade.csv",
                       ["decade_start", "median_width"], decades)

    year2000 = int(np.where(years == 2000)[0][0])
    summary = {
        "params": params.to_dict(),
        "percentiles": [lo_pct, hi_pct],
        "year_2000_band": [float(lower[year2000]), float(upper[year2000])],
        "year_2000_point": float(point[year2000]),
        "replicates_used": int(len(reps)),
        "median_band_width_by_decade": decades,
    }
    return ExperimentResult(writer.directory, writer_finalize(writer, summary))


# ---------------------------------------------------------------------------
# Learning curve
# ---------------------------------------------------------------------------

LEARNING_DEFAULTS = {
    "f2x": DEFAULT_F2X,
    "rho_max": 0.9999,
    "grid_n": 40,
    "noise_order": (4, 1),
    "splice_year": 2015,
    "end_years": (2025, 2050, 2075, 2100),
    "percentiles": (2.5, 97.5),
}


def run_learning_curve(cfg: ExperimentConfig) -> ExperimentResult:
    """How the sensitivity interval narrows as the synthetic record grows."""
    knobs = _knobs(cfg, LEARNING_DEFAULTS)
    temps, temp_path = _load_temperature(cfg)
    forcing, forcing_path, cmap_path = _load_forcing(cfg)
    scenario, scen_path, scen_cmap = _load_scenario(cfg, forcing, knobs["splice_year"])
    writer = ReportWriter(cfg.output_dir, cfg.name,
                          {**cfg.to_dict(), "effective": _jsonable(knobs)},
                          inputs={"temperature": temp_path, "forcing": forcing_path,
                                  "forcing_columns": cmap_path, "scenario": scen_path,
                                  "scenario_columns": scen_cmap})

    fit = fit_trend(temps, forcing, knobs["f2x"], _grid_from(knobs))
    noise = fit_arma_mle(fit.residuals.values, *knobs["noise_order"]).model
    rows = learning_experiment(fit, noise, scenario, knobs["end_years"],
                               b=cfg.replicates, seed=cfg.seed, f2x=knobs["f2x"],
                               percentiles=tuple(knobs["percentiles"]),
                               threads=cfg.threads)
    writer.write_table(
        "learning_curve.csv",
        ["end_year", "lower_pct", "upper_pct", "lambda_a_lower", "lambda_a_upper",
         "warming_from_preindustrial", "b", "failures"],
        [(r.end_year, r.interval.lower_pct, r.interval.upper_pct, r.interval.lower,
          r.interval.upper, r.warming_from_preindustrial, r.b, r.failures) for r in rows],
    )
    writer.save_figure("learning_curve.png", figures.learning_curve_figure(
        [r.end_year for r in rows], [r.interval.lower for r in rows],
        [r.interval.upper for r in rows], fit.params.lambda_a))
    summary = {
        "params": fit.params.to_dict(),
        "rows": [{"end_year": r.end_year,
                  "interval": [r.interval.lower, r.interval.upper],
                  "warming_from_preindustrial": r.warming_from_preindustrial,
                  "failures": r.failures} for r in rows],
    }
    return ExperimentResult(writer.directory, writer_finalize(writer, summary))


# ---------------------------------------------------------------------------
# Calibration study
# ---------------------------------------------------------------------------

CALIBRATION_DEFAULTS = {
    "cells": calibration.DEFAULT_CELLS,
    "inner_b": 199,
    "alphas": (0.01, 0.05, 0.10),
    "aicc_p_max": 2,
    "aicc_q_max": 2,
    "block_lengths": None,   # per-n default when None
}


def run_calibration_study(cfg: ExperimentConfig) -> ExperimentResult:
    """Five p-value procedures on synthetic correlated trendless series."""
    knobs = _knobs(cfg, CALIBRATION_DEFAULTS)
    writer = ReportWriter(cfg.output_dir, cfg.name,
                          {**cfg.to_dict(), "effective": _jsonable(knobs)})
    type_one_rows = []
    ks_rows = []
    block_rows = []
    qq_cells = {}
    cell_index = []
    for idx, cell in enumerate(knobs["cells"]):
        model = cell["model"]
        n = int(cell["n"])
        methods = tuple(cell["methods"])
        result = calibration.run_cell(
            model, n, methods,
            replicates=cfg.replicates,
            inner_b=knobs["inner_b"],
            seed=[cfg.seed, idx],
            block_lengths=knobs["block_lengths"],
            aicc_p_max=knobs["aicc_p_max"],
            aicc_q_max=knobs["aicc_q_max"],
            threads=cfg.threads,
        )
        type_one_rows.extend(result.type_one_rates(knobs["alphas"]))
        ks_rows.extend(result.ks_rows())
        header = ["replicate"] + sorted(result.pvalues)
        columns = [result.pvalues[m] for m in sorted(result.pvalues)]
        length = min(len(c) for c in columns)
        writer.write_table(
            f"pvalues_{model}_n{n}.csv", header,
            ((i, *[col[i] for col in columns]) for i in range(length)),
        )
        if result.block_pvalues is not None:
            for j, L in enumerate(result.block_lengths):
                block_rows.append((model, n, L,
                                   calibration.ks_distance_from_uniform(result.block_pvalues[:, j]),
                                   float(np.mean(result.block_pvalues[:, j] <= 0.05)),
                                   L == result.selected_block_length))
        for method, ps in result.pvalues.items():
            qq_cells[(f"{model} {method}", n)] = np.sort(ps)
        cell_index.append((model, n, ",".join(methods)))

    writer.write_table("cells.csv", ["model", "n", "methods"], cell_index)
    writer.write_table("type_one.csv",
                       ["model", "n", "method", "alpha", "rate", "n_effective"],
                       type_one_rows)
    writer.write_table("ks_distance.csv", ["model", "n", "method", "ks"], ks_rows)
    if block_rows:
        writer.write_table("block_lengths.csv",
                           ["model", "n", "block_length", "ks", "rate_at_5pct", "selected"],
                           block_rows)
    models_seen = sorted({row[0] for row in ks_rows})
    for model in models_seen:
        cells = {(label.split(" ", 1)[1], n): ps
                 for (label, n), ps in qq_cells.items() if label.startswith(model + " ")}
        if cells:
            writer.save_figure(f"qq_{model}.png", figures.pvalue_qq_grid_figure(cells))

    summary = {
        "cells": [{"model": m, "n": n, "methods": meth} for (m, n, meth) in cell_index],
        "type_one": [
            {"model": m, "n": n, "method": method, "alpha": alpha, "rate": rate}
            for (m, n, method, alpha, rate, _ne) in type_one_rows
        ],
        "ks": [{"model": m, "n": n, "method": method, "ks": ks}
               for (m, n, method, ks) in ks_rows],
    }
    return ExperimentResult(writer.directory, writer_finalize(writer, summary))


# ---------------------------------------------------------------------------
# Forcing-scaling and ensemble input-uncertainty experiments
# ---------------------------------------------------------------------------

SCALING_DEFAULTS = {
    "f2x": DEFAULT_F2X,
    "rho_max": 0.9999,
    "grid_n": 40,
    "reference_year": 2011,
    "targets": (1.13, 3.33),
}


def run_forcing_scaling(cfg: ExperimentConfig) -> ExperimentResult:
    """Refit with the anthropogenic trajectory rescaled to interval endpoints."""
    knobs = _knobs(cfg, SCALING_DEFAULTS)
    temps, temp_path = _load_temperature(cfg)
    forcing, forcing_path, cmap_path = _load_forcing(cfg)
    writer = ReportWriter(cfg.output_dir, cfg.name,
                          {**cfg.to_dict(), "effective": _jsonable(knobs)},
                          inputs={"temperature": temp_path, "forcing": forcing_path,
                                  "forcing_columns": cmap_path})
    ref_year = int(knobs["reference_year"])
    reference = forcing.anthropogenic_at(ref_year)
    rows = []
    grid = _grid_from(knobs)
    for target in (reference, *knobs["targets"]):
        factor = float(target) / reference
        fit = fit_trend(temps, forcing.scaled(anthropogenic_factor=factor),
                        knobs["f2x"], grid)
        p = fit.params
        rows.append((float(target), factor, p.lambda_a, p.rho_a, p.lambda_n,
                     p.rho_n, p.mu0, fit.rss))
    writer.write_table(
        "forcing_scaling.csv",
        ["anthro_at_reference_year", "scale_factor", "lambda_a", "rho_a",
         "lambda_n", "rho_n", "mu0", "rss"],
        rows,
    )
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.plot([r[0] for r in rows], [r[2] for r in rows], "o-", color="firebrick")
    ax.set_xlabel(f"net anthropogenic forcing at {ref_year} (W/m2)")
    ax.set_ylabel("lambda_a (degC per doubling)")
    ax.grid(alpha=0.25)
    fig.tight_layout()
    writer.save_figure("forcing_scaling.png", fig)

    summary = {
        "reference_year": ref_year,
        "reference_anthro": float(reference),
        "rows": [{"target": r[0], "factor": r[1], "lambda_a": r[2], "rho_a": r[3],
                  "lambda_n": r[4], "rho_n": r[5]} for r in rows],
    }
    return ExperimentResult(writer.directory, writer_finalize(writer, summary))


ENSEMBLE_DEFAULTS = {
    "f2x": DEFAULT_F2X,
    "rho_max": 0.9999,
    "grid_n": 40,
}


def run_ensemble_refit(cfg: ExperimentConfig) -> ExperimentResult:
    """Refit the trend model on each temperature-ensemble member."""
    knobs = _knobs(cfg, ENSEMBLE_DEFAULTS)
    ens_dir = Path(cfg.inputs.get("ensemble_dir", datasets.data_dir() / datasets.ENSEMBLE_DIR))
    member_paths = sorted(Path(ens_dir).glob("*.csv"))
    if not member_paths:
        raise DataError(f"no ensemble member files found in {ens_dir}")
    forcing, forcing_path, cmap_path = _load_forcing(cfg)
    writer = ReportWriter(cfg.output_dir, cfg.name,
                          {**cfg.to_dict(), "effective": _jsonable(knobs)},
                          inputs={"forcing": forcing_path, "forcing_columns": cmap_path})
    grid = _grid_from(knobs)
    rows = []
    failures = []
    for path in member_paths:
        member = parse_temperature_csv(path, format="ensemble_member")
        try:
            fit = fit_trend(member, forcing, knobs["f2x"], grid)
        except Exception as exc:  # per-member failures are reported, not fatal
            failures.append((path.name, str(exc)))
            continue
        p = fit.params
        rows.append((path.name, p.mu0, p.lambda_a, p.rho_a, p.lambda_n, p.rho_n, fit.rss))
    writer.write_table(
        "ensemble_params.csv",
        ["member", "mu0", "lambda_a", "rho_a", "lambda_n", "rho_n", "rss"],
        rows,
    )
    if failures:
        writer.write_table("ensemble_failures.csv", ["member", "error"], failures)
    lam = np.array([r[2] for r in rows])
    rho = np.array([r[3] for r in rows])
    writer.save_figure("ensemble.png", figures.ensemble_figure(lam, rho))

    def spread(values):
        return {
            "min": float(values.min()), "max": float(values.max()),
            "q25": float(np.percentile(values, 25)),
            "median": float(np.percentile(values, 50)),
            "q75": float(np.percentile(values, 75)),
        }

    summary = {
        "members": len(member_paths),
        "failures": len(failures),
        "lambda_a": spread(lam),
        "rho_a": spread(rho),
        "lambda_n": spread(np.array([r[4] for r in rows])),
        "rho_n": spread(np.array([r[5] for r in rows])),
    }
    return ExperimentResult(writer.directory, writer_finalize(writer, summary))


# ---------------------------------------------------------------------------
# TCR report
# ---------------------------------------------------------------------------

TCR_DEFAULTS = {
    "f2x": DEFAULT_F2X,
    "percentiles": (2.5, 97.5),
    "energy_balance_rows": (),
}


def run_tcr_report(cfg: ExperimentConfig) -> ExperimentResult:
    """Point TCR plus its bootstrap percentile interval."""
    knobs = _knobs(cfg, TCR_DEFAULTS)
    fit_report = Path(cfg.inputs.get("fit_report", ""))
    if not fit_report.name:
        raise DataError("tcr report needs inputs.fit_report (a run_historical_fit directory)")
    params, _noise, reps, _summary = _read_fit_report(fit_report)
    writer = ReportWriter(cfg.output_dir, cfg.name,
                          {**cfg.to_dict(), "effective": _jsonable(knobs)},
                          inputs={"fit_report_summary": fit_report / "summary.json"})
    f2x = knobs["f2x"]
    point = tcr(params, f2x)
    tcrs = np.array([tcr(_params_from_row(row), f2x) for row in reps])
    lo_pct, hi_pct = knobs["percentiles"]
    lo, hi = np.percentile(tcrs, [lo_pct, hi_pct], method="linear")
    writer.write_table("tcr_replicates.csv", ["replicate", "tcr"],
                       ((i, v) for i, v in enumerate(tcrs)))
    writer.write_table("tcr.csv",
                       ["point", "lower_pct", "upper_pct", "lower", "upper"],
                       [(point, lo_pct, hi_pct, float(lo), float(hi))])
    eb_rows = []
    for row in knobs["energy_balance_rows"]:
        sens = energy_balance_sensitivity(row["delta_t"], row["delta_f"],
                                          row["delta_q"], f2x)
        eb_rows.append((row.get("label", ""), row["delta_t"], row["delta_f"],
                        row["delta_q"], sens))
    if eb_rows:
        writer.write_table("energy_balance.csv",
                           ["label", "delta_t", "delta_f", "delta_q", "sensitivity"],
                           eb_rows)
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.hist(tcrs, bins=40, color="steelblue", alpha=0.85)
    ax.axvline(point, color="crimson", lw=1.5, label=f"point = {point:.2f}")
    ax.set_xlabel("TCR (degC)")
    ax.set_ylabel("bootstrap replicates")
    ax.legend(frameon=False)
    fig.tight_layout()
    writer.save_figure("tcr.png", fig)
    summary = {
        "tcr_point": point,
        "interval": [float(lo), float(hi)],
        "percentiles": [lo_pct, hi_pct],
        "energy_balance": [
            {"label": r[0], "delta_t": r[1], "delta_f": r[2], "delta_q": r[3],
             "sensitivity": r[4]} for r in eb_rows
        ],
    }
    return ExperimentResult(writer.directory, writer_finalize(writer, summary))
