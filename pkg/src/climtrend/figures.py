"""Figure rendering for the experiment reports.

Each report directory gets rendered PNGs alongside the plot-ready CSVs,
so a run is inspectable without further tooling.  All rendering uses the
Agg backend and writes no timestamps or host metadata.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import numpy as np
import matplotlib.pyplot as plt


def fit_figure(years, observed, fitted, label="forced-response fit"):
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(years, observed, color="0.35", lw=0.9, label="observed")
    ax.plot(years, fitted, color="crimson", lw=1.8, label=label)
    ax.set_xlabel("year")
    ax.set_ylabel("temperature anomaly (degC)")
    ax.legend(frameon=False)
    ax.grid(alpha=0.25)
    fig.tight_layout()
    return fig


def periodogram_figure(freqs, raw, smoothed, model_spectra=None):
    """Residual periodogram with smoothed estimate and model overlays.

    ``model_spectra`` maps label -> (freqs, power).
    """
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.loglog(freqs, raw, color="0.7", lw=0.8, label="raw periodogram")
    ax.loglog(freqs, smoothed, color="k", lw=1.6, label="smoothed (width 5, twice)")
    if model_spectra:
        for label, (f, p) in model_spectra.items():
            ax.loglog(f, p, lw=1.4, label=label)
    ax.set_xlabel("frequency (rad/yr)")
    ax.set_ylabel("power")
    ax.legend(frameon=False, fontsize=9)
    fig.tight_layout()
    return fig


def qq_figure(theoretical, sample, xlabel="normal quantile", ylabel="sample quantile"):
    fig, ax = plt.subplots(figsize=(4.8, 4.8))
    ax.plot(theoretical, sample, "o", ms=3, color="steelblue")
    lim = [min(theoretical.min(), sample.min()), max(theoretical.max(), sample.max())]
    ax.plot(lim, lim, color="0.4", lw=1)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    return fig


def bootstrap_cloud_figure(lambda_a, rho_a):
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.semilogy(rho_a, lambda_a, ".", ms=3, alpha=0.4, color="darkslateblue")
    ax.set_xlabel("rho_a")
    ax.set_ylabel("lambda_a (degC per doubling)")
    ax.grid(alpha=0.25)
    fig.tight_layout()
    return fig


def projection_figure(years_obs, observed, years, point, lower, upper):
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.fill_between(years, lower, upper, color="lightsteelblue", alpha=0.8,
                    label="2.5-97.5% mean-response band")
    ax.plot(years, point, color="navy", lw=1.6, label="point projection")
    ax.plot(years_obs, observed, color="k", lw=0.9, label="observed")
    ax.set_xlabel("year")
    ax.set_ylabel("anomaly vs 1951-1980 fitted mean (degC)")
    ax.legend(frameon=False, loc="upper left")
    ax.grid(alpha=0.25)
    fig.tight_layout()
    return fig


def learning_curve_figure(end_years, lower, upper, point):
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    ax.fill_between(end_years, lower, upper, color="wheat", alpha=0.9,
                    label="2.5-97.5% interval")
    ax.axhline(point, color="crimson", lw=1.2, label="historical point estimate")
    ax.set_yscale("log")
    ax.set_xlabel("synthetic record end year")
    ax.set_ylabel("lambda_a (degC per doubling)")
    ax.legend(frameon=False)
    ax.grid(alpha=0.25)
    fig.tight_layout()
    return fig


def pvalue_qq_grid_figure(cells):
    """Grid of p-value Q-Q plots; cells maps (row_label, col_label) -> sorted p."""
    rows = sorted({key[0] for key in cells})
    cols = sorted({key[1] for key in cells})
    fig, axes = plt.subplots(len(rows), len(cols),
                             figsize=(2.4 * len(cols) + 1, 2.4 * len(rows) + 1),
                             squeeze=False)
    for i, row in enumerate(rows):
        for j, col in enumerate(cols):
            ax = axes[i][j]
            ps = cells.get((row, col))
            if ps is not None and len(ps):
                u = (np.arange(1, len(ps) + 1) - 0.5) / len(ps)
                ax.plot(u, np.sort(ps), lw=1.1, color="steelblue")
            ax.plot([0, 1], [0, 1], color="0.6", lw=0.8)
            ax.set_xlim(0, 1)
            ax.set_ylim(0, 1)
            ax.set_xticks([0, 1])
            ax.set_yticks([0, 1])
            if i == 0:
                ax.set_title(str(col), fontsize=9)
            if j == 0:
                ax.set_ylabel(str(row), fontsize=8)
    fig.tight_layout()
    return fig


def spectra_figure(entries):
    """Overlayed spectra; entries maps label -> (freqs, power)."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, (freqs, power) in entries.items():
        ax.loglog(freqs, power, lw=1.4, label=label)
    ax.set_xlabel("frequency (rad)")
    ax.set_ylabel("power")
    ax.legend(frameon=False, fontsize=9)
    fig.tight_layout()
    return fig


def ensemble_figure(lambda_a, rho_a):
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.plot(rho_a, lambda_a, "o", ms=5, color="seagreen", alpha=0.8)
    ax.set_xlabel("rho_a")
    ax.set_ylabel("lambda_a (degC per doubling)")
    ax.grid(alpha=0.25)
    fig.tight_layout()
    return fig
