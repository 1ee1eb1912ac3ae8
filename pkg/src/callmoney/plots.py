"""Render the figure-data CSV content to PNG files.

Imported lazily by the CLI so that plain data runs never pay the
matplotlib import.  These are working plots for eyeballing the CSV
artifacts, not publication graphics: single Agg backend, default style,
one ``render_figureN`` per figure command.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")  # headless: select before pyplot import

import matplotlib.pyplot as plt
import numpy as np

__all__ = [f"render_figure{n}" for n in range(1, 8)]


def _save(fig, png_path: str) -> None:
    fig.tight_layout()
    fig.savefig(png_path, dpi=144)
    plt.close(fig)


def render_figure1(png_path, demand_rate, demand_t0, demand_t10,
                   path_pool, path_rate) -> None:
    """Supply/demand curves and the sample path in the price-quantity plane."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.plot(path_pool, path_rate, lw=0.4, color="0.55", label="sample path $(q_t, r_L(t))$")
    ax.plot(demand_t0, demand_rate, lw=2.0, label="demand at $t=0$")
    ax.plot(demand_t10, demand_rate, lw=2.0, label="demand at $t=10$")
    ax.axvline(path_pool[0], ls="--", lw=1.2, color="k", label="supply at $t=0$")
    ax.axvline(path_pool[-1], ls=":", lw=1.2, color="k", label="supply at $t=10$")
    ax.set_xlabel("loan quantity $q$")
    ax.set_ylabel("margin rate $r_L$")
    ax.legend(fontsize=8)
    _save(fig, png_path)


def render_figure2(png_path, path_t, path_leverage, path_rate,
                   stat_t, mean_lev, std_lev, mean_rate, std_rate) -> None:
    """Leverage and rate sample paths with ensemble mean and std bands."""
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7.2, 6.4), sharex=True)
    for ax, y, m, s, label in (
        (ax1, path_leverage, mean_lev, std_lev, "leverage $b_t$"),
        (ax2, path_rate, mean_rate, std_rate, "rate $r_L(t)$"),
    ):
        ax.plot(path_t, y, lw=0.4, color="0.6", label="sample path")
        ax.plot(stat_t, m, lw=1.8, label="mean")
        ax.fill_between(stat_t, m - s, m + s, alpha=0.25, label="$\\pm$1 std")
        ax.set_ylabel(label)
        ax.legend(fontsize=8)
    ax2.set_xlabel("years")
    _save(fig, png_path)


def render_figure3(png_path, path_t, path_growth, stat_t, mean_g, std_g) -> None:
    """Optimal growth coefficient path with mean and std band."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.plot(path_t, path_growth, lw=0.4, color="0.6", label="sample path $\\Gamma_t$")
    ax.plot(stat_t, mean_g, lw=1.8, label="mean")
    ax.fill_between(stat_t, mean_g - std_g, mean_g + std_g, alpha=0.25,
                    label="$\\pm$1 std")
    ax.set_xlabel("years")
    ax.set_ylabel("growth coefficient $\\Gamma_t$")
    ax.legend(fontsize=8)
    _save(fig, png_path)


def render_figure4(png_path, t, std_rel, lower, upper) -> None:
    """Relative-size dispersion against its analytic envelope."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.plot(t, std_rel, lw=1.8, label="Std$(q_t/V_t)$")
    ax.plot(t, lower, lw=1.2, ls="--", label="lower bound")
    ax.plot(t, upper, lw=1.2, ls="--", label="upper bound")
    ax.set_xlabel("years")
    ax.set_ylabel("standard deviation")
    ax.legend(fontsize=8)
    _save(fig, png_path)


def render_figure5(png_path, t, g_pool, g_index, g_equity, choke, nu) -> None:
    """Realized growth rates of pool, index, and equity on one path."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.plot(t, g_equity, lw=1.2, label="equity $\\log(V_t/V_0)/t$")
    ax.plot(t, g_index, lw=1.2, label="index $\\log(S_t/S_0)/t$")
    ax.plot(t, g_pool, lw=1.2, label="pool $\\log(q_t/q_0)/t$")
    ax.axhline(nu, ls="--", lw=1.0, color="0.3")
    ax.axhline(choke, ls=":", lw=1.0, color="0.3")
    ax.set_xlabel("years")
    ax.set_ylabel("realized growth rate")
    ax.set_ylim(min(choke, np.nanmin(g_pool)) - 0.02, None)
    ax.legend(fontsize=8)
    _save(fig, png_path)


def render_figure6(png_path, t, equity_ps, wealth_ps, pool_ps, rate) -> None:
    """Per-share holdings and the rate along one path."""
    fig, ax = plt.subplots(figsize=(7.2, 4.8))
    ax.plot(t, wealth_ps, lw=1.0, label="$(q_t+V_t)/S_t$")
    ax.plot(t, equity_ps, lw=1.0, label="$V_t/S_t$")
    ax.plot(t, pool_ps, lw=1.0, label="$q_t/S_t$")
    ax.set_xlabel("years")
    ax.set_ylabel("shares of the index")
    ax.legend(loc="upper left", fontsize=8)
    ax2 = ax.twinx()
    ax2.plot(t, rate, lw=0.7, color="0.5", label="$r_L(t)$")
    ax2.set_ylabel("margin rate $r_L$")
    ax2.legend(loc="upper right", fontsize=8)
    _save(fig, png_path)


def render_figure7(png_path, grid, density, underperform_share) -> None:
    """Kernel density of the long-run equity/index performance ratio."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.plot(grid, density, lw=1.8)
    ax.fill_between(grid, density, where=grid < 1.0, alpha=0.3,
                    label=f"below 1: {100.0 * underperform_share:.1f}%")
    ax.axvline(1.0, ls="--", lw=1.0, color="0.3")
    ax.set_xlabel("terminal $(V_T/V_0)\\,/\\,(S_T/S_0)$")
    ax.set_ylabel("density")
    ax.legend(fontsize=8)
    _save(fig, png_path)
