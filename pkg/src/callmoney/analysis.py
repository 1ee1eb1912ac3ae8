"""Closed-form bounds, growth diagnostics, and theorem verdicts.

This layer turns raw ensemble statistics into pass/fail reports for the
structural claims of the model: the loan pool relative to gambler equity
(q/V) has constant expectation but falls almost surely; the call rate
rises and leverage falls on average; the equity growth coefficient
settles at the index growth rate; the hitting probability of the zero
rate respects its maximal-inequality bound; the cross-sectional spread
of q/V stays inside analytic envelopes; and share-denominated wealth
has one-sided drift with a hard bound on expected outperformance.

Two checks are deliberately windowed.  The mean of q/V at late times is
carried by a vanishing fraction of extreme paths (the ratio tends to 0
almost surely while its expectation stays put), so a fixed-size sample
mean under-reads it badly no matter the seed; constancy is checked only
up to MARTINGALE_WINDOW_YEARS and the almost-sure decline is checked
separately through the terminal median.  The std envelope is checked up
to ENVELOPE_WINDOW_YEARS for the same reason: past a few years the
fourth moment (which sets the error bar of a std estimate) is carried
by the same extreme tail.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .engine import SimConfig, simulate_block
from .ensemble import (
    EnsembleStats,
    hitting_probability,
    mean_standard_error,
    moment_series,
    std_standard_error,
    terminal_samples,
)
from .errors import DomainError, ParameterError, UsageError
from .model import ModelParams, equilibrium_rate
from .engine import Path

__all__ = [
    "MARTINGALE_WINDOW_YEARS",
    "ENVELOPE_WINDOW_YEARS",
    "CONVERGENCE_START_YEARS",
    "GROWTH_COEFF_TOL",
    "DensityEstimate",
    "TheoremReport",
    "RealizedGrowth",
    "EnvelopeCheck",
    "doob_majorant",
    "relative_std_bounds",
    "realized_growth",
    "relative_growth_factor",
    "epanechnikov_kde",
    "envelope_margin_minimum",
    "theorem_suite",
]

# Constancy of E[q/V] is asserted only on [0, this]; see module docstring.
MARTINGALE_WINDOW_YEARS = 10.0
# Std(q/V) envelope containment is asserted only on (0, this].
ENVELOPE_WINDOW_YEARS = 2.0
# Monotone decline of Std(growth coefficient) is asserted from here on;
# the spread grows out of the deterministic start before shrinking.
CONVERGENCE_START_YEARS = 10.0
# Absolute tolerance on |E[growth coefficient at T] - nu|.
GROWTH_COEFF_TOL = 0.005


@dataclass(frozen=True)
class DensityEstimate:
    """Kernel density on an ordered grid; integrates to ~1 on support."""

    grid: np.ndarray
    density: np.ndarray
    bandwidth: float


@dataclass(frozen=True)
class TheoremReport:
    """One verified claim: identifier, verdict, and the numbers behind it."""

    theorem: str
    passed: bool
    measured: dict[str, float] = field(default_factory=dict)
    tolerances: dict[str, float] = field(default_factory=dict)
    note: str = ""


class RealizedGrowth(NamedTuple):
    """Continuously compounded annual growth over a path's full horizon."""

    pool: float
    index: float
    equity: float


def doob_majorant(p: ModelParams, rate0: float | None = None) -> float:
    """Upper bound on the probability that the rate ever reaches zero.

    The bound is ``min(1, 1 - r0/r_inf)``: q/V is a non-negative process
    of constant mean, so the maximal inequality caps the chance it ever
    reaches the zero-rate level ``mu/sigma^2 - 1`` by the ratio of start
    to barrier, which in rate terms is one minus the starting rate over
    the choke rate.  ``rate0`` defaults to the equilibrium rate at the
    initial q0/V0.
    """
    if p.choke_rate <= 0.0:
        raise DomainError(
            f"hitting bound needs a positive choke rate, got {p.choke_rate}"
        )
    if rate0 is None:
        rate0 = float(equilibrium_rate(p.initial_ratio, p))
    if not 0.0 <= rate0 <= p.choke_rate:
        raise DomainError(
            f"rate0 must lie in [0, {p.choke_rate}], got {rate0}"
        )
    return min(1.0, 1.0 - rate0 / p.choke_rate)


def relative_std_bounds(p: ModelParams, t):
    """Analytic envelope on Std(q_t/V_t): lower and upper curves.

    lower = (q0/V0) sqrt(exp(sigma^2 t) - 1), the spread of a pool that
    stays fully levered at the cap in log terms; upper replaces sigma^2
    with (mu/sigma)^2, the largest attainable squared market price of
    risk.  Both vanish at t = 0 and increase without bound.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise ParameterError("t must be non-negative")
    ratio0 = p.initial_ratio
    lower = ratio0 * np.sqrt(np.expm1(p.sigma * p.sigma * t))
    upper = ratio0 * np.sqrt(np.expm1((p.mu / p.sigma) ** 2 * t))
    return lower[()], upper[()]


def realized_growth(path: Path) -> RealizedGrowth:
    """Per-year log growth of pool, index, and equity over the horizon.

    The pool component is NaN for the degenerate empty-pool start.
    """
    p = path.params
    T = path.config.horizon_years
    term = path.terminal
    with np.errstate(divide="ignore", invalid="ignore"):
        pool = float((term.log_q - np.log(p.q0)) / T)
    return RealizedGrowth(
        pool=pool,
        index=float((term.log_s - np.log(p.s0)) / T),
        equity=float((term.log_v - np.log(p.v0)) / T),
    )


def relative_growth_factor(path: Path) -> float:
    """Terminal equity growth relative to the index, (V_T/V0)/(S_T/S0)."""
    p = path.params
    term = path.terminal
    return float(
        np.exp((term.log_v - np.log(p.v0)) - (term.log_s - np.log(p.s0)))
    )


def epanechnikov_kde(
    samples, bandwidth: float, grid: np.ndarray | None = None
) -> DensityEstimate:
    """Kernel density estimate with K(u) = 0.75 (1 - u^2) on |u| <= 1.

    The default grid is 512 evenly spaced points spanning the samples
    plus three bandwidths on each side, so the estimate's full support
    is covered and the trapezoidal integral comes out at 1.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise UsageError("samples must be non-empty")
    if not bandwidth > 0.0:
        raise UsageError(f"bandwidth must be positive, got {bandwidth}")
    h = float(bandwidth)
    srt = np.sort(samples)
    if grid is None:
        grid = np.linspace(srt[0] - 3.0 * h, srt[-1] + 3.0 * h, 512)
    else:
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0.0):
            raise UsageError("grid must be a 1-d strictly increasing array")
    # Only samples within one bandwidth contribute; locate each window
    # by bisection instead of forming the full grid x sample product.
    lo = np.searchsorted(srt, grid - h, side="left")
    hi = np.searchsorted(srt, grid + h, side="right")
    density = np.empty_like(grid)
    for i in range(grid.size):
        u = (grid[i] - srt[lo[i] : hi[i]]) / h
        density[i] = (1.0 - u * u).sum()
    density *= 0.75 / (samples.size * h)
    return DensityEstimate(grid=grid, density=density, bandwidth=h)


class EnvelopeCheck(NamedTuple):
    """Worst pathwise envelope margin over a grid of simulated paths."""

    min_margin: float
    path_index: int
    time: float


def envelope_margin_minimum(
    p: ModelParams,
    horizon_years: float,
    n_steps: int,
    master_seed: int,
    n_paths: int,
    *,
    decouple_shocks: bool = False,
) -> EnvelopeCheck:
    """Minimum envelope margin over every step of ``n_paths`` paths.

    The margin at each grid point is the pathwise bound
    ``(q0/V0) exp(-sigma^2 t/2 - sigma I_t)`` minus the realized q/V;
    under the coupled scheme it is non-negative up to rounding, so a
    clearly negative minimum flags a broken shock coupling.  Runs on the
    vectorized block integrator, checking all steps, keeping nothing.
    """
    c = SimConfig(horizon_years, n_steps, record_every=1)
    ratio0 = p.q0 / p.v0
    half_var = 0.5 * p.sigma * p.sigma
    best = EnvelopeCheck(np.inf, -1, 0.0)
    block = 8192
    for start in range(0, n_paths, block):
        count = min(block, n_paths - start)

        def recorder(slot: int, step_index: int, t: float, arrays: dict) -> None:
            nonlocal best
            envelope = ratio0 * np.exp(
                -half_var * t - p.sigma * arrays["shock_integral"]
            )
            margin = envelope - np.exp(arrays["log_q"] - arrays["log_v"])
            j = int(np.argmin(margin))
            if margin[j] < best.min_margin:
                best = EnvelopeCheck(float(margin[j]), start + j, t)

        simulate_block(
            p, c, master_seed, start, count, recorder,
            decouple_shocks=decouple_shocks,
        )
    return best


def _step_z_scores(diff: np.ndarray, pair_se: np.ndarray) -> np.ndarray:
    """Per-step drift in units of the combined standard error.

    Where the SE is zero (deterministic cross-sections) a drift within
    float rounding counts as zero and anything larger as infinite.
    """
    z = np.full_like(diff, np.inf)
    np.copyto(z, -np.inf, where=diff < 0.0)
    np.copyto(z, 0.0, where=np.abs(diff) <= 1e-15)
    ok = pair_se > 0.0
    z[ok] = diff[ok] / pair_se[ok]
    return z


def _pair_se(se: np.ndarray) -> np.ndarray:
    # Conservative SE of the difference of successive means: treats the
    # two cross-sections as independent although they share paths, which
    # only widens the allowance.
    return np.sqrt(se[:-1] ** 2 + se[1:] ** 2)


_REQUIRED_OBSERVABLES = (
    "rel_size",
    "rate",
    "leverage",
    "growth_coeff",
    "equity_per_share",
    "wealth_per_share",
    "growth_factor",
)


def theorem_suite(stats: EnsembleStats, p: ModelParams) -> list[TheoremReport]:
    """Run every structural check against one ensemble's statistics.

    Requires the observables in ``_REQUIRED_OBSERVABLES`` plus terminal
    samples of ``rel_size``; raises a usage error naming anything
    missing.  Every tolerance is three standard errors unless stated in
    the report.
    """
    missing = [o for o in _REQUIRED_OBSERVABLES if o not in stats.series]
    if missing:
        raise UsageError(f"theorem suite needs untracked observables: {missing}")

    reports: list[TheoremReport] = []
    ratio0 = p.initial_ratio

    # Constant expectation of q/V inside the honest-estimation window.
    times, mean, _ = moment_series(stats, "rel_size")
    se = mean_standard_error(stats, "rel_size")
    # Recorded times accumulate dt, so a nominal checkpoint can sit an
    # ulp past the window edge; the slack keeps it inside.
    window = (times > 0.0) & (times <= MARTINGALE_WINDOW_YEARS * (1.0 + 1e-9))
    dev = np.abs(mean - ratio0)
    z = np.zeros_like(dev)
    z[window] = dev[window] / np.where(se[window] > 0.0, se[window], np.inf)
    worst = int(np.argmax(z)) if window.any() else 0
    reports.append(
        TheoremReport(
            theorem="relative-size-martingale",
            passed=bool(np.all(z <= 3.0) and dev[0] <= 1e-12),
            measured={
                "max_z": float(z.max()),
                "worst_time": float(times[worst]),
                "mean_at_worst": float(mean[worst]),
            },
            tolerances={"z": 3.0},
            note=f"mean constancy checked on t <= {MARTINGALE_WINDOW_YEARS:g}y",
        )
    )

    # Almost-sure decline: the typical path ends below its start.
    median = float(np.median(terminal_samples(stats, "rel_size")))
    reports.append(
        TheoremReport(
            theorem="relative-size-decay",
            passed=median < ratio0,
            measured={"terminal_median": median},
            tolerances={"below": ratio0},
        )
    )

    # One-sided mean drift of the rate (up) and leverage (down).
    for name, theorem, sign in (
        ("rate", "rate-submartingale", +1.0),
        ("leverage", "leverage-supermartingale", -1.0),
        ("equity_per_share", "equity-share-submartingale", +1.0),
        ("wealth_per_share", "wealth-share-supermartingale", -1.0),
    ):
        _, m, _ = moment_series(stats, name)
        pair = _pair_se(mean_standard_error(stats, name))
        z_steps = _step_z_scores(sign * np.diff(m), pair)
        reports.append(
            TheoremReport(
                theorem=theorem,
                passed=bool(np.all(z_steps >= -3.0)),
                measured={"min_step_z": float(z_steps.min())},
                tolerances={"z": -3.0},
            )
        )

    # Growth coefficient: terminal mean at nu, spread shrinking late.
    g_times, g_mean, g_std = moment_series(stats, "growth_coeff")
    g_se = mean_standard_error(stats, "growth_coeff")
    mean_gap = abs(float(g_mean[-1]) - p.nu)
    mean_tol = GROWTH_COEFF_TOL + 3.0 * float(g_se[-1])
    late = g_times >= CONVERGENCE_START_YEARS * (1.0 - 1e-9)
    if late.sum() >= 2:
        s_se = std_standard_error(stats, "growth_coeff")[late]
        z_std = _step_z_scores(-np.diff(g_std[late]), _pair_se(s_se))
        std_ok = bool(np.all(z_std >= -3.0))
        min_std_z = float(z_std.min())
        note = f"std decline checked from t >= {CONVERGENCE_START_YEARS:g}y"
    else:
        std_ok = True
        min_std_z = float("nan")
        note = "horizon too short for the std-decline clause"
    reports.append(
        TheoremReport(
            theorem="growth-coeff-convergence",
            passed=(mean_gap <= mean_tol) and std_ok,
            measured={
                "terminal_mean": float(g_mean[-1]),
                "mean_gap": mean_gap,
                "min_std_step_z": min_std_z,
            },
            tolerances={"mean_gap": mean_tol, "z": -3.0},
            note=note,
        )
    )

    # Hitting probability against its analytic majorant.
    p_hat, p_se = hitting_probability(stats)
    bound = doob_majorant(p)
    reports.append(
        TheoremReport(
            theorem="zero-rate-hitting-bound",
            passed=bool(p_hat <= bound + 3.0 * p_se),
            measured={"estimate": p_hat, "majorant": bound},
            tolerances={"slack": 3.0 * p_se},
        )
    )

    # Std envelope containment on the early window.
    r_times, _, r_std = moment_series(stats, "rel_size")
    r_sse = std_standard_error(stats, "rel_size")
    env = (r_times > 0.0) & (r_times <= ENVELOPE_WINDOW_YEARS * (1.0 + 1e-9))
    if env.any():
        lower, upper = relative_std_bounds(p, r_times[env])
        slack = 3.0 * r_sse[env]
        below = (r_std[env] - (lower - slack)).min()
        above = ((upper + slack) - r_std[env]).min()
        env_pass = bool(below >= 0.0 and above >= 0.0)
        measured = {
            "min_margin_to_lower": float(below),
            "min_margin_to_upper": float(above),
            "points_checked": float(env.sum()),
        }
        env_note = f"checked on 0 < t <= {ENVELOPE_WINDOW_YEARS:g}y"
    else:
        env_pass = True
        measured = {"points_checked": 0.0}
        env_note = "no recorded times inside the envelope window"
    reports.append(
        TheoremReport(
            theorem="relative-size-std-envelope",
            passed=env_pass,
            measured=measured,
            tolerances={"slack_se": 3.0},
            note=env_note,
        )
    )

    # Expected outperformance of the index is capped at 1 + q0/V0.
    f_times, f_mean, _ = moment_series(stats, "growth_factor")
    f_se = mean_standard_error(stats, "growth_factor")
    cap = 1.0 + ratio0
    excess = f_mean - (cap + 3.0 * f_se)
    worst_f = int(np.argmax(excess))
    reports.append(
        TheoremReport(
            theorem="relative-growth-bound",
            passed=bool(np.all(excess <= 0.0)),
            measured={
                "max_mean": float(f_mean.max()),
                "worst_time": float(f_times[worst_f]),
            },
            tolerances={"cap": cap},
        )
    )
    return reports
