"""Acceptance gate: one test and one printed verdict line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the verdict
lines; the whole gate takes roughly fifteen minutes on one core, most
of it in the 15-market table (criterion 1) and the 100,000-path growth
ensemble (criteria 5 and 7).

Two criteria are expected to fail, and the failures are left red on
purpose because the underlying claims are asymptotic while the
criteria pin finite scales:

* criterion 2 at t in {50, 100}: q/V is a martingale whose paths decay
  to zero while an ever-thinner set of huge paths carries the mean, so
  the late-time cross-sectional average systematically under-reads 1
  at any feasible path count (the sample-mean error shrinks only
  logarithmically in n).  The one-step conditional mean is exact to
  1e-12 (engine tests), so the discrepancy is sampling, not code.
* criterion 5, pool-growth clause: E[r_L(t)] approaches the choke rate
  like a power law, so the 200-year running average of the rate lands
  near 0.0729, short of the 0.07375 the 0.005 tolerance implies; the
  window is only reached at horizons near 270 years.  The equity
  clause and both shrinking-spread clauses pass.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from callmoney.analysis import (
    doob_majorant,
    envelope_margin_minimum,
    epanechnikov_kde,
    relative_std_bounds,
)
from callmoney.cli import main
from callmoney.engine import SimConfig
from callmoney.ensemble import (
    EnsembleSpec,
    hitting_probability,
    mean_standard_error,
    moment_series,
    run_ensemble,
    std_standard_error,
    terminal_samples,
)
from callmoney.model import (
    demand_quantity,
    derive_params,
    equilibrium_rate,
    growth_rate,
    inverse_demand,
    kelly_leverage,
    optimal_growth,
)

STD = derive_params(1.0, 1.0, 1.0, 0.09, 0.15)

# Reference values for the 15-market hitting table: per market
# (sigma, nu): analytic bound, Monte Carlo estimate, and its standard
# error, all in percent.  Estimates were produced at 25,000 paths x
# 200y x 25,000 steps.
REFERENCE_TABLE1: tuple[tuple[float, float, float, float, float], ...] = (
    (0.10, 0.09, 11.8, 9.3, 0.18),
    (0.15, 0.09, 28.6, 26.3, 0.28),
    (0.20, 0.09, 57.1, 55.1, 0.31),
    (0.10, 0.08, 13.3, 10.8, 0.20),
    (0.15, 0.08, 32.8, 30.1, 0.29),
    (0.20, 0.08, 66.7, 63.8, 0.30),
    (0.10, 0.07, 15.4, 12.7, 0.21),
    (0.15, 0.07, 38.3, 36.1, 0.30),
    (0.20, 0.07, 80.0, 78.0, 0.26),
    (0.10, 0.06, 18.2, 15.2, 0.23),
    (0.15, 0.06, 46.2, 43.6, 0.31),
    (0.20, 0.06, 100.0, 100.0, 0.0),
    (0.10, 0.05, 22.2, 18.7, 0.25),
    (0.15, 0.05, 58.1, 56.0, 0.31),
    (0.20, 0.05, 100.0, 100.0, 0.0),
)


def _report(num: int, label: str, passed: bool, detail: str = "") -> None:
    verdict = "PASS" if passed else "FAIL"
    suffix = f" - {detail}" if detail else ""
    print(f"[criterion {num:02d}] {label}: {verdict}{suffix}", flush=True)


def _checkpoint(times: np.ndarray, t: float) -> int:
    i = int(np.argmin(np.abs(times - t)))
    assert math.isclose(times[i], t, rel_tol=1e-9), f"no recorded time near {t}"
    return i


@pytest.fixture(scope="module")
def century_ensemble():
    """20,000 paths x 100y at yearly checkpoints; criteria 2, 3, 6."""
    spec = EnsembleSpec(STD, SimConfig(100.0, 12_500, record_every=125),
                        n_paths=20_000, master_seed=0)
    return run_ensemble(spec)


@pytest.fixture(scope="module")
def early_window_ensemble():
    """50,000 paths on [0, 2] years; criterion 4."""
    spec = EnsembleSpec(STD, SimConfig(2.0, 4_000, record_every=50),
                        n_paths=50_000, master_seed=0,
                        observables=("rel_size",))
    return run_ensemble(spec)


@pytest.fixture(scope="module")
def bicentennial_ensemble():
    """100,000 paths x 200y; criteria 5 and 7."""
    spec = EnsembleSpec(STD, SimConfig(200.0, 25_000, record_every=6_250),
                        n_paths=100_000, master_seed=0,
                        observables=("growth_pool", "growth_equity",
                                     "growth_factor"))
    return run_ensemble(spec)


def test_criterion_01_hitting_table_reproduction() -> None:
    failures = []
    for sigma, nu, ref_bound, ref_est, ref_se in REFERENCE_TABLE1:
        p = derive_params(1.0, 1.0, 1.0, nu, sigma)
        bound = doob_majorant(p)
        spec = EnsembleSpec(p, SimConfig(200.0, 25_000, record_every=25_000),
                            n_paths=25_000, master_seed=0,
                            observables=("rate",))
        estimate, se = hitting_probability(run_ensemble(spec))
        combined = math.hypot(se, ref_se / 100.0)
        dev = abs(estimate - ref_est / 100.0)
        row = f"sigma={sigma:.2f} nu={nu:.2f}"
        print(f"  {row}: bound {100 * bound:6.2f}% vs {ref_bound}%, "
              f"hit {100 * estimate:6.2f}% vs {ref_est}% "
              f"(dev {100 * dev:.2f}pp, 3*combined {300 * combined:.2f}pp)",
              flush=True)
        if abs(100.0 * bound - ref_bound) > 0.1:
            failures.append(f"{row}: bound off by "
                            f"{abs(100 * bound - ref_bound):.2f}pp")
        if dev > 3.0 * combined:
            failures.append(f"{row}: estimate {100 * estimate:.2f}% vs "
                            f"{ref_est}% exceeds 3 combined SE")
        if estimate > bound:
            failures.append(f"{row}: estimate above its bound")
    _report(1, "hitting-table reproduction", not failures,
            "; ".join(failures) or "15 markets within tolerance")
    assert not failures, failures


def test_criterion_02_relative_size_mean_constancy(century_ensemble) -> None:
    times, mean, _ = moment_series(century_ensemble, "rel_size")
    se = mean_standard_error(century_ensemble, "rel_size")
    lines = []
    failures = []
    for t in (1.0, 10.0, 50.0, 100.0):
        i = _checkpoint(times, t)
        z = abs(mean[i] - 1.0) / se[i]
        lines.append(f"t={t:g}: mean={mean[i]:.4f} se={se[i]:.4f} z={z:.2f}")
        if z > 3.0:
            failures.append(f"t={t:g} (z={z:.1f})")
    passed = not failures
    _report(2, "relative-size mean constancy", passed,
            "documented structural failure at " + ", ".join(failures)
            if failures else "")
    assert passed, (
        "|E[q_t/V_t] - 1| > 3*SE at " + ", ".join(failures) + ". "
        + " | ".join(lines) + ". Expected red: the martingale is not "
        "uniformly integrable, so the late-time sample mean under-reads 1 "
        "at any feasible path count; the one-step conditional mean is "
        "exact to 1e-12 (engine tests)."
    )


def test_criterion_03_long_run_convergence_targets(century_ensemble) -> None:
    times, mean_b, _ = moment_series(century_ensemble, "leverage")
    _, mean_r, _ = moment_series(century_ensemble, "rate")
    _, mean_g, std_g = moment_series(century_ensemble, "growth_coeff")
    idx = [_checkpoint(times, t) for t in (1.0, 10.0, 50.0, 100.0)]

    failures = []
    if not mean_b[idx[-1]] < 1.2:
        failures.append(f"E[b_100]={mean_b[idx[-1]]:.4f} not < 1.2")
    if not np.all(np.diff(mean_b[idx]) < 0.0):
        failures.append("E[b_t] not decreasing across checkpoints")
    if abs(mean_r[idx[-1]] - 0.07875) > 0.01:
        failures.append(f"E[r_L(100)]={mean_r[idx[-1]]:.4f} not within "
                        "0.01 of 0.07875")
    if not np.all(np.diff(mean_r[idx]) > 0.0):
        failures.append("E[r_L(t)] not increasing across checkpoints")
    if abs(mean_g[idx[-1]] - 0.09) > 0.005:
        failures.append(f"E[growth coeff at 100y]={mean_g[idx[-1]]:.4f} "
                        "not within 0.005 of 0.09")
    late = [_checkpoint(times, t) for t in (10.0, 50.0, 100.0)]
    if not np.all(np.diff(std_g[late]) < 0.0):
        failures.append("Std of the growth coefficient not decreasing")
    _report(3, "long-run convergence targets", not failures,
            "; ".join(failures) or
            f"E[b_100]={mean_b[idx[-1]]:.3f}, E[r_100]={mean_r[idx[-1]]:.4f}, "
            f"E[G_100]={mean_g[idx[-1]]:.4f}")
    assert not failures, failures


def test_criterion_04_relative_size_std_envelope(early_window_ensemble) -> None:
    times, _, sample_std = moment_series(early_window_ensemble, "rel_size")
    se = std_standard_error(early_window_ensemble, "rel_size")
    lower, upper = relative_std_bounds(STD, times)
    above_lower = sample_std - (lower - 3.0 * se)
    below_upper = (upper + 3.0 * se) - sample_std
    ok = bool(np.all(above_lower >= 0.0) and np.all(below_upper >= 0.0))
    detail = (f"{times.size} recorded points on [0,2], worst margins "
              f"{above_lower.min():.2e} / {below_upper.min():.2e}")
    _report(4, "relative-size std envelope", ok, detail)
    assert ok, detail


def test_criterion_05_realized_growth_rates(bicentennial_ensemble) -> None:
    times, gq_mean, gq_std = moment_series(bicentennial_ensemble, "growth_pool")
    _, gv_mean, gv_std = moment_series(bicentennial_ensemble, "growth_equity")
    final = _checkpoint(times, 200.0)

    failures = []
    if abs(gv_mean[final] - 0.09) > 0.005:
        failures.append(f"mean equity growth {gv_mean[final]:.5f} not within "
                        "0.005 of 0.09")
    gq_gap = abs(gq_mean[final] - 0.07875)
    if gq_gap > 0.005:
        failures.append(f"mean pool growth {gq_mean[final]:.5f} misses "
                        f"0.07875 by {gq_gap:.5f} (> 0.005)")
    if not np.all(np.diff(gq_std) < 0.0) or not np.all(np.diff(gv_std) < 0.0):
        failures.append("cross-path stds not shrinking with the horizon")
    passed = not failures
    _report(5, "realized growth rates", passed,
            "documented structural failure: " + "; ".join(failures)
            if failures else "")
    assert passed, (
        "; ".join(failures) + ". Expected red on the pool clause: the mean "
        "rate approaches the choke level like a power law, so the 200y "
        "running average sits near 0.0729 and reaches the 0.005 window "
        "only around 270y horizons; insensitive to the step size. Equity "
        f"growth {gv_mean[final]:.5f} and the shrinking spreads "
        f"({gq_std[0]:.5f}->{gq_std[-1]:.5f}, "
        f"{gv_std[0]:.5f}->{gv_std[-1]:.5f}) meet their clauses."
    )


def test_criterion_06_share_accounting_monotonicity(century_ensemble) -> None:
    times, factor_mean, _ = moment_series(century_ensemble, "growth_factor")
    factor_se = mean_standard_error(century_ensemble, "growth_factor")
    failures = []
    excess = factor_mean - (2.0 + 3.0 * factor_se)
    if not np.all(excess <= 0.0):
        i = int(np.argmax(excess))
        failures.append(f"E[(V/V0)/(S/S0)]={factor_mean[i]:.4f} above cap "
                        f"at t={times[i]:g}")

    checkpoints = [_checkpoint(times, t) for t in (0.0, 1.0, 10.0, 50.0, 100.0)]
    for name, sign, label in (
        ("wealth_per_share", -1.0, "E[(q+V)/S] increasing"),
        ("equity_per_share", +1.0, "E[V/S] decreasing"),
    ):
        _, mean, _ = moment_series(century_ensemble, name)
        se = mean_standard_error(century_ensemble, name)
        steps = sign * np.diff(mean[checkpoints])
        slack = 3.0 * np.hypot(se[checkpoints][:-1], se[checkpoints][1:])
        if not np.all(steps >= -slack):
            failures.append(label + " beyond 3*SE")
    _report(6, "share accounting monotonicity", not failures,
            "; ".join(failures) or
            f"max E[(V/V0)/(S/S0)]={factor_mean.max():.4f} <= 2")
    assert not failures, failures


def test_criterion_07_growth_factor_distribution(bicentennial_ensemble) -> None:
    samples = terminal_samples(bicentennial_ensemble, "growth_factor")
    mean = float(samples.mean())
    std = float(samples.std(ddof=1))
    under = float(np.mean(samples < 1.0))
    failures = []
    if not 1.80 <= mean <= 1.94:
        failures.append(f"mean {mean:.4f} outside [1.80, 1.94]")
    if not 0.19 <= std <= 0.29:
        failures.append(f"std {std:.4f} outside [0.19, 0.29]")
    if not 0.011 <= under <= 0.031:
        failures.append(f"P(<1) {under:.4f} outside [0.011, 0.031]")
    _report(7, "growth-factor distribution", not failures,
            "; ".join(failures) or
            f"mean={mean:.3f} std={std:.3f} P(<1)={100 * under:.2f}%")
    assert not failures, failures


def test_criterion_08_pathwise_envelope_margin() -> None:
    check = envelope_margin_minimum(STD, 100.0, 100_000, 0, 100)
    ok = check.min_margin >= -1e-3
    detail = (f"min margin {check.min_margin:.2e} at path "
              f"{check.path_index}, t={check.time:.2f}")
    _report(8, "pathwise growth envelope", ok, detail)
    assert ok, detail


def test_criterion_09_unit_value_suite() -> None:
    failures = []

    # Sensitivity of the maximized growth rate to the margin rate
    # equals 1 - b.  The interior branch is quadratic, so a central
    # difference is exact up to rounding.
    h = 1e-3
    for R in np.linspace(0.05, 3.4, 68):
        r = float(equilibrium_rate(R, STD))
        b = float(kelly_leverage(R, STD))
        derivative = (optimal_growth(r + h, STD) - optimal_growth(r - h, STD)) / (2 * h)
        if abs(derivative - (1.0 - b)) > 1e-12:
            failures.append(f"growth sensitivity at R={R:.2f}: "
                            f"{derivative:.2e} vs {1.0 - b:.2e}")
            break

    # The equilibrium leverage beats every rival on its own rate.
    rivals = np.linspace(1.0, STD.max_leverage, 71)
    for R in np.linspace(0.0, 8.0, 81):
        r = float(equilibrium_rate(R, STD))
        best = growth_rate(float(kelly_leverage(R, STD)), r, STD)
        if not np.all(best >= growth_rate(rivals, r, STD) - 1e-14):
            failures.append(f"leverage dominated at R={R:.2f}")
            break

    # Demand and inverse demand round-trip on the curve.
    for r in np.linspace(0.0, STD.choke_rate, 40):
        for V in (0.5, 1.0, 7.0):
            q = float(demand_quantity(V, r, STD))
            if q > 0 and abs(float(inverse_demand(q, V, STD)) - r) > 1e-12:
                failures.append(f"demand round trip at r={r:.4f}")

    # Kernel point values.
    peak = epanechnikov_kde([0.0], 1.0, grid=np.array([0.0, 2.0])).density[0]
    edge = epanechnikov_kde([0.0], 1.0, grid=np.array([-1.0, 1.5])).density
    mid = epanechnikov_kde([-0.5, 0.5], 1.0, grid=np.array([0.0, 2.0])).density[0]
    if abs(peak - 0.75) > 1e-12:
        failures.append(f"kernel peak {peak}")
    if np.any(edge != 0.0):
        failures.append("kernel support not compact")
    if abs(mid - 0.5625) > 1e-12:
        failures.append(f"two-sample midpoint {mid}")

    # Hitting-bound values: 28.6% and 57.1% for pool/equity ratios 1
    # and 2; certainty when the rate starts at zero; and the quoted
    # 54% case, which is the start-to-choke rate ratio whose
    # complement 46.2% is the bound itself.
    m1 = doob_majorant(STD)
    m2 = doob_majorant(derive_params(2.0, 1.0, 1.0, 0.09, 0.15))
    m3 = doob_majorant(derive_params(1.0, 1.0, 1.0, 0.06, 0.20))
    quoted = derive_params(1.0, 1.0, 1.0, 0.09025, 0.15)
    ratio = 1.0 - doob_majorant(quoted, rate0=0.0425)
    if round(100.0 * m1, 1) != 28.6:
        failures.append(f"bound at ratio 1: {100 * m1:.2f}%")
    if round(100.0 * m2, 1) != 57.1:
        failures.append(f"bound at ratio 2: {100 * m2:.2f}%")
    if m3 != 1.0:
        failures.append(f"zero-rate bound {m3}")
    if abs(ratio - 0.54) > 0.005:
        failures.append(f"quoted rate ratio {ratio:.4f} not 54%")

    _report(9, "unit value suite", not failures, "; ".join(failures))
    assert not failures, failures


def test_criterion_10_determinism_and_negative_control(tmp_path, capsys) -> None:
    failures = []
    argv = ["simulate", "--steps", "400", "--horizon", "2", "--seed", "11"]
    for run in ("a", "b"):
        assert main(argv + ["--out", str(tmp_path / run)]) == 0
    if ((tmp_path / "a" / "simulate_path.csv").read_bytes()
            != (tmp_path / "b" / "simulate_path.csv").read_bytes()):
        failures.append("simulate reruns differ")

    argv = ["ensemble", "--paths", "300", "--steps", "100", "--horizon", "2"]
    for run in ("ea", "eb"):
        assert main(argv + ["--out", str(tmp_path / run)]) == 0
    if ((tmp_path / "ea" / "ensemble_moments.csv").read_bytes()
            != (tmp_path / "eb" / "ensemble_moments.csv").read_bytes()):
        failures.append("ensemble reruns differ")

    if main(["verify"]) != 0:
        failures.append("verify did not exit 0 on the coupled model")
    if main(["verify", "--decouple-shocks"]) != 3:
        failures.append("decoupled negative control did not exit 3")
    capsys.readouterr()  # swallow the verify report lines

    _report(10, "determinism and negative control", not failures,
            "; ".join(failures) or
            "byte-identical artifacts; decoupled verify exits 3")
    assert not failures, failures
