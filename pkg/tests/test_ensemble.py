"""Tests for the streaming ensemble reductions.

The merge chain is validated against direct numpy reductions over the
same cross-section: with more than BLOCK_PATHS paths the series moments
come from merged per-block summaries, while the terminal samples give
the raw cross-section, so comparing the two exercises the Chan/Pebay
update across real block boundaries.
"""

from __future__ import annotations

import numpy as np
import pytest

from callmoney.engine import PathStream, SimConfig, simulate_path
from callmoney.ensemble import (
    BLOCK_PATHS,
    EnsembleSpec,
    hitting_probability,
    mean_standard_error,
    moment_series,
    run_ensemble,
    std_standard_error,
    terminal_samples,
)
from callmoney.errors import ParameterError, UsageError
from callmoney.model import ModelParams, derive_params

MERGE_REL = 1e-9


@pytest.fixture(scope="module")
def std_params() -> ModelParams:
    return derive_params(1.0, 1.0, 1.0, 0.09, 0.15)


@pytest.fixture(scope="module")
def small_stats(std_params: ModelParams):
    spec = EnsembleSpec(
        std_params, SimConfig(10.0, 1250, record_every=125), n_paths=2000, master_seed=3
    )
    return run_ensemble(spec)


@pytest.fixture(scope="module")
def wide_stats(std_params: ModelParams):
    # Three reduction blocks: 20000 > 2 * BLOCK_PATHS.
    assert 2 * BLOCK_PATHS < 20000 <= 3 * BLOCK_PATHS
    spec = EnsembleSpec(
        std_params, SimConfig(1.0, 50, record_every=25), n_paths=20000, master_seed=11
    )
    return run_ensemble(spec)


class TestEnsembleSpec:
    def test_bad_path_count(self, std_params: ModelParams) -> None:
        with pytest.raises(ParameterError):
            EnsembleSpec(std_params, SimConfig(1.0, 10), n_paths=0, master_seed=0)

    def test_negative_seed(self, std_params: ModelParams) -> None:
        with pytest.raises(ParameterError):
            EnsembleSpec(std_params, SimConfig(1.0, 10), n_paths=1, master_seed=-1)

    def test_empty_observables(self, std_params: ModelParams) -> None:
        with pytest.raises(UsageError):
            EnsembleSpec(
                std_params, SimConfig(1.0, 10), n_paths=1, master_seed=0, observables=()
            )

    def test_unknown_observable(self, std_params: ModelParams) -> None:
        with pytest.raises(UsageError, match="volatility"):
            EnsembleSpec(
                std_params,
                SimConfig(1.0, 10),
                n_paths=1,
                master_seed=0,
                observables=("volatility",),
            )

    def test_pool_growth_needs_nonempty_pool(self) -> None:
        sigma = 0.15
        mu = 0.09 + sigma * sigma / 2.0
        empty = ModelParams(
            q0=0.0, v0=1.0, s0=1.0, nu=0.09, sigma=sigma, mu=mu,
            choke_rate=mu - sigma * sigma, max_leverage=mu / (sigma * sigma),
        )
        with pytest.raises(UsageError):
            EnsembleSpec(
                empty, SimConfig(1.0, 10), n_paths=1, master_seed=0,
                observables=("growth_pool",),
            )


class TestRunEnsemble:
    def test_counts_cover_all_paths(self, wide_stats) -> None:
        for name, s in wide_stats.series.items():
            assert np.all(s.count == 20000), name

    def test_merged_moments_match_direct(self, wide_stats) -> None:
        # The last slot's streaming summary must agree with plain numpy
        # reductions over the stored terminal cross-section.
        for name in ("rel_size", "growth_factor", "rate"):
            x = terminal_samples(wide_stats, name)
            s = wide_stats.series[name]
            d = x - x.mean()
            assert s.mean[-1] == pytest.approx(x.mean(), rel=MERGE_REL)
            assert s.m2[-1] == pytest.approx((d**2).sum(), rel=MERGE_REL)
            assert s.m3[-1] == pytest.approx((d**3).sum(), rel=1e-6, abs=1e-12)
            assert s.m4[-1] == pytest.approx((d**4).sum(), rel=MERGE_REL)
            assert s.minimum[-1] == x.min()
            assert s.maximum[-1] == x.max()

    def test_single_path_means_are_the_path(self, std_params: ModelParams) -> None:
        c = SimConfig(10.0, 1250, record_every=125)
        stats = run_ensemble(EnsembleSpec(std_params, c, n_paths=1, master_seed=3))
        path = simulate_path(std_params, c, PathStream(3, 0))
        assert np.array_equal(stats.series["rel_size"].mean, path.relative_size)
        assert np.array_equal(stats.series["rate"].mean, path.rate)
        assert np.all(moment_series(stats, "rel_size").std == 0.0)

    def test_replay_and_worker_count_invariance(self, std_params: ModelParams) -> None:
        spec = EnsembleSpec(
            std_params, SimConfig(1.0, 50, record_every=25), n_paths=20000, master_seed=11
        )
        serial = run_ensemble(spec)
        pooled = run_ensemble(spec, workers=2)
        for name in spec.observables:
            for field in ("mean", "m2", "m3", "m4", "minimum", "maximum"):
                assert np.array_equal(
                    getattr(serial.series[name], field),
                    getattr(pooled.series[name], field),
                ), (name, field)
            assert np.array_equal(serial.terminal[name], pooled.terminal[name])
        assert serial.hit_count == pooled.hit_count

    def test_numeric_abort_names_path(self) -> None:
        sigma = 0.15
        mu = 0.09 + sigma * sigma / 2.0
        broken = ModelParams(
            q0=1.0, v0=float("nan"), s0=1.0, nu=0.09, sigma=sigma, mu=mu,
            choke_rate=mu - sigma * sigma, max_leverage=mu / (sigma * sigma),
        )
        spec = EnsembleSpec(broken, SimConfig(1.0, 10), n_paths=4, master_seed=0)
        with pytest.raises(FloatingPointError, match="path 0"):
            run_ensemble(spec)

    def test_growth_series_skip_time_zero(self, small_stats) -> None:
        assert small_stats.series["growth_pool"].times[0] == small_stats.times[1]
        assert len(small_stats.series["growth_pool"].times) == len(small_stats.times) - 1
        assert small_stats.series["rel_size"].times[0] == 0.0

    def test_time_zero_is_deterministic(self, small_stats) -> None:
        # The t=0 cross-section is bitwise constant; the only spread the
        # summary may show is the ulp lost when averaging n copies.
        for name, s in small_stats.series.items():
            if s.times[0] == 0.0:
                assert s.minimum[0] == s.maximum[0], name
                assert s.m2[0] < 1e-24, name
                assert moment_series(small_stats, name).std[0] < 1e-12, name


class TestHittingProbability:
    def test_zero_initial_rate_hits_immediately(self) -> None:
        # mu - 2 sigma^2 = 0 for (nu, sigma) = (0.06, 0.20): the rate
        # starts on the boundary, so every path counts as a hit.
        p = derive_params(1.0, 1.0, 1.0, 0.06, 0.20)
        stats = run_ensemble(
            EnsembleSpec(p, SimConfig(1.0, 10), 50, 0, observables=("rate",))
        )
        assert hitting_probability(stats) == (1.0, 0.0)

    def test_short_horizon_never_hits(self, std_params: ModelParams) -> None:
        stats = run_ensemble(
            EnsembleSpec(std_params, SimConfig(0.01, 10), 50, 0, observables=("rate",))
        )
        assert hitting_probability(stats) == (0.0, 0.0)

    def test_interior_estimate_and_se(self, std_params: ModelParams) -> None:
        stats = run_ensemble(
            EnsembleSpec(std_params, SimConfig(200.0, 2000, record_every=2000),
                         400, 1, observables=("rate",))
        )
        p_hat, se = hitting_probability(stats)
        assert 0.0 < p_hat < 1.0
        assert se == pytest.approx(np.sqrt(p_hat * (1 - p_hat) / 400), rel=1e-12)


class TestSeriesAccessors:
    def test_unknown_observable_raises(self, small_stats) -> None:
        with pytest.raises(UsageError):
            moment_series(small_stats, "spread")
        with pytest.raises(UsageError):
            terminal_samples(small_stats, "spread")

    def test_std_is_unbiased_estimator(self, wide_stats) -> None:
        x = terminal_samples(wide_stats, "rel_size")
        series = moment_series(wide_stats, "rel_size")
        assert series.std[-1] == pytest.approx(x.std(ddof=1), rel=MERGE_REL)

    def test_mean_standard_error(self, wide_stats) -> None:
        series = moment_series(wide_stats, "rel_size")
        se = mean_standard_error(wide_stats, "rel_size")
        assert se[-1] == pytest.approx(series.std[-1] / np.sqrt(20000), rel=1e-12)
        assert se[0] == 0.0

    def test_std_standard_error(self, wide_stats) -> None:
        x = terminal_samples(wide_stats, "rel_size")
        n = x.size
        var = ((x - x.mean()) ** 2).mean()
        mu4 = ((x - x.mean()) ** 4).mean()
        expected = np.sqrt((mu4 - var * var) / n) / (2.0 * np.sqrt(var))
        se = std_standard_error(wide_stats, "rel_size")
        assert se[-1] == pytest.approx(expected, rel=1e-6)
        assert se[0] == 0.0

    def test_terminal_samples_match_paths(self, wide_stats, std_params) -> None:
        c = wide_stats.spec.config
        for i in (0, BLOCK_PATHS, 19999):
            path = simulate_path(std_params, c, PathStream(11, i))
            assert terminal_samples(wide_stats, "rel_size")[i] == np.exp(
                path.terminal.log_q - path.terminal.log_v
            )


class TestCrossSectionalBehavior:
    """Fixed-seed statistical checks at small scale; the acceptance
    suite repeats them at figure scale."""

    def test_relative_size_mean_constant_early(self, small_stats) -> None:
        series = moment_series(small_stats, "rel_size")
        se = mean_standard_error(small_stats, "rel_size")
        inside = np.abs(series.mean - 1.0) <= 3.0 * se
        assert np.all(inside[series.times <= 10.0]), series.mean

    def test_leverage_down_rate_up(self, small_stats) -> None:
        # Early on the cap rarely binds, so mean leverage is nearly a
        # martingale and only the overall trend clears the noise; step
        # violations must stay within 3 combined standard errors.
        lev = moment_series(small_stats, "leverage").mean
        rate = moment_series(small_stats, "rate").mean
        se_lev = mean_standard_error(small_stats, "leverage")
        se_rate = mean_standard_error(small_stats, "rate")
        assert lev[0] == pytest.approx(2.0, rel=1e-12)
        pair_lev = np.sqrt(se_lev[:-1] ** 2 + se_lev[1:] ** 2)
        pair_rate = np.sqrt(se_rate[:-1] ** 2 + se_rate[1:] ** 2)
        assert np.all(np.diff(lev) <= 3.0 * pair_lev)
        assert np.all(np.diff(rate) >= -3.0 * pair_rate)
        assert lev[-1] < lev[0] - 0.1
        assert rate[-1] > rate[0] + 0.002

    def test_growth_factor_mean_bounded(self, small_stats) -> None:
        series = moment_series(small_stats, "growth_factor")
        se = mean_standard_error(small_stats, "growth_factor")
        assert np.all(series.mean <= 2.0 + 3.0 * se)
