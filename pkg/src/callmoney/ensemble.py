"""Monte Carlo ensembles with streaming cross-sectional statistics.

Paths are integrated in fixed blocks of :data:`BLOCK_PATHS` consecutive
path indices.  Each block is reduced to per-time batch summaries (count,
mean, central moment sums M2..M4, min, max) which are then merged in
ascending block order with the pairwise update of Chan/Pebay.  Because
the block boundaries, the per-block arithmetic, and the merge order are
all fixed, the result is bitwise identical no matter how many worker
processes computed the block summaries.

Observables, evaluated on the recording grid from the per-path state:

    rel_size          q/V, the loan pool relative to gambler equity
    rate              equilibrium call money rate
    leverage          gambler leverage
    growth_coeff      instantaneous equity growth rate r + sigma^2 b^2/2
    equity_per_share  V/S
    pool_per_share    q/S
    wealth_per_share  (q + V)/S
    growth_pool       log(q_t/q0)/t     (t > 0 only)
    growth_index      log(S_t/S0)/t     (t > 0 only)
    growth_equity     log(V_t/V0)/t     (t > 0 only)
    growth_factor     (V_t/V0)/(S_t/S0)

The realized-growth observables are undefined at t = 0, so their series
start at the first positive recorded time; every other series covers the
full grid.  The fourth central moment is carried so the delta-method
standard error of a standard-deviation estimate is available downstream.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .engine import SimConfig, simulate_block
from .errors import ParameterError, UsageError
from .model import ModelParams

__all__ = [
    "BLOCK_PATHS",
    "DEFAULT_OBSERVABLES",
    "GROWTH_OBSERVABLES",
    "EnsembleSpec",
    "ObservableSeries",
    "EnsembleStats",
    "MomentSeries",
    "run_ensemble",
    "hitting_probability",
    "moment_series",
    "mean_standard_error",
    "std_standard_error",
    "terminal_samples",
]

# Paths per reduction block.  Part of the determinism contract: changing
# it changes merge boundaries and therefore low-order output bits.
BLOCK_PATHS = 8192


def _rel_size(a: dict, p: ModelParams, t: float) -> np.ndarray:
    return np.exp(a["log_q"] - a["log_v"])


def _rate(a: dict, p: ModelParams, t: float) -> np.ndarray:
    return a["rate"]


def _leverage(a: dict, p: ModelParams, t: float) -> np.ndarray:
    return a["leverage"]


def _growth_coeff(a: dict, p: ModelParams, t: float) -> np.ndarray:
    # On the equilibrium policy the growth coefficient collapses to
    # r + sigma^2 b^2 / 2 on both sides of the leverage cap.
    b = a["leverage"]
    return a["rate"] + (0.5 * p.sigma * p.sigma) * (b * b)


def _equity_per_share(a: dict, p: ModelParams, t: float) -> np.ndarray:
    return np.exp(a["log_v"] - a["log_s"])


def _pool_per_share(a: dict, p: ModelParams, t: float) -> np.ndarray:
    return np.exp(a["log_q"] - a["log_s"])


def _wealth_per_share(a: dict, p: ModelParams, t: float) -> np.ndarray:
    return np.exp(a["log_q"] - a["log_s"]) + np.exp(a["log_v"] - a["log_s"])


def _growth_pool(a: dict, p: ModelParams, t: float) -> np.ndarray:
    return (a["log_q"] - np.log(p.q0)) / t


def _growth_index(a: dict, p: ModelParams, t: float) -> np.ndarray:
    return (a["log_s"] - np.log(p.s0)) / t


def _growth_equity(a: dict, p: ModelParams, t: float) -> np.ndarray:
    return (a["log_v"] - np.log(p.v0)) / t


def _growth_factor(a: dict, p: ModelParams, t: float) -> np.ndarray:
    return np.exp((a["log_v"] - np.log(p.v0)) - (a["log_s"] - np.log(p.s0)))


OBSERVABLES: dict[str, Callable[[dict, ModelParams, float], np.ndarray]] = {
    "rel_size": _rel_size,
    "rate": _rate,
    "leverage": _leverage,
    "growth_coeff": _growth_coeff,
    "equity_per_share": _equity_per_share,
    "pool_per_share": _pool_per_share,
    "wealth_per_share": _wealth_per_share,
    "growth_pool": _growth_pool,
    "growth_index": _growth_index,
    "growth_equity": _growth_equity,
    "growth_factor": _growth_factor,
}

GROWTH_OBSERVABLES = frozenset({"growth_pool", "growth_index", "growth_equity"})

DEFAULT_OBSERVABLES: tuple[str, ...] = tuple(OBSERVABLES)


@dataclass(frozen=True)
class EnsembleSpec:
    """Complete description of a Monte Carlo experiment.

    ``decouple_shocks`` routes the equity shock through an independent
    stream; it exists solely for the negative-control verification run.
    """

    params: ModelParams
    config: SimConfig
    n_paths: int
    master_seed: int
    observables: tuple[str, ...] = DEFAULT_OBSERVABLES
    decouple_shocks: bool = False

    def __post_init__(self) -> None:
        if self.n_paths < 1:
            raise ParameterError(f"n_paths must be >= 1, got {self.n_paths}")
        if self.master_seed < 0:
            raise ParameterError(f"master_seed must be >= 0, got {self.master_seed}")
        if not self.observables:
            raise UsageError("observables must be non-empty")
        unknown = [o for o in self.observables if o not in OBSERVABLES]
        if unknown:
            raise UsageError(
                f"unknown observables {unknown}; valid names: {sorted(OBSERVABLES)}"
            )
        if self.params.q0 == 0.0 and "growth_pool" in self.observables:
            raise UsageError("growth_pool is undefined for an empty initial pool")


@dataclass(frozen=True)
class ObservableSeries:
    """Streaming cross-sectional moments of one observable over time.

    ``m2``..``m4`` are sums of centered powers; variance is
    ``m2/(count-1)``.  ``times`` may omit t = 0 (realized-growth family).
    """

    times: np.ndarray
    count: np.ndarray
    mean: np.ndarray
    m2: np.ndarray
    m3: np.ndarray
    m4: np.ndarray
    minimum: np.ndarray
    maximum: np.ndarray


@dataclass(frozen=True)
class EnsembleStats:
    """Reduced ensemble: moment series, hit counting, terminal samples."""

    spec: EnsembleSpec
    times: np.ndarray
    series: dict[str, ObservableSeries]
    hit_count: int
    terminal: dict[str, np.ndarray]


def _batch_summary(x: np.ndarray) -> tuple:
    n = x.size
    m = float(x.mean())
    d = x - m
    d2 = d * d
    return (
        n,
        m,
        float(d2.sum()),
        float((d2 * d).sum()),
        float((d2 * d2).sum()),
        float(x.min()),
        float(x.max()),
    )


def _merge_summaries(a: tuple, b: tuple) -> tuple:
    # Pairwise update of streaming central moment sums (Chan-Golub-LeVeque
    # for M2, Pebay's extension for M3/M4).
    na, ma, m2a, m3a, m4a, mna, mxa = a
    nb, mb, m2b, m3b, m4b, mnb, mxb = b
    n = na + nb
    d = mb - ma
    mean = ma + d * nb / n
    m2 = m2a + m2b + d * d * na * nb / n
    m3 = (
        m3a
        + m3b
        + d**3 * na * nb * (na - nb) / n**2
        + 3.0 * d * (na * m2b - nb * m2a) / n
    )
    m4 = (
        m4a
        + m4b
        + d**4 * na * nb * (na * na - na * nb + nb * nb) / n**3
        + 6.0 * d * d * (na * na * m2b + nb * nb * m2a) / n**2
        + 4.0 * d * (na * m3b - nb * m3a) / n
    )
    return (n, mean, m2, m3, m4, min(mna, mnb), max(mxa, mxb))


class _BlockSummary(NamedTuple):
    times: np.ndarray
    moments: dict[str, list[tuple]]
    terminal: dict[str, np.ndarray]
    hit_count: int


def _summarize_block(
    p: ModelParams,
    c: SimConfig,
    observables: tuple[str, ...],
    master_seed: int,
    start_index: int,
    count: int,
    decouple_shocks: bool,
) -> _BlockSummary:
    n_rec = len(c.recorded_steps)
    times = np.empty(n_rec)
    moments: dict[str, list[tuple]] = {name: [] for name in observables}
    terminal: dict[str, np.ndarray] = {}
    last = n_rec - 1

    def recorder(slot: int, step_index: int, t: float, arrays: dict) -> None:
        times[slot] = t
        for name in observables:
            if slot == 0 and name in GROWTH_OBSERVABLES:
                continue
            x = OBSERVABLES[name](arrays, p, t)
            moments[name].append(_batch_summary(x))
            if slot == last:
                terminal[name] = np.array(x)

    hit = simulate_block(
        p,
        c,
        master_seed,
        start_index,
        count,
        recorder,
        decouple_shocks=decouple_shocks,
    )
    return _BlockSummary(times, moments, terminal, int(hit.sum()))


def _summarize_block_args(args: tuple) -> _BlockSummary:
    return _summarize_block(*args)


def run_ensemble(spec: EnsembleSpec, *, workers: int | None = None) -> EnsembleStats:
    """Simulate ``spec.n_paths`` paths and reduce them to statistics.

    ``workers`` > 1 farms block summaries out to worker processes; the
    output is bitwise identical to the serial run because blocks are
    merged in index order either way.  A non-finite state in any path
    aborts the whole run with an error naming the offending path index.
    """
    starts = list(range(0, spec.n_paths, BLOCK_PATHS))
    args = [
        (
            spec.params,
            spec.config,
            spec.observables,
            spec.master_seed,
            start,
            min(BLOCK_PATHS, spec.n_paths - start),
            spec.decouple_shocks,
        )
        for start in starts
    ]
    if workers is not None and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            summaries = list(pool.map(_summarize_block_args, args))
    else:
        summaries = [_summarize_block(*a) for a in args]

    times = summaries[0].times
    merged: dict[str, list[tuple]] = {
        name: list(summaries[0].moments[name]) for name in spec.observables
    }
    for block in summaries[1:]:
        for name in spec.observables:
            rows = block.moments[name]
            acc = merged[name]
            for i, row in enumerate(rows):
                acc[i] = _merge_summaries(acc[i], row)

    series: dict[str, ObservableSeries] = {}
    for name in spec.observables:
        rows = merged[name]
        cols = list(zip(*rows))
        obs_times = times[1:] if name in GROWTH_OBSERVABLES else times
        series[name] = ObservableSeries(
            times=obs_times,
            count=np.asarray(cols[0], dtype=np.int64),
            mean=np.asarray(cols[1]),
            m2=np.asarray(cols[2]),
            m3=np.asarray(cols[3]),
            m4=np.asarray(cols[4]),
            minimum=np.asarray(cols[5]),
            maximum=np.asarray(cols[6]),
        )

    terminal = {
        name: np.concatenate([block.terminal[name] for block in summaries])
        for name in spec.observables
    }
    hit_count = sum(block.hit_count for block in summaries)
    return EnsembleStats(
        spec=spec,
        times=times,
        series=series,
        hit_count=hit_count,
        terminal=terminal,
    )


def hitting_probability(stats: EnsembleStats) -> tuple[float, float]:
    """Fraction of paths whose rate touched zero, with binomial SE."""
    n = stats.spec.n_paths
    p = stats.hit_count / n
    return p, float(np.sqrt(p * (1.0 - p) / n))


def _series_or_raise(stats: EnsembleStats, observable: str) -> ObservableSeries:
    if observable not in stats.series:
        raise UsageError(
            f"observable {observable!r} was not tracked; available: "
            f"{sorted(stats.series)}"
        )
    return stats.series[observable]


class MomentSeries(NamedTuple):
    times: np.ndarray
    mean: np.ndarray
    std: np.ndarray


def moment_series(stats: EnsembleStats, observable: str) -> MomentSeries:
    """Time-ordered (t, mean, std) rows; std is the unbiased estimator.

    A single-path ensemble reports std 0 rather than dividing by zero.
    """
    s = _series_or_raise(stats, observable)
    std = np.where(
        s.count > 1,
        np.sqrt(np.maximum(s.m2, 0.0) / np.maximum(s.count - 1, 1)),
        0.0,
    )
    return MomentSeries(s.times, s.mean.copy(), std)


def mean_standard_error(stats: EnsembleStats, observable: str) -> np.ndarray:
    """Standard error of the cross-sectional mean at each time."""
    s = _series_or_raise(stats, observable)
    _, _, std = moment_series(stats, observable)
    return std / np.sqrt(s.count)


def std_standard_error(stats: EnsembleStats, observable: str) -> np.ndarray:
    """Delta-method standard error of the cross-sectional std.

    Var(s^2) is approximated by (m4 - var^2)/n from the stored fourth
    moment; times where the variance is 0 (deterministic cross-section)
    report 0.
    """
    s = _series_or_raise(stats, observable)
    n = s.count.astype(float)
    var = np.maximum(s.m2, 0.0) / n
    mu4 = s.m4 / n
    var_of_var = np.maximum(mu4 - var * var, 0.0) / n
    with np.errstate(divide="ignore", invalid="ignore"):
        se = np.where(var > 0.0, np.sqrt(var_of_var) / (2.0 * np.sqrt(var)), 0.0)
    return se


def terminal_samples(stats: EnsembleStats, observable: str) -> np.ndarray:
    """All ``n_paths`` terminal values of one observable, in path order."""
    if observable not in stats.terminal:
        raise UsageError(
            f"observable {observable!r} was not tracked; available: "
            f"{sorted(stats.terminal)}"
        )
    return stats.terminal[observable]
