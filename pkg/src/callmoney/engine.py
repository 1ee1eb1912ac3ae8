"""Seeded simulation of the coupled market system (S_t, V_t, q_t).

Discretization
--------------
The log-space update is exact for coefficients frozen at the start of
each step.  With ``R = q/V``, ``b = kelly_leverage(R)`` and
``r = equilibrium_rate(R)`` evaluated at the step start, and a single
standard normal ``z`` shared by the index and the gambler's equity:

    log S += nu dt + sigma sqrt(dt) z
    log V += (b mu + (1 - b) r - sigma^2 b^2 / 2) dt + b sigma sqrt(dt) z
    log q += r dt
    I     += b sqrt(dt) z

``I`` accumulates the stochastic integral of the leverage against the
driving Brownian motion; the pathwise envelope check needs it.  Freezing
coefficients keeps three structural properties exact at any step size:
the conditional mean of ``q/V`` over ``z`` is unchanged (both clamps
switch at the same ``R``, so the drift cancels identically), the
envelope margin of :func:`pathwise_lemma1_margin` is a non-negative
deterministic sum, and the drift signs of ``V/S`` and ``q/S`` match the
continuous model.  Only distributional shape carries an O(dt) error.

Randomness
----------
Each path owns a counter-based Philox stream keyed by
``(master_seed, path_index)``; the k-th variate of a stream is a pure
function of that key, so paths can be generated in any batch size or
order, alone or inside an ensemble, with identical results.  Index
values at or above 2**62 are reserved for the decoupled-shock negative
control, which draws the equity shock from its own stream.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import ParameterError
from .model import ModelParams, equilibrium_rate, kelly_leverage

__all__ = [
    "PathStream",
    "standard_normal",
    "SimConfig",
    "MarketState",
    "initial_state",
    "step",
    "Path",
    "simulate_path",
    "MarginSeries",
    "pathwise_lemma1_margin",
    "simulate_block",
    "DECOUPLE_INDEX_OFFSET",
]

# Path index offset for the independent second shock stream used by the
# decoupled negative control; ordinary ensembles never reach it.  Kept
# below 2**63 because numpy routes larger Philox key entries through
# float64, which quantizes them (steps of 2048 near 2**63) and silently
# collapses neighboring streams.
DECOUPLE_INDEX_OFFSET = 2**62

# Philox key entries are exact only below 2**63; see above.
_MAX_KEY = 2**63

# Normal variates are generated in chunks of this many steps at a time.
# Counter-based streams make the chunk size invisible in the output.
_CHUNK_STEPS = 1024


class PathStream:
    """Deterministic per-path source of standard normal variates.

    The stream for ``(master_seed, path_index)`` always yields the same
    sequence, and numpy's generator draws identically whether variates
    are requested one at a time or in batches.
    """

    def __init__(self, master_seed: int, path_index: int) -> None:
        if not 0 <= master_seed < _MAX_KEY or not 0 <= path_index < _MAX_KEY:
            raise ParameterError(
                "master_seed and path_index must lie in [0, 2**63): larger "
                "Philox key entries lose exactness"
            )
        self.master_seed = int(master_seed)
        self.path_index = int(path_index)
        self._gen = np.random.Generator(
            np.random.Philox(key=[self.master_seed, self.path_index])
        )

    def standard_normal(self, size: int | None = None):
        """Next variate(s), advancing the stream counter."""
        return self._gen.standard_normal(size)

    def __repr__(self) -> str:
        return f"PathStream(master_seed={self.master_seed}, path_index={self.path_index})"


def standard_normal(stream: PathStream, size: int | None = None):
    """Module-level alias for :meth:`PathStream.standard_normal`."""
    return stream.standard_normal(size)


@dataclass(frozen=True)
class SimConfig:
    """Time grid: horizon in years, step count, and recording stride.

    Recorded points are every ``record_every`` steps from 0, with the
    final step force-recorded when the stride does not divide evenly.
    """

    horizon_years: float
    n_steps: int
    record_every: int = 1

    def __post_init__(self) -> None:
        if not self.horizon_years > 0.0:
            raise ParameterError(f"horizon_years must be positive, got {self.horizon_years}")
        if self.n_steps < 1:
            raise ParameterError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.record_every < 1:
            raise ParameterError(f"record_every must be >= 1, got {self.record_every}")

    @property
    def dt(self) -> float:
        return self.horizon_years / self.n_steps

    @property
    def recorded_steps(self) -> np.ndarray:
        """Step indices that get recorded, always including 0 and n_steps."""
        idx = np.arange(0, self.n_steps + 1, self.record_every)
        if idx[-1] != self.n_steps:
            idx = np.append(idx, self.n_steps)
        return idx


@dataclass(frozen=True)
class MarketState:
    """Instantaneous system state plus derived equilibrium quantities.

    ``rate`` and ``leverage`` are always the equilibrium values for the
    current ``exp(log_q - log_v)``; ``shock_integral`` accumulates
    ``b sqrt(dt) z``; ``hit_zero`` latches once the rate touches 0.
    """

    t: float
    log_s: float
    log_v: float
    log_q: float
    rate: float
    leverage: float
    shock_integral: float
    hit_zero: bool


def initial_state(p: ModelParams) -> MarketState:
    with np.errstate(divide="ignore"):
        log_q = float(np.log(p.q0)) if p.q0 > 0.0 else float("-inf")
    log_s = float(np.log(p.s0))
    log_v = float(np.log(p.v0))
    R = np.exp(log_q - log_v)
    rate = float(equilibrium_rate(R, p))
    return MarketState(
        t=0.0,
        log_s=log_s,
        log_v=log_v,
        log_q=log_q,
        rate=rate,
        leverage=float(kelly_leverage(R, p)),
        shock_integral=0.0,
        hit_zero=(rate == 0.0),
    )


def _check_finite_state(state: MarketState) -> None:
    # log_q may be -inf (empty loan pool); anything else must be finite.
    if not (np.isfinite(state.log_s) and np.isfinite(state.log_v)):
        raise FloatingPointError(f"non-finite log state at t={state.t}")
    if np.isnan(state.log_q) or state.log_q == np.inf:
        raise FloatingPointError(f"invalid log_q at t={state.t}")


def step(state: MarketState, dt: float, z: float, p: ModelParams) -> MarketState:
    """Advance one step with coefficients frozen at the step start.

    The expression structure deliberately mirrors the vectorized block
    integrator operation for operation so that a path assembled from
    scalar steps is bitwise identical to the corresponding ensemble
    member.
    """
    _check_finite_state(state)
    if not np.isfinite(dt) or not np.isfinite(z) or dt <= 0.0:
        raise FloatingPointError(f"invalid step inputs dt={dt}, z={z}")
    sigma_sq = p.sigma * p.sigma
    sqdt = np.sqrt(dt)
    sig_sqdt = p.sigma * sqdt
    b = state.leverage
    r = state.rate
    log_s = state.log_s + (z * sig_sqdt + p.nu * dt)
    log_v = state.log_v + (
        (((1.0 - b) * r + b * p.mu) + (b * b) * (-0.5 * sigma_sq)) * dt
        + (b * z) * sig_sqdt
    )
    log_q = state.log_q + r * dt
    shock_integral = state.shock_integral + (b * z) * sqdt
    R = np.exp(log_q - log_v)
    new_rate = float(np.maximum((R + 1.0) * (-sigma_sq) + p.mu, 0.0))
    new_leverage = float(np.minimum(R + 1.0, p.max_leverage))
    return MarketState(
        t=state.t + dt,
        log_s=float(log_s),
        log_v=float(log_v),
        log_q=float(log_q),
        rate=new_rate,
        leverage=new_leverage,
        shock_integral=float(shock_integral),
        hit_zero=state.hit_zero or (new_rate == 0.0),
    )


@dataclass(frozen=True)
class Path:
    """A single simulated trajectory sampled on the recording grid."""

    params: ModelParams
    config: SimConfig
    times: np.ndarray
    log_s: np.ndarray
    log_v: np.ndarray
    log_q: np.ndarray
    rate: np.ndarray
    leverage: np.ndarray
    shock_integral: np.ndarray
    hit_zero: bool
    terminal: MarketState

    @property
    def relative_size(self) -> np.ndarray:
        """Recorded ``q_t / V_t``."""
        return np.exp(self.log_q - self.log_v)


def simulate_path(
    p: ModelParams,
    c: SimConfig,
    stream: PathStream,
    *,
    zero_shocks: bool = False,
    shocks: np.ndarray | None = None,
    decouple_shocks: bool = False,
) -> Path:
    """Simulate one path; the same ``z`` drives S and V within a step.

    ``zero_shocks`` and ``shocks`` are test hooks: the former forces
    ``z = 0`` throughout (pure drift), the latter injects a caller-built
    shock array of length ``n_steps`` (used for common-refinement step
    size studies).  ``decouple_shocks`` is the negative control: the
    equity update draws from an independent stream, which breaks the
    single-Brownian coupling the envelope and share-denominated results
    rely on.
    """
    if shocks is not None and len(shocks) != c.n_steps:
        raise ParameterError(f"shocks must have length n_steps={c.n_steps}")
    state = initial_state(p)
    rec_steps = c.recorded_steps
    rec_set = set(int(s) for s in rec_steps)
    n_rec = len(rec_steps)
    times = np.empty(n_rec)
    cols = {name: np.empty(n_rec) for name in
            ("log_s", "log_v", "log_q", "rate", "leverage", "shock_integral")}
    v_stream = (
        PathStream(stream.master_seed, stream.path_index + DECOUPLE_INDEX_OFFSET)
        if decouple_shocks else None
    )

    dt = c.dt
    k = 0
    for s in range(c.n_steps + 1):
        if s in rec_set:
            times[k] = state.t
            cols["log_s"][k] = state.log_s
            cols["log_v"][k] = state.log_v
            cols["log_q"][k] = state.log_q
            cols["rate"][k] = state.rate
            cols["leverage"][k] = state.leverage
            cols["shock_integral"][k] = state.shock_integral
            k += 1
        if s == c.n_steps:
            break
        if zero_shocks:
            z = 0.0
        elif shocks is not None:
            z = float(shocks[s])
        else:
            z = float(stream.standard_normal())
        if v_stream is None:
            state = step(state, dt, z, p)
        else:
            z_v = float(v_stream.standard_normal())
            state = _step_decoupled(state, dt, z, z_v, p)
    return Path(
        params=p,
        config=c,
        times=times,
        hit_zero=state.hit_zero,
        terminal=state,
        **cols,
    )


def _step_decoupled(
    state: MarketState, dt: float, z: float, z_v: float, p: ModelParams
) -> MarketState:
    """Negative-control step: equity driven by its own shock ``z_v``.

    The index and the shock integral keep the primary shock ``z``, so
    the envelope margin no longer telescopes and V/S gains drift.
    """
    _check_finite_state(state)
    sigma_sq = p.sigma * p.sigma
    sqdt = np.sqrt(dt)
    sig_sqdt = p.sigma * sqdt
    b = state.leverage
    r = state.rate
    log_s = state.log_s + (z * sig_sqdt + p.nu * dt)
    log_v = state.log_v + (
        (((1.0 - b) * r + b * p.mu) + (b * b) * (-0.5 * sigma_sq)) * dt
        + (b * z_v) * sig_sqdt
    )
    log_q = state.log_q + r * dt
    shock_integral = state.shock_integral + (b * z) * sqdt
    R = np.exp(log_q - log_v)
    new_rate = float(np.maximum((R + 1.0) * (-sigma_sq) + p.mu, 0.0))
    new_leverage = float(np.minimum(R + 1.0, p.max_leverage))
    return MarketState(
        t=state.t + dt,
        log_s=float(log_s),
        log_v=float(log_v),
        log_q=float(log_q),
        rate=new_rate,
        leverage=new_leverage,
        shock_integral=float(shock_integral),
        hit_zero=state.hit_zero or (new_rate == 0.0),
    )


class MarginSeries(NamedTuple):
    """Envelope margin per recorded time; non-negative when coupled."""

    times: np.ndarray
    margins: np.ndarray


def pathwise_lemma1_margin(path: Path) -> MarginSeries:
    """Margin of the pathwise envelope on ``q_t/V_t`` at recorded times.

    The envelope is ``(q0/V0) exp(-sigma^2 t / 2 - sigma I_t)`` with
    ``I_t`` the accumulated leverage-weighted shock integral; the margin
    is envelope minus actual ``q_t/V_t``.  Under the frozen-coefficient
    scheme the log-space gap is ``(sigma^2/2) sum (b^2 - 1) dt >= 0``,
    so margins are non-negative up to float rounding; 0 exactly at t=0.
    """
    p = path.params
    ratio0 = p.q0 / p.v0
    envelope = ratio0 * np.exp(
        -0.5 * p.sigma * p.sigma * path.times - p.sigma * path.shock_integral
    )
    return MarginSeries(path.times, envelope - path.relative_size)


def simulate_block(
    p: ModelParams,
    c: SimConfig,
    master_seed: int,
    start_index: int,
    count: int,
    recorder: Callable[[int, int, float, dict[str, np.ndarray]], None],
    *,
    decouple_shocks: bool = False,
) -> np.ndarray:
    """Integrate paths ``start_index .. start_index+count-1`` in lockstep.

    At every recorded step the ``recorder`` callback receives
    ``(slot, step_index, t, arrays)`` where ``slot`` counts recorded
    points from 0 and ``arrays`` maps column names (log_s, log_v, log_q,
    rate, leverage, shock_integral, hit) to width-``count`` views that
    are only valid during the call; copy anything kept.  Returns the
    final hit flags.  All arithmetic is ordered exactly as in
    :func:`step`, so path ``i`` here is bitwise equal to
    ``simulate_path`` with ``path_index = i``.
    """
    sigma_sq = p.sigma * p.sigma
    mu = p.mu
    bcap = p.max_leverage
    dt = c.dt
    sqdt = np.sqrt(dt)
    sig_sqdt = p.sigma * sqdt
    nu_dt = p.nu * dt
    n_steps = c.n_steps

    gens = [
        np.random.Generator(np.random.Philox(key=[master_seed, i]))
        for i in range(start_index, start_index + count)
    ]
    v_gens = (
        [
            np.random.Generator(
                np.random.Philox(key=[master_seed, i + DECOUPLE_INDEX_OFFSET])
            )
            for i in range(start_index, start_index + count)
        ]
        if decouple_shocks
        else None
    )

    log_s = np.full(count, np.log(p.s0))
    log_v = np.full(count, np.log(p.v0))
    with np.errstate(divide="ignore"):
        log_q = np.full(count, np.log(p.q0) if p.q0 > 0.0 else -np.inf)
    integral = np.zeros(count)
    hit = np.zeros(count, dtype=bool)

    rec_set = set(int(s) for s in c.recorded_steps)
    buf = np.empty((count, _CHUNK_STEPS))
    z_rows: np.ndarray | None = None
    zv_rows: np.ndarray | None = None
    pos = _CHUNK_STEPS

    R = np.empty(count)
    b = np.empty(count)
    r = np.empty(count)
    w = np.empty(count)
    w2 = np.empty(count)

    t = 0.0
    slot = 0
    for s in range(n_steps + 1):
        # Derived coefficients for the current state.
        np.subtract(log_q, log_v, out=w)
        np.exp(w, out=R)
        np.add(R, 1.0, out=w)
        np.minimum(w, bcap, out=b)
        np.multiply(w, -sigma_sq, out=r)
        np.add(r, mu, out=r)
        np.maximum(r, 0.0, out=r)
        hit |= r == 0.0
        if s in rec_set:
            if not (np.all(np.isfinite(log_s)) and np.all(np.isfinite(log_v))):
                bad = int(
                    np.flatnonzero(~(np.isfinite(log_s) & np.isfinite(log_v)))[0]
                )
                raise FloatingPointError(
                    f"non-finite state in path {start_index + bad} at step {s}"
                )
            recorder(
                slot,
                s,
                t,
                {
                    "log_s": log_s,
                    "log_v": log_v,
                    "log_q": log_q,
                    "rate": r,
                    "leverage": b,
                    "shock_integral": integral,
                    "hit": hit,
                },
            )
            slot += 1
        if s == n_steps:
            break
        if pos == _CHUNK_STEPS:
            n_chunk = min(_CHUNK_STEPS, n_steps - s)
            for j, g in enumerate(gens):
                buf[j, :n_chunk] = g.standard_normal(n_chunk)
            z_rows = buf[:, :n_chunk].T.copy()
            if v_gens is not None:
                for j, g in enumerate(v_gens):
                    buf[j, :n_chunk] = g.standard_normal(n_chunk)
                zv_rows = buf[:, :n_chunk].T.copy()
            pos = 0
        z = z_rows[pos]
        z_v = z if v_gens is None else zv_rows[pos]
        pos += 1
        # log_s += z * sig_sqdt + nu dt
        np.multiply(z, sig_sqdt, out=w)
        np.add(w, nu_dt, out=w)
        log_s += w
        # log_v += (((1-b) r + b mu) + b^2 (-sigma^2/2)) dt + (b z_v) sig_sqdt
        np.subtract(1.0, b, out=w)
        np.multiply(w, r, out=w)
        np.multiply(b, mu, out=w2)
        np.add(w, w2, out=w)
        np.multiply(b, b, out=w2)
        np.multiply(w2, -0.5 * sigma_sq, out=w2)
        np.add(w, w2, out=w)
        np.multiply(w, dt, out=w)
        np.multiply(b, z_v, out=w2)
        np.multiply(w2, sig_sqdt, out=w2)
        np.add(w, w2, out=w)
        log_v += w
        # log_q += r dt
        np.multiply(r, dt, out=w)
        log_q += w
        # I += (b z) sqdt
        np.multiply(b, z, out=w)
        np.multiply(w, sqdt, out=w)
        integral += w
        t = t + dt
    return hit
