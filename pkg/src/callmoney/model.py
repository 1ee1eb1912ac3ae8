"""Closed-form functions of the broker call money market model.

The economy has three coupled quantities: a stock index ``S_t`` following
geometric Brownian motion, the equity ``V_t`` of a continuous-time Kelly
gambler, and a pool ``q_t`` of call money supplied inelastically to fund
the gambler's margin loans.  Everything observable at an instant is a
function of the relative market size ``R = q/V`` and four constants:

    drift             mu    = nu + sigma^2 / 2
    choke rate        r_inf = mu - sigma^2
    leverage cap      b_cap = mu / sigma^2
    equilibrium rate  r(R)  = max(mu - sigma^2 (1 + R), 0)
    Kelly leverage    b(R)  = min(1 + R, b_cap)

``nu`` is the almost-sure asymptotic log growth rate of the index and
``sigma`` its annual volatility.  The choke rate is where loan demand
vanishes; the cap is the leverage a Kelly bettor would take at a zero
rate.  Both clamps switch at the same point ``R = b_cap - 1``, which is
what keeps ``q/V`` driftless in the dynamic model.

All functions accept floats or numpy arrays and are pure; rates are per
year, leverage is dimensionless.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError

__all__ = [
    "ModelParams",
    "derive_params",
    "equilibrium_rate",
    "kelly_leverage",
    "growth_rate",
    "optimal_growth",
    "demand_quantity",
    "inverse_demand",
    "demand_elasticity",
]


@dataclass(frozen=True)
class ModelParams:
    """Initial market sizes plus the derived model constants.

    Instances are normally built by :func:`derive_params`, which
    validates inputs and computes the derived fields.  Constructing one
    directly skips validation; tests use that to probe degenerate cases
    such as an empty loan pool (``q0 = 0``).

    Attributes
    ----------
    q0, v0, s0 : float
        Initial loan pool, gambler equity, and index price (currency).
    nu : float
        Asymptotic log growth rate of the index, per year.
    sigma : float
        Annual log volatility of the index.
    mu : float
        Arithmetic drift, ``nu + sigma^2/2``.
    choke_rate : float
        Rate at which loan demand vanishes, ``mu - sigma^2``.
    max_leverage : float
        Kelly leverage at a zero rate, ``mu / sigma^2``.
    degenerate : bool
        True when ``max_leverage < 1`` (drift below ``sigma^2/2``).
        Such parameter sets are for exploration only: the equilibrium
        rate is pinned at zero and the theorem suites exclude them.
    """

    q0: float
    v0: float
    s0: float
    nu: float
    sigma: float
    mu: float
    choke_rate: float
    max_leverage: float
    degenerate: bool = False

    @property
    def initial_ratio(self) -> float:
        """Initial relative market size ``q0 / v0``."""
        return self.q0 / self.v0


def derive_params(
    q0: float,
    v0: float,
    s0: float,
    nu: float,
    sigma: float,
    strict: bool = True,
) -> ModelParams:
    """Validate raw inputs and derive the model constants.

    Parameters
    ----------
    q0, v0, s0 : float
        Initial loan pool, gambler equity, and index price; all > 0.
    nu, sigma : float
        Index log growth rate and volatility; ``sigma > 0``.
    strict : bool
        When True (default), reject ``nu < sigma^2/2``, which would put
        the leverage cap below 1.  When False, construct anyway and set
        the ``degenerate`` flag; the rate then sits at the zero clamp.

    Raises
    ------
    ParameterError
        Non-positive ``sigma``, ``q0``, ``v0``, or ``s0``.
    DomainError
        ``nu < sigma^2/2`` in strict mode.
    """
    q0, v0, s0, nu, sigma = (float(x) for x in (q0, v0, s0, nu, sigma))
    if sigma <= 0.0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    for name, value in (("q0", q0), ("v0", v0), ("s0", s0)):
        if value <= 0.0:
            raise ParameterError(f"{name} must be positive, got {value}")
    sigma_sq = sigma * sigma
    mu = nu + 0.5 * sigma_sq
    max_leverage = mu / sigma_sq
    degenerate = max_leverage < 1.0
    if strict and degenerate:
        raise DomainError(
            f"nu={nu} is below sigma^2/2={0.5 * sigma_sq}; the leverage cap "
            f"{max_leverage:.4f} falls under 1 (pass strict=False to explore anyway)"
        )
    return ModelParams(
        q0=q0,
        v0=v0,
        s0=s0,
        nu=nu,
        sigma=sigma,
        mu=mu,
        choke_rate=mu - sigma_sq,
        max_leverage=max_leverage,
        degenerate=degenerate,
    )


def _check_ratio(R: np.ndarray | float) -> None:
    if np.any(np.asarray(R) < 0.0):
        raise DomainError("relative market size R must be >= 0")


def equilibrium_rate(R: np.ndarray | float, p: ModelParams):
    """Market-clearing margin rate at relative market size ``R``.

    Intersecting the inelastic supply ``q`` with the gambler's demand
    curve gives ``max(mu - sigma^2 (1 + R), 0)``.  The clamp returns an
    exact ``0.0`` so that zero-rate hits are detectable by equality.
    Always in ``[0, choke_rate]`` when the choke rate is positive.
    """
    _check_ratio(R)
    sigma_sq = p.sigma * p.sigma
    return np.maximum(p.mu - sigma_sq * (1.0 + R), 0.0)


def kelly_leverage(R: np.ndarray | float, p: ModelParams):
    """Growth-optimal leverage at relative market size ``R``.

    The gambler absorbs the whole pool until the cap binds:
    ``min(1 + R, max_leverage)``.  Always in ``[1, max_leverage]`` for
    non-degenerate parameters.
    """
    _check_ratio(R)
    return np.minimum(1.0 + R, p.max_leverage)


def growth_rate(b: np.ndarray | float, r_L: np.ndarray | float, p: ModelParams):
    """Expected log growth per year of equity levered ``b``-fold at rate ``r_L``.

    Evaluates ``r_L + (mu - r_L) b - sigma^2 b^2 / 2``.  At ``b = 1``
    this is ``nu`` for every rate: an unlevered gambler neither pays nor
    earns the margin rate.
    """
    if np.any(np.asarray(b) < 1.0):
        raise DomainError("leverage b must be >= 1")
    if np.any(np.asarray(r_L) < 0.0):
        raise DomainError("rate r_L must be >= 0")
    sigma_sq = p.sigma * p.sigma
    return r_L + (p.mu - r_L) * b - 0.5 * sigma_sq * b * b


def optimal_growth(r_L: np.ndarray | float, p: ModelParams):
    """Maximized expected log growth per year at margin rate ``r_L``.

    The unconstrained maximizer of :func:`growth_rate` is
    ``b = (mu - r_L)/sigma^2``; when that falls below 1 (rates above the
    choke) the floor at ``b = 1`` applies and the value is ``nu``.  The
    result always lies in ``[nu, mu^2/(2 sigma^2)]``, the ends attained
    at the choke rate and at a zero rate.
    """
    rates = np.asarray(r_L, dtype=float)
    if np.any(rates < 0.0):
        raise DomainError("rate r_L must be >= 0")
    sigma_sq = p.sigma * p.sigma
    interior = rates + 0.5 * ((p.mu - rates) / p.sigma) ** 2
    value = np.where(p.mu - rates >= sigma_sq, interior, p.nu)
    if value.ndim == 0:
        return value[()]
    return value


def demand_quantity(V: np.ndarray | float, r_L: np.ndarray | float, p: ModelParams):
    """Instantaneous loan demand of a gambler with equity ``V`` at rate ``r_L``.

    Evaluates ``(mu/sigma^2 - 1) V - (V/sigma^2) r_L``; linear in the
    rate, vanishing at the choke rate.  May go negative for rates above
    the choke; callers interpret that as zero demand.
    """
    if np.any(np.asarray(V) <= 0.0):
        raise DomainError("equity V must be positive")
    if np.any(np.asarray(r_L) < 0.0):
        raise DomainError("rate r_L must be >= 0")
    sigma_sq = p.sigma * p.sigma
    return (p.mu / sigma_sq - 1.0) * V - (V / sigma_sq) * r_L


def inverse_demand(q: np.ndarray | float, V: np.ndarray | float, p: ModelParams):
    """Rate at which a gambler with equity ``V`` demands exactly ``q``.

    Evaluates ``mu - sigma^2 (1 + q/V)``; round-trips with
    :func:`demand_quantity` on the demand curve.
    """
    if np.any(np.asarray(V) <= 0.0):
        raise DomainError("equity V must be positive")
    sigma_sq = p.sigma * p.sigma
    return p.mu - sigma_sq * (1.0 + np.asarray(q, dtype=float) / V)


def demand_elasticity(q: np.ndarray | float, V: np.ndarray | float, p: ModelParams):
    """Elasticity of loan demand at quantity ``q`` and equity ``V``.

    Evaluates ``(mu/sigma^2 - 1)(V/q) - 1``; equals 1 at the midpoint of
    the demand curve and 0 at the zero-rate intercept.
    """
    if np.any(np.asarray(q) <= 0.0):
        raise DomainError("quantity q must be positive for elasticity")
    if np.any(np.asarray(V) <= 0.0):
        raise DomainError("equity V must be positive")
    sigma_sq = p.sigma * p.sigma
    return (p.mu / sigma_sq - 1.0) * (np.asarray(V, dtype=float) / q) - 1.0
