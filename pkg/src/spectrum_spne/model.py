"""Market parameters, strategy profiles and the two-provider end-user split.

Provider ``L`` owns spectrum and sits at 0 on the unit preference line;
provider ``F`` leases part of that spectrum and sits at 1.  The transport
cost an end user pays to join ``L`` grows with the share of spectrum that
``F`` has leased, so ``t_L = i_f / i_l`` and ``t_F = 1 - t_L``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any


class ValidationError(ValueError):
    """Raised when market parameters or a strategy profile are out of domain."""


@dataclass(frozen=True)
class MarketParams:
    """Exogenous market parameters.

    Attributes:
        s: per-unit fee the follower pays the leader for leased spectrum.
        gamma: leader's per-unit acquisition cost (quadratic in quantity).
        c: per-subscriber operating cost, common to all providers.
        v_l, v_f: static end-user valuations of the two providers.
        delta_lb: smallest spectrum amount the leader may acquire.
        m_ub: optional cap on the leader's spectrum (``None`` means unbounded).
        alpha, k, b: outside-option demand shape (scale, base, spectrum weight).
        t: per-radian transport cost in the circular three-provider market.
    """

    s: float
    gamma: float
    c: float
    v_l: float = 0.0
    v_f: float = 0.0
    delta_lb: float = 1e-3
    m_ub: float | None = None
    alpha: float = 1.0
    k: float = 1.0
    b: float = 2.0
    t: float = 1.0

    def __post_init__(self) -> None:
        for name in ("s", "gamma", "c", "v_l", "v_f", "delta_lb", "alpha", "k", "b", "t"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ValidationError(f"{name} must be a finite number, got {value!r}")
        if not self.gamma > 0:
            raise ValidationError(f"gamma must be positive, got {self.gamma}")
        if not self.s > self.gamma:
            raise ValidationError(f"s must exceed gamma (s={self.s}, gamma={self.gamma})")
        if not self.delta_lb > 0:
            raise ValidationError(f"delta_lb must be positive, got {self.delta_lb}")
        if self.m_ub is not None:
            if not math.isfinite(self.m_ub) or self.m_ub < self.delta_lb:
                raise ValidationError(
                    f"m_ub must be finite and >= delta_lb (m_ub={self.m_ub}, delta_lb={self.delta_lb})"
                )
        if not self.alpha > 0:
            raise ValidationError(f"alpha must be positive, got {self.alpha}")
        if not self.t > 0:
            raise ValidationError(f"t must be positive, got {self.t}")
        if self.b < 0:
            raise ValidationError(f"b must be non-negative, got {self.b}")

    @property
    def delta(self) -> float:
        """Valuation advantage of the leader over the follower."""
        return self.v_l - self.v_f

    def with_(self, **changes: Any) -> "MarketParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class StrategyProfile:
    i_l: float
    i_f: float
    p_l: float
    p_f: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.i_l, self.i_f, self.p_l, self.p_f)


@dataclass(frozen=True)
class MarketOutcome:
    x0: float
    n_l: float
    n_f: float
    pi_l: float
    pi_f: float


@dataclass(frozen=True)
class MetricsReport:
    degree: float
    eu_resource_cost: float
    subscription_split: tuple[float, float]


class Tag(str, Enum):
    UNIQUE_INTERIOR = "UniqueInterior"
    CORNER_FAMILY = "CornerFamily"
    MULTIPLE_CANDIDATES = "MultipleCandidates"
    NO_EQUILIBRIUM = "NoEquilibrium"


@dataclass
class EquilibriumResult:
    """Solver output.

    ``profiles[0]`` is the representative profile; for a corner family it
    sits at the midpoint of ``price_interval``, which constrains the price
    named by ``interval_price``.
    """

    tag: Tag
    profiles: list[StrategyProfile] = field(default_factory=list)
    price_interval: tuple[float, float] | None = None
    interval_price: str | None = None
    outcome: MarketOutcome | None = None
    metrics: MetricsReport | None = None
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def profile(self) -> StrategyProfile | None:
        return self.profiles[0] if self.profiles else None


def transport_costs(i_l: float, i_f: float) -> tuple[float, float]:
    """Return ``(t_L, t_F)`` for the given spectrum holdings."""
    if i_l <= 0:
        raise ValidationError(f"i_l must be positive, got {i_l}")
    t_l = i_f / i_l
    return t_l, 1.0 - t_l


def indifference_point(delta: float, t_l: float, t_f: float, p_l: float, p_f: float) -> float:
    """Location where an end user is indifferent between the two providers.

    Solves ``v_L - t_L x - p_L = v_F - t_F (1 - x) - p_F`` for ``x``.
    """
    total = t_l + t_f
    if total <= 0:
        raise ValidationError("transport costs must have a positive sum")
    return (delta + t_f + p_f - p_l) / total


def indifferent_location(params: MarketParams, profile: StrategyProfile) -> float:
    t_l, t_f = transport_costs(profile.i_l, profile.i_f)
    return indifference_point(params.delta, t_l, t_f, profile.p_l, profile.p_f)


def subscriptions(x0: float) -> tuple[float, float]:
    """Split the unit mass of end users given the indifferent location."""
    n_l = min(max(x0, 0.0), 1.0)
    return n_l, 1.0 - n_l


def payoffs(params: MarketParams, profile: StrategyProfile, n_l: float, n_f: float) -> tuple[float, float]:
    """Return ``(pi_L, pi_F)``; the leasing fee is a transfer from F to L."""
    lease = params.s * profile.i_f**2
    pi_f = n_f * (profile.p_f - params.c) - lease
    pi_l = n_l * (profile.p_l - params.c) + lease - params.gamma * profile.i_l**2
    return pi_l, pi_f


def market_outcome(params: MarketParams, profile: StrategyProfile) -> MarketOutcome:
    x0 = indifferent_location(params, profile)
    n_l, n_f = subscriptions(x0)
    pi_l, pi_f = payoffs(params, profile, n_l, n_f)
    return MarketOutcome(x0=x0, n_l=n_l, n_f=n_f, pi_l=pi_l, pi_f=pi_f)


def metrics(profile: StrategyProfile, outcome: MarketOutcome, n_mno: int = 1) -> MetricsReport:
    """Degree of cooperation, resource-per-price cost to end users, subscription split.

    ``n_mno`` counts spectrum-owning providers; with two of them each one's
    retained and leased spectrum enters the end-user cost.
    """
    if profile.p_l <= 0 or profile.p_f <= 0:
        raise ValidationError(f"prices must be positive (p_l={profile.p_l}, p_f={profile.p_f})")
    if profile.i_l <= 0:
        raise ValidationError(f"i_l must be positive, got {profile.i_l}")
    cost = n_mno * (profile.i_f / profile.p_f + (profile.i_l - profile.i_f) / profile.p_l)
    return MetricsReport(
        degree=profile.i_f / profile.i_l,
        eu_resource_cost=cost,
        subscription_split=(outcome.n_l, outcome.n_f),
    )
