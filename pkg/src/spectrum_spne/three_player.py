"""Two symmetric spectrum owners and one lessee on a circular preference space.

The lessee sits at angle 0 and each owner at the far end of an arc whose
length grows with the share of spectrum it leased out.  Quantities are per
owner: ``i_l`` is each owner's holding and ``i_f`` what the lessee leases
from each.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernel import SequentialGame, maximize_1d
from .model import (
    EquilibriumResult,
    MarketOutcome,
    MarketParams,
    StrategyProfile,
    Tag,
    ValidationError,
    metrics,
)

TWO_PI = 2.0 * math.pi


class RegimeError(ValueError):
    """Prices fall in the region where the lessee takes every end user."""


@dataclass(frozen=True)
class ArcLayout:
    phi_01: float
    phi_02: float
    phi_12: float


def arcs(i_l: float, i_f: float) -> ArcLayout:
    if i_l <= 0:
        raise ValidationError(f"i_l must be positive, got {i_l}")
    side = math.pi * (i_f + i_l) / (2.0 * i_l)
    return ArcLayout(side, side, math.pi * (i_l - i_f) / i_l)


def boundary_location(params: MarketParams, profile: StrategyProfile) -> float:
    """Distance from the lessee to its boundary with either owner."""
    lay = arcs(profile.i_l, profile.i_f)
    return lay.phi_01 / 2.0 + (profile.p_l - profile.p_f) / (2.0 * params.t)


def three_player_demand(params: MarketParams, profile: StrategyProfile) -> tuple[float, float, float]:
    """``(n_mvno, n_mno1, n_mno2)``; raises :class:`RegimeError` when the lessee would take everybody."""
    lay = arcs(profile.i_l, profile.i_f)
    if profile.p_l - profile.p_f >= params.t * lay.phi_01:
        raise RegimeError("p_l - p_f >= t*phi_01: no equilibrium in this price region")
    x0 = boundary_location(params, profile)
    if x0 <= 0:
        return 0.0, math.pi, math.pi
    n_f = lay.phi_01 + (profile.p_l - profile.p_f) / params.t
    n_l = math.pi * (3.0 * profile.i_l - profile.i_f) / (4.0 * profile.i_l) + (profile.p_f - profile.p_l) / (2.0 * params.t)
    return n_f, n_l, n_l


def symmetric_demand(params: MarketParams, i_l, i_f, p_l, p_f):
    """Exact lessee and per-owner demand when both owners charge ``p_l``.

    Follows from shortest-arc distances: owners split their shared arc
    evenly, and once the price gap reaches ``t*phi_01`` the lessee is
    preferred even at an owner's own location, so it serves the whole circle.
    """
    i_l = np.asarray(i_l, dtype=float)
    side = math.pi * (np.asarray(i_f, dtype=float) + i_l) / (2.0 * i_l)
    gap = np.asarray(p_l, dtype=float) - np.asarray(p_f, dtype=float)
    n_f = np.clip(side + gap / params.t, 0.0, 2.0 * side)
    n_f = np.where(gap >= params.t * side, TWO_PI, n_f)
    return n_f, (TWO_PI - n_f) / 2.0


def three_player_payoffs(params: MarketParams, i_l, i_f, p_l, p_f):
    """``(pi_owner, pi_lessee)``; the lessee pays ``s*i_f**2`` to each owner."""
    n_f, n_l = symmetric_demand(params, i_l, i_f, p_l, p_f)
    i_l = np.asarray(i_l, dtype=float)
    i_f = np.asarray(i_f, dtype=float)
    pi_f = n_f * (p_f - params.c) - 2.0 * params.s * i_f**2
    pi_l = n_l * (p_l - params.c) + params.s * i_f**2 - params.gamma * i_l**2
    return pi_l, pi_f


def three_player_stage3(params: MarketParams, i_l, i_f):
    """Closed-form price equilibrium (vectorized)."""
    i_l = np.asarray(i_l, dtype=float)
    i_f = np.asarray(i_f, dtype=float)
    unit = params.t * math.pi / 3.0
    p_f = unit * (i_f + 5.0 * i_l) / (2.0 * i_l) + params.c
    p_l = unit * (7.0 * i_l - i_f) / (2.0 * i_l) + params.c
    if p_l.ndim == 0:
        return float(p_l), float(p_f)
    return p_l, p_f


def lease_threshold(params: MarketParams) -> float:
    """Owner holding below which the lessee leases everything offered."""
    return 0.5 * math.pi * math.sqrt(params.t / (3.0 * params.s))


def three_player_stage2(params: MarketParams, i_l):
    """Lessee's optimal lease from each owner (vectorized)."""
    arr = np.asarray(i_l, dtype=float)
    k = params.t * math.pi**2
    denom = 72.0 * arr**2 * params.s - k
    share = np.divide(5.0 * k * arr, denom, out=np.array(arr, copy=True), where=denom > 0)
    out = np.where(arr < lease_threshold(params), arr, np.minimum(share, arr))
    return float(out) if out.ndim == 0 else out


def stage1_objective(params: MarketParams, i_l):
    """Owner payoff with the lessee and prices responding optimally."""
    i_l = np.asarray(i_l, dtype=float)
    i_f = np.asarray(three_player_stage2(params, i_l))
    k = params.t * math.pi**2
    return (k / 18.0) * ((7.0 * i_l - i_f) / (2.0 * i_l)) ** 2 + params.s * i_f**2 - params.gamma * i_l**2


def lessee_capture_gain(params: MarketParams, profile: StrategyProfile) -> float:
    """Lessee's gain from pricing ``t*phi_01`` below the owners and serving the whole circle.

    Positive once the lease share ``i_f/i_l`` falls below ``(sqrt(3456) - 58)/2``.
    """
    i_l, i_f, p_l, p_f = profile.as_tuple()
    undercut = p_l - params.t * arcs(i_l, i_f).phi_01
    _, on_path = three_player_payoffs(params, i_l, i_f, p_l, p_f)
    _, captured = three_player_payoffs(params, i_l, i_f, p_l, undercut)
    return float(captured - on_path)


def _outcome(params: MarketParams, prof: StrategyProfile) -> MarketOutcome:
    n_f, n_l, _ = three_player_demand(params, prof)
    pi_l, pi_f = (float(v) for v in three_player_payoffs(params, *prof.as_tuple()))
    return MarketOutcome(x0=boundary_location(params, prof), n_l=n_l, n_f=n_f, pi_l=pi_l, pi_f=pi_f)


def solve_three_player(params: MarketParams) -> EquilibriumResult:
    """Symmetric equilibrium: each owner's holding maximizes its reduced payoff.

    Below the lease threshold the lessee takes everything and the owner's
    payoff rises, so the search starts at the threshold (or stops at the cap).
    Returns NoEquilibrium when the lessee would rather undercut and serve
    everybody at the optimal holding.
    """
    th = lease_threshold(params)
    diag: dict = {"lease_threshold": th}
    if params.delta_lb > th:
        raise ValidationError(f"delta_lb={params.delta_lb} must not exceed the lease threshold {th}")
    cap = params.m_ub
    if cap is not None and cap <= th:
        holdings = [cap]
        diag["capped"] = "m_ub at or below the lease threshold"
    else:
        found = maximize_1d(lambda x: stage1_objective(params, x), th, cap, vectorized=True)
        holdings = [x for x, _ in found]
        if cap is not None and holdings[-1] >= cap * (1.0 - 1e-12):
            diag["capped"] = "m_ub binds above the lease threshold"
    diag["equal_holding_candidate"] = th
    diag["payoffs"] = "pi_l is each owner's payoff and pi_f the lessee's, both from the payoff definitions"
    profiles = []
    for i_l in holdings:
        i_f = float(three_player_stage2(params, i_l))
        p_l, p_f = three_player_stage3(params, i_l, i_f)
        profiles.append(StrategyProfile(i_l, i_f, p_l, p_f))
    prof = profiles[0]
    gain = lessee_capture_gain(params, prof)
    if gain > 1e-12 * max(1.0, params.t * math.pi**2):
        diag["reason"] = (
            "the lessee gains by undercutting the owners to serve the whole circle, "
            "so the symmetric price pair is not an equilibrium at the optimal holding"
        )
        diag["candidate"] = prof
        diag["capture_gain"] = gain
        return EquilibriumResult(Tag.NO_EQUILIBRIUM, diagnostics=diag)
    out = _outcome(params, prof)
    diag["aggregate_lease"] = 2.0 * prof.i_f
    diag["aggregate_fee"] = 2.0 * params.s * prof.i_f**2
    tag = Tag.UNIQUE_INTERIOR if len(profiles) == 1 else Tag.MULTIPLE_CANDIDATES
    res = EquilibriumResult(tag, profiles, outcome=out, diagnostics=diag)
    res.metrics = metrics(prof, out, n_mno=2)
    return res


def three_player_eu_regret(params: MarketParams, profile: StrategyProfile, n_users: int = 4001) -> float:
    """Largest gain from switching, with assignments taken from the demand split."""
    lay = arcs(profile.i_l, profile.i_f)
    n_f, _ = symmetric_demand(params, profile.i_l, profile.i_f, profile.p_l, profile.p_f)
    reach = float(n_f) / 2.0
    theta = np.linspace(0.0, TWO_PI, n_users, endpoint=False)
    pos = np.array([0.0, lay.phi_01, TWO_PI - lay.phi_02])
    dist = np.abs(theta[:, None] - pos[None, :])
    dist = np.minimum(dist, TWO_PI - dist)
    price = np.array([profile.p_f, profile.p_l, profile.p_l])
    util = -params.t * dist - price[None, :]
    from_f = np.minimum(theta, TWO_PI - theta)
    owner = np.where(theta < math.pi, 1, 2)
    chosen = np.where(from_f < reach, 0, owner)
    got = util[np.arange(n_users), chosen]
    return float(np.max(util.max(axis=1) - got))


def three_player_game(params: MarketParams) -> SequentialGame:
    th = lease_threshold(params)
    hi = params.m_ub if params.m_ub is not None else 4.0 * max(th, params.delta_lb)
    return SequentialGame(
        payoff=lambda a, b, pl, pf: three_player_payoffs(params, a, b, pl, pf),
        prices=lambda a, b: three_player_stage3(params, np.asarray(a, dtype=float), np.asarray(b, dtype=float)),
        response=lambda xs: np.asarray(three_player_stage2(params, np.asarray(xs, dtype=float))),
        il_range=(params.delta_lb, hi),
        eu_regret=lambda prof: three_player_eu_regret(params, prof),
        price_halfwidth=max(1.0, 2.0 * params.t * math.pi),
        name="three_player",
    )


def comparison_payoffs(params: MarketParams, i_l, i_f, p_l, p_f):
    """Payoffs on the ``[0, 2*pi]`` line with constant transport cost ``t``."""
    x0 = math.pi + (np.asarray(p_f, dtype=float) - np.asarray(p_l, dtype=float)) / (2.0 * params.t)
    n_l = np.clip(x0, 0.0, TWO_PI)
    n_f = TWO_PI - n_l
    i_l = np.asarray(i_l, dtype=float)
    i_f = np.asarray(i_f, dtype=float)
    pi_l = n_l * (p_l - params.c) + params.s * i_f**2 - params.gamma * i_l**2
    pi_f = n_f * (p_f - params.c) - params.s * i_f**2
    return pi_l, pi_f


def solve_two_player_comparison(params: MarketParams) -> EquilibriumResult:
    """Benchmark where spectrum does not shift preferences: no leasing, minimal holding."""
    price = 2.0 * params.t * math.pi + params.c
    prof = StrategyProfile(params.delta_lb, 0.0, price, price)
    pi_l, pi_f = (float(v) for v in comparison_payoffs(params, *prof.as_tuple()))
    out = MarketOutcome(x0=math.pi, n_l=math.pi, n_f=math.pi, pi_l=pi_l, pi_f=pi_f)
    diag = {"owner_payoff": "2*t*pi**2 - gamma*delta_lb**2, including the holding cost gamma"}
    res = EquilibriumResult(Tag.UNIQUE_INTERIOR, [prof], outcome=out, diagnostics=diag)
    res.metrics = metrics(prof, out)
    return res


def _comparison_regret(params: MarketParams, prof: StrategyProfile, n_users: int = 4001) -> float:
    x = np.linspace(0.0, TWO_PI, n_users)
    u_l = -params.t * x - prof.p_l
    u_f = -params.t * (TWO_PI - x) - prof.p_f
    x0 = math.pi + (prof.p_f - prof.p_l) / (2.0 * params.t)
    chosen = np.where(x < x0, u_l, u_f)
    return float(np.max(np.maximum(u_l, u_f) - chosen))


def comparison_game(params: MarketParams) -> SequentialGame:
    price = 2.0 * params.t * math.pi + params.c
    hi = params.m_ub if params.m_ub is not None else max(1.0, 4.0 * params.delta_lb)
    return SequentialGame(
        payoff=lambda a, b, pl, pf: comparison_payoffs(params, a, b, pl, pf),
        prices=lambda a, b: (np.full(np.broadcast(a, b).shape, price), np.full(np.broadcast(a, b).shape, price)),
        response=lambda xs: np.zeros_like(np.asarray(xs, dtype=float)),
        il_range=(params.delta_lb, hi),
        eu_regret=lambda prof: _comparison_regret(params, prof),
        price_halfwidth=max(1.0, 2.0 * params.t * math.pi),
        name="two_player_comparison",
    )
