"""Base market extended with an outside option.

Each provider's realized subscriptions add to its common-pool share an
exclusive base that shrinks with its own price and grows with the spectrum
it operates: ``n_tilde = alpha * (n + k - p + b * spectrum)``.  Valuations are
equal (``v_l == v_f``).  Closed forms are valid while ``i_l < 4/b``, which
keeps the common pool split for every lease.
"""

from __future__ import annotations

import math

import numpy as np

from .kernel import Quadratic, SequentialGame, adaptive_upper_bound, maximize_1d, quad_max_on_interval
from .model import (
    EquilibriumResult,
    MarketOutcome,
    MarketParams,
    MetricsReport,
    StrategyProfile,
    Tag,
    ValidationError,
)


def _check(params: MarketParams) -> None:
    if params.delta != 0:
        raise ValidationError(f"the outside-option market needs v_l == v_f, got delta={params.delta}")


def spectrum_cap(params: MarketParams) -> float:
    """Open upper bound ``4/b`` on the leader's holding (infinite when ``b == 0``)."""
    return 4.0 / params.b if params.b > 0 else math.inf


def lease_slope(params: MarketParams, i_l):
    """Rate at which the follower's margin rises with its lease."""
    return 1.0 / (5.0 * i_l) + params.b / 5.0


def base_margin(params: MarketParams, i_l):
    """Follower's margin when it leases nothing."""
    return params.b * i_l / 15.0 + 1.0 / 15.0 - params.c / 3.0 + params.k / 3.0


def leader_value(params: MarketParams, i_l, lease):
    """Leader's payoff after prices respond, given the holding and the lease."""
    f, g = lease_slope(params, i_l), base_margin(params, i_l)
    margin = params.b * i_l / 5.0 + 0.2 + g - f * lease
    return 2.0 * params.alpha * margin**2 + params.s * lease**2 - params.gamma * i_l**2


def stationary_lease(params: MarketParams, i_l):
    f, g = lease_slope(params, i_l), base_margin(params, i_l)
    return -2.0 * params.alpha * f * g / (2.0 * params.alpha * f**2 - params.s)


def in_partial_region(params: MarketParams, i_l) -> np.ndarray:
    """Holdings at which the follower leases strictly less than everything."""
    a, s = params.alpha, params.s
    f, g = lease_slope(params, i_l), base_margin(params, i_l)
    return (s > 2 * a * f**2 + 2 * a * f * g / i_l) & (g >= 0) & (i_l < spectrum_cap(params))


def in_full_region(params: MarketParams, i_l) -> np.ndarray:
    """Holdings at which the follower leases everything."""
    a, s = params.alpha, params.s
    f, g = lease_slope(params, i_l), base_margin(params, i_l)
    concave = (g >= 0) & (2 * a * f**2 <= s) & (s <= 2 * a * f**2 + 2 * a * f * g / i_l)
    convex = (2 * a * f**2 + 4 * a * f * g / i_l >= s) & (2 * a * f**2 > s)
    return (concave | convex) & (i_l < spectrum_cap(params))


def stage3_prices(params: MarketParams, i_l, i_f):
    """Closed-form price equilibrium (vectorized)."""
    i_l = np.asarray(i_l, dtype=float)
    i_f = np.asarray(i_f, dtype=float)
    if np.any(i_l >= spectrum_cap(params)) or np.any(i_l <= 0):
        raise ValidationError(f"prices need 0 < i_l < 4/b={spectrum_cap(params)}")
    r = i_f / i_l
    b, c, k = params.b, params.c, params.k
    base = 1.0 / 15.0 + 2.0 * c / 3.0 + k / 3.0
    p_l = base + (1.0 - r) / 5.0 - b * i_f / 5.0 + 4.0 * b * i_l / 15.0
    p_f = base + r / 5.0 + b * i_l / 15.0 + b * i_f / 5.0
    if p_l.ndim == 0:
        return float(p_l), float(p_f)
    return p_l, p_f


def stage2_lease(params: MarketParams, i_l: float) -> tuple[float, str]:
    """Follower's lease and the branch that produced it: ``partial``, ``full`` or ``none``.

    The follower's payoff is quadratic in its lease; ``none`` flags a zero
    lease with a negative margin, which cannot be an equilibrium.
    """
    a, s = params.alpha, params.s
    f, g = lease_slope(params, i_l), base_margin(params, i_l)
    q = Quadratic(2 * a * f**2 - s, 4 * a * f * g, 2 * a * g**2)
    best = quad_max_on_interval(q, 0.0, i_l)
    if best.x >= i_l:
        return i_l, "full"
    if best.x <= 0.0 and g < 0:
        return 0.0, "none"
    return best.x, "partial" if best.x > 0 else "zero"


def _stage2_vec(params: MarketParams, i_l) -> np.ndarray:
    arr = np.asarray(i_l, dtype=float)
    flat = [stage2_lease(params, float(x))[0] for x in np.ravel(arr)]
    return np.array(flat).reshape(arr.shape)


def stage1_objective(params: MarketParams, i_l: float) -> float:
    lease, branch = stage2_lease(params, i_l)
    if branch == "none":
        return -math.inf
    return float(leader_value(params, i_l, lease))


def tilde_demand(params: MarketParams, profile: StrategyProfile, n_l: float, n_f: float) -> tuple[float, float]:
    """Add each provider's exclusive base to its common-pool share."""
    a, k, b = params.alpha, params.k, params.b
    nt_l = a * (n_l + k - profile.p_l + b * (profile.i_l - profile.i_f))
    nt_f = a * (n_f + k - profile.p_f + b * profile.i_f)
    return nt_l, nt_f


def tilde_subscriptions(params: MarketParams, i_l, i_f, p_l, p_f, clip_negative: bool = False):
    """Realized subscriptions ``(n_tilde_L, n_tilde_F)`` including the exclusive bases."""
    i_l = np.asarray(i_l, dtype=float)
    i_f = np.asarray(i_f, dtype=float)
    x0 = params.delta + (1.0 - i_f / i_l) + p_f - p_l
    n_l = np.clip(x0, 0.0, 1.0)
    n_f = 1.0 - n_l
    nt_l = params.alpha * (n_l + params.k - p_l + params.b * (i_l - i_f))
    nt_f = params.alpha * (n_f + params.k - p_f + params.b * i_f)
    if clip_negative:
        nt_l, nt_f = np.maximum(nt_l, 0.0), np.maximum(nt_f, 0.0)
    return nt_l, nt_f


def outside_payoffs(params: MarketParams, i_l, i_f, p_l, p_f):
    nt_l, nt_f = tilde_subscriptions(params, i_l, i_f, p_l, p_f, clip_negative=True)
    lease = params.s * np.asarray(i_f, dtype=float) ** 2
    pi_l = nt_l * (p_l - params.c) + lease - params.gamma * np.asarray(i_l, dtype=float) ** 2
    pi_f = nt_f * (p_f - params.c) - lease
    return pi_l, pi_f


def solve_outside_option(params: MarketParams) -> EquilibriumResult:
    """Leader maximizes its reduced payoff over holdings where some lease is an equilibrium."""
    _check(params)
    cap = spectrum_cap(params)
    if params.delta_lb >= cap:
        raise ValidationError(f"delta_lb={params.delta_lb} must be below 4/b={cap}")
    bounded = params.m_ub is not None and params.m_ub < cap * (1.0 - 1e-9)
    if bounded:
        hi = params.m_ub
    elif math.isfinite(cap):
        hi = cap * (1.0 - 1e-9)
    else:
        hi = adaptive_upper_bound(lambda x: stage1_objective(params, x), params.delta_lb)
    diag: dict = {"spectrum_cap": cap}

    xs = np.linspace(params.delta_lb, hi, 2001)
    valid = np.array([stage2_lease(params, float(x))[1] != "none" for x in xs])
    if not valid.any():
        diag["reason"] = "no holding below 4/b admits a lease with a non-negative margin"
        return EquilibriumResult(Tag.NO_EQUILIBRIUM, diagnostics=diag)

    found = maximize_1d(lambda x: stage1_objective(params, x), params.delta_lb, hi)
    if not bounded and math.isfinite(cap) and found[-1][0] >= hi * (1.0 - 1e-9):
        diag["reason"] = "leader payoff still rising at the open bound 4/b; no maximizer"
        return EquilibriumResult(Tag.NO_EQUILIBRIUM, diagnostics=diag)

    profiles = []
    branches = []
    for i_l, _ in found:
        i_f, branch = stage2_lease(params, i_l)
        p_l, p_f = stage3_prices(params, i_l, i_f)
        profiles.append(StrategyProfile(i_l, i_f, p_l, p_f))
        branches.append(branch)
    diag["lease_branch"] = branches[0]
    if bounded and found[-1][0] >= hi * (1.0 - 1e-12):
        diag["capped"] = "m_ub binds"
    prof = profiles[0]
    out = outside_outcome(params, prof)
    nt_l, nt_f = out.n_l, out.n_f
    if nt_l < 0 or nt_f < 0:
        diag["negative_subscriptions"] = (nt_l, nt_f)
    tag = Tag.UNIQUE_INTERIOR if len(profiles) == 1 else Tag.MULTIPLE_CANDIDATES
    res = EquilibriumResult(tag, profiles, outcome=out, diagnostics=diag)
    res.metrics = MetricsReport(
        degree=prof.i_f / prof.i_l,
        eu_resource_cost=prof.i_f / prof.p_f + (prof.i_l - prof.i_f) / prof.p_l,
        subscription_split=(nt_l, nt_f),
    )
    return res


def outside_outcome(params: MarketParams, prof: StrategyProfile) -> MarketOutcome:
    """Outcome with ``n_l``/``n_f`` holding the realized (tilde) subscriptions."""
    nt_l, nt_f = (float(v) for v in tilde_subscriptions(params, *prof.as_tuple()))
    pi_l, pi_f = (float(v) for v in outside_payoffs(params, *prof.as_tuple()))
    x0 = params.delta + (1.0 - prof.i_f / prof.i_l) + prof.p_f - prof.p_l
    return MarketOutcome(x0=x0, n_l=nt_l, n_f=nt_f, pi_l=pi_l, pi_f=pi_f)


def _eu_regret(params: MarketParams, prof: StrategyProfile, n_users: int = 2001) -> float:
    t_l = prof.i_f / prof.i_l
    x = np.linspace(0.0, 1.0, n_users)
    u_l = params.v_l - t_l * x - prof.p_l
    u_f = params.v_f - (1.0 - t_l) * (1.0 - x) - prof.p_f
    x0 = params.delta + (1.0 - t_l) + prof.p_f - prof.p_l
    chosen = np.where(x < x0, u_l, u_f)
    return float(np.max(np.maximum(u_l, u_f) - chosen))


def outside_game(params: MarketParams) -> SequentialGame:
    _check(params)
    hi = spectrum_cap(params) * (1.0 - 1e-6)
    if params.m_ub is not None:
        hi = min(hi, params.m_ub)
    if not math.isfinite(hi):
        hi = 4.0 * adaptive_upper_bound(lambda x: stage1_objective(params, x), params.delta_lb)
    return SequentialGame(
        payoff=lambda a, b, pl, pf: outside_payoffs(params, a, b, pl, pf),
        prices=lambda a, b: stage3_prices(params, np.asarray(a, dtype=float), np.asarray(b, dtype=float)),
        response=lambda xs: _stage2_vec(params, xs),
        il_range=(params.delta_lb, hi),
        eu_regret=lambda prof: _eu_regret(params, prof),
        price_halfwidth=max(1.0, 2.0 * (params.k + params.b * hi)),
        name="outside",
    )
