"""One leader, one follower, every end user subscribes to exactly one of them.

The game is solved backwards: prices given both spectrum holdings, the
follower's lease given the leader's holding, then the leader's holding.
Off the interior branch the price subgame has a continuum of equilibria in
which one provider serves everybody; ``continuation_prices`` fixes one
selection so that deviations can be evaluated.
"""

from __future__ import annotations

import math

import numpy as np

from .kernel import Quadratic, SequentialGame, maximize_1d, quad_max_on_interval
from .model import (
    EquilibriumResult,
    MarketParams,
    StrategyProfile,
    Tag,
    ValidationError,
    market_outcome,
    metrics,
)

_TIE = 1e-12


def lower_bound(params: MarketParams) -> float:
    """Leader spectrum at or below which the follower leases everything."""
    return math.sqrt((2.0 - params.delta) / (9.0 * params.s))


def singular_point(params: MarketParams) -> float:
    """Where the follower's lease objective switches from convex to concave."""
    return 1.0 / math.sqrt(9.0 * params.s)


def deterrence_level(params: MarketParams) -> float:
    """Smallest leader holding at which a follower with ``delta >= 1`` prefers not to lease.

    Below it, leasing everything earns the follower ``(2-delta)^2/9 - s*i_l^2 > 0``.
    """
    if params.delta >= 2.0:
        return 0.0
    return (2.0 - params.delta) / (3.0 * math.sqrt(params.s))


def _interior_margins(delta: float, r):
    return (2.0 + delta - r) / 3.0, (1.0 - delta + r) / 3.0


def is_interior(delta: float, r) -> np.ndarray | bool:
    """True where the price subgame has its unique split-market equilibrium."""
    return (delta - 1.0 < r) & (r < delta + 2.0)


def stage3_prices(params: MarketParams, i_l: float, i_f: float) -> tuple[float, float]:
    """Unique split-market equilibrium prices; margins equal subscriptions."""
    if i_l <= 0 or not 0 <= i_f <= i_l:
        raise ValidationError(f"need 0 <= i_f <= i_l and i_l > 0 (i_l={i_l}, i_f={i_f})")
    r = i_f / i_l
    if not is_interior(params.delta, r):
        raise ValidationError(
            f"no split-market price equilibrium at delta={params.delta}, i_f/i_l={r}"
        )
    m_l, m_f = _interior_margins(params.delta, r)
    return params.c + m_l, params.c + m_f


def continuation_prices(params: MarketParams, i_l, i_f, anchor_p_l: float | None = None):
    """Stage-3 play in every subgame, vectorized over spectrum arrays.

    Split-market subgames use the unique equilibrium.  When one provider
    serves everybody the leader's price is held at ``anchor_p_l`` (its
    on-path value) when that remains an equilibrium, and otherwise clipped to
    the nearest equilibrium price; the other price sits on the indifference
    boundary.  Without an anchor the serving provider charges its lowest
    equilibrium price ``c + 1``, which joins the split-market branch
    continuously.
    """
    i_l = np.asarray(i_l, dtype=float)
    i_f = np.asarray(i_f, dtype=float)
    d, c = params.delta, params.c
    r = np.divide(i_f, i_l, out=np.zeros(np.broadcast(i_l, i_f).shape), where=i_l > 0)
    m_l, m_f = _interior_margins(d, r)
    p_l = c + m_l
    p_f = c + m_f

    lead = r <= d - 1.0
    if np.any(lead):
        hi = c + d - r
        anchor = c + 1.0 if anchor_p_l is None else anchor_p_l
        pl_lead = np.clip(anchor, c + 1.0, hi)
        p_l = np.where(lead, pl_lead, p_l)
        p_f = np.where(lead, pl_lead - d + r, p_f)

    follow = r >= d + 2.0
    if np.any(follow):
        t_f = 1.0 - r
        if anchor_p_l is None:
            pf_follow = np.full_like(r, c + 1.0)
        else:
            pf_follow = np.clip(anchor_p_l - d - t_f, c + 1.0, c - d - t_f)
        p_f = np.where(follow, pf_follow, p_f)
        p_l = np.where(follow, pf_follow + d + t_f, p_l)
    return p_l, p_f


def _follower_pieces(params: MarketParams, i_l: float, anchor_p_l: float | None):
    """(quadratic in i_f, lo, hi) pieces of the follower's stage-2 payoff."""
    d, s = params.delta, params.s
    pieces = []

    def add(q: Quadratic, r_lo: float, r_hi: float) -> None:
        r_lo, r_hi = max(r_lo, 0.0), min(r_hi, 1.0)
        if r_lo <= r_hi:
            pieces.append((q, r_lo * i_l, r_hi * i_l))

    add(Quadratic(-s, 0.0, 0.0), 0.0, d - 1.0)
    add(
        Quadratic(1.0 / (9.0 * i_l**2) - s, 2.0 * (1.0 - d) / (9.0 * i_l), (1.0 - d) ** 2 / 9.0),
        d - 1.0,
        d + 2.0,
    )
    if d + 2.0 <= 1.0:
        if anchor_p_l is None:
            add(Quadratic(-s, 0.0, 1.0), d + 2.0, 1.0)
        else:
            a = min(anchor_p_l - params.c - d - 1.0, -d - 1.0)
            r_break = 1.0 - a
            add(Quadratic(-s, 0.0, 1.0), d + 2.0, min(r_break, 1.0))
            add(Quadratic(-s, 1.0 / i_l, a), max(r_break, d + 2.0), 1.0)
    return pieces


def follower_best(params: MarketParams, i_l: float, anchor_p_l: float | None = None) -> tuple[float, float]:
    """Follower's optimal lease and payoff given ``i_l``; ties go to the smaller lease."""
    if i_l <= 0:
        raise ValidationError(f"i_l must be positive, got {i_l}")
    best_x, best_v = math.inf, -math.inf
    for q, lo, hi in _follower_pieces(params, i_l, anchor_p_l):
        m = quad_max_on_interval(q, lo, hi)
        tol = _TIE * max(1.0, abs(m.value), abs(best_v) if math.isfinite(best_v) else 0.0)
        if m.value > best_v + tol or (abs(m.value - best_v) <= tol and m.x < best_x):
            best_x, best_v = m.x, m.value
    return best_x, best_v


def stage2_if(params: MarketParams, i_l: float) -> float:
    """Follower's lease when ``|delta| < 1``: all of it up to the lower bound, then a declining share."""
    d = params.delta
    if not abs(d) < 1:
        raise ValidationError(f"closed-form lease needs |delta| < 1, got {d}")
    if i_l <= 0:
        raise ValidationError(f"i_l must be positive, got {i_l}")
    if i_l <= lower_bound(params) * (1.0 + 1e-12):
        return i_l
    return (1.0 - d) * i_l / (9.0 * params.s * i_l**2 - 1.0)


def _stage2_vec(params: MarketParams, i_l: np.ndarray) -> np.ndarray:
    d, s = params.delta, params.s
    i_l = np.asarray(i_l, dtype=float)
    denom = 9.0 * s * i_l**2 - 1.0
    share = np.divide((1.0 - d) * i_l, denom, out=np.array(i_l, copy=True), where=denom > 0)
    return np.where(i_l <= lower_bound(params) * (1.0 + 1e-12), i_l, share)


def stage1_objective(params: MarketParams, i_l):
    """Leader payoff at or above the lower bound, with stages 2-3 played optimally."""
    d, s = params.delta, params.s
    i_l = np.asarray(i_l, dtype=float)
    share = (1.0 - d) / (27.0 * s * i_l**2 - 3.0)
    lease = (1.0 - d) * i_l / (9.0 * s * i_l**2 - 1.0)
    return ((2.0 + d) / 3.0 - share) ** 2 + s * lease**2 - params.gamma * i_l**2


def stage1_il(params: MarketParams) -> list[float]:
    """Leader's optimal holdings when ``|delta| < 1`` (several only on exact ties)."""
    lb = lower_bound(params)
    cap = params.m_ub
    if cap is not None and cap <= lb:
        return [cap]
    lo = max(lb, params.delta_lb)
    if cap is not None and cap <= lo:
        return [cap]
    found = maximize_1d(lambda x: stage1_objective(params, x), lo, cap, vectorized=True)
    return [x for x, _ in found]


def _finish(params: MarketParams, result: EquilibriumResult) -> EquilibriumResult:
    rep = result.profile
    result.outcome = market_outcome(params, rep)
    try:
        result.metrics = metrics(rep, result.outcome)
    except ValidationError as exc:
        result.diagnostics["metrics_error"] = str(exc)
    return result


def _interior_profile(params: MarketParams, i_l: float, i_f: float) -> StrategyProfile:
    p_l, p_f = stage3_prices(params, i_l, i_f)
    return StrategyProfile(i_l, i_f, p_l, p_f)


def _solve_split(params: MarketParams) -> EquilibriumResult:
    holdings = stage1_il(params)
    profiles = [_interior_profile(params, x, stage2_if(params, x)) for x in holdings]
    tag = Tag.UNIQUE_INTERIOR if len(profiles) == 1 else Tag.MULTIPLE_CANDIDATES
    diag = {"lower_bound": lower_bound(params)}
    if params.m_ub is not None and params.m_ub <= lower_bound(params):
        diag["capped"] = "m_ub at or below sqrt((2 - delta)/(9 s)): both hold m_ub"
    return _finish(params, EquilibriumResult(tag, profiles, diagnostics=diag))


def _solve_leader_serves(params: MarketParams) -> EquilibriumResult:
    d, c, s = params.delta, params.c, params.s
    deter = deterrence_level(params)
    cap = params.m_ub
    diag: dict = {"deterrence_level": deter}
    if cap is not None and cap < deter:
        diag["capped"] = "m_ub below the deterrence level: the follower leases all of it"
        prof = _interior_profile(params, cap, cap)
        return _finish(params, EquilibriumResult(Tag.UNIQUE_INTERIOR, [prof], diagnostics=diag))

    i_l = max(params.delta_lb, deter)
    if i_l > params.delta_lb:
        diag["deterrence"] = (
            "delta_lb below the deterrence level; at delta_lb the follower would lease "
            "everything, so the leader holds the deterrence level instead"
        )
    lo, hi = c + 1.0, c + d
    mid = 0.5 * (lo + hi)
    profiles = [StrategyProfile(i_l, 0.0, mid, mid - d)]
    tag = Tag.CORNER_FAMILY
    if abs(d - 1.0) <= 1e-12:
        x = 1.0 / (3.0 * math.sqrt(s))
        if cap is not None:
            x = min(x, cap)
        profiles.append(StrategyProfile(x, x, c + 2.0 / 3.0, c + 1.0 / 3.0))
        tag = Tag.MULTIPLE_CANDIDATES
        diag["second_candidate"] = (
            "equal holdings at 1/(3 sqrt(s)); the leader can profitably hold slightly "
            "more and serve everybody, so the oracle rejects it unless m_ub binds"
        )
    return _finish(
        params,
        EquilibriumResult(tag, profiles, price_interval=(lo, hi), interval_price="p_l", diagnostics=diag),
    )


def follower_supported_margin(params: MarketParams, i_l: float, i_f: float, top: float) -> float | None:
    """Smallest follower margin in ``[1, top]`` at which leasing ``i_f`` stays optimal.

    The follower's stage-2 alternatives are valued with the leader's price
    anchored at its on-path level, so the best alternative rises with the
    on-path margin at most one-for-one; bisection finds the crossing.
    """
    d, c, s = params.delta, params.c, params.s
    t_f = 1.0 - i_f / i_l

    def slack(q: float) -> float:
        anchor = c + q + d + t_f
        _, v = follower_best(params, i_l, anchor)
        return (q - s * i_f**2) - v

    tol = 1e-12
    if slack(top) < -tol:
        return None
    if slack(1.0) >= -tol:
        return 1.0
    lo, hi = 1.0, top
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if slack(mid) >= -tol:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    return hi


def _solve_follower_serves(params: MarketParams) -> EquilibriumResult:
    d, c, s = params.delta, params.c, params.s
    i_l = 1.0 / math.sqrt(2.0 * s)
    if params.m_ub is not None:
        i_l = min(i_l, params.m_ub)
    i_l = max(i_l, params.delta_lb)
    i_f = min(i_l, 1.0 / (2.0 * s * i_l))
    t_f = 1.0 - i_f / i_l
    top = -d - t_f
    diag: dict = {"stage3_interval": (c + 1.0, c + top)}
    low = follower_supported_margin(params, i_l, i_f, top) if top >= 1.0 else None
    if low is None:
        diag["reason"] = (
            "no price in the follower-serves family keeps the follower from leasing "
            "less and moving to a split market"
        )
        return EquilibriumResult(Tag.NO_EQUILIBRIUM, diagnostics=diag)
    if low > 1.0:
        diag["trimmed"] = "margins below the lower end let the follower profit from leasing less"
    lo, hi = c + low, c + top
    mid = 0.5 * (lo + hi)
    prof = StrategyProfile(i_l, i_f, mid + d + t_f, mid)
    return _finish(
        params,
        EquilibriumResult(Tag.CORNER_FAMILY, [prof], price_interval=(lo, hi), interval_price="p_f", diagnostics=diag),
    )


def solve_base(params: MarketParams) -> EquilibriumResult:
    """Subgame-perfect equilibrium of the base game for any valuation gap."""
    d = params.delta
    if abs(d) < 1.0:
        return _solve_split(params)
    if d >= 1.0:
        return _solve_leader_serves(params)
    return _solve_follower_serves(params)


def base_payoffs(params: MarketParams, i_l, i_f, p_l, p_f):
    """Vectorized payoffs with the end-user split resolved exactly."""
    i_l = np.asarray(i_l, dtype=float)
    i_f = np.asarray(i_f, dtype=float)
    r = i_f / i_l
    x0 = params.delta + (1.0 - r) + p_f - p_l
    n_l = np.clip(x0, 0.0, 1.0)
    n_f = 1.0 - n_l
    lease = params.s * i_f**2
    pi_l = n_l * (p_l - params.c) + lease - params.gamma * i_l**2
    pi_f = n_f * (p_f - params.c) - lease
    return pi_l, pi_f


def base_eu_regret(params: MarketParams, profile: StrategyProfile, n_users: int = 2001) -> float:
    """Largest gain an end user could get by switching away from its assigned provider."""
    i_l, i_f, p_l, p_f = profile.as_tuple()
    t_l, t_f = i_f / i_l, 1.0 - i_f / i_l
    x = np.linspace(0.0, 1.0, n_users)
    u_l = params.v_l - t_l * x - p_l
    u_f = params.v_f - t_f * (1.0 - x) - p_f
    n_l = market_outcome(params, profile).n_l
    chosen = np.where(x < n_l, u_l, u_f)
    return float(np.max(np.maximum(u_l, u_f) - chosen))


def base_game(params: MarketParams, anchor_p_l: float | None = None, il_hi: float | None = None) -> SequentialGame:
    """Oracle adapter; ``anchor_p_l`` is the on-path leader price of a corner profile."""
    d = params.delta

    def response(xs):
        xs = np.asarray(xs, dtype=float)
        if abs(d) < 1.0:
            return _stage2_vec(params, xs)
        return np.array([follower_best(params, float(x), anchor_p_l)[0] for x in np.ravel(xs)]).reshape(xs.shape)

    if il_hi is None:
        il_hi = params.m_ub if params.m_ub is not None else max(4.0 / math.sqrt(params.s), 4.0 * params.delta_lb)
    return SequentialGame(
        payoff=lambda a, b, pl, pf: base_payoffs(params, a, b, pl, pf),
        prices=lambda a, b: continuation_prices(params, a, b, anchor_p_l),
        response=response,
        il_range=(params.delta_lb, il_hi),
        eu_regret=lambda prof: base_eu_regret(params, prof),
        price_halfwidth=1.0 + abs(d),
        name="base",
    )


def game_for_profile(params: MarketParams, profile: StrategyProfile) -> SequentialGame:
    """Adapter whose corner continuation is anchored at ``profile``'s leader price."""
    anchor = None if abs(params.delta) < 1.0 else profile.p_l
    return base_game(params, anchor)
