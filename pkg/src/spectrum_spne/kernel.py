"""Numerical building blocks: quadratic maximization, bounded 1-D search, SPNE oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import StrategyProfile, ValidationError


@dataclass(frozen=True)
class Quadratic:
    """``a*x**2 + b*x + c``."""

    a: float
    b: float
    c: float

    def __call__(self, x):
        return (self.a * x + self.b) * x + self.c


@dataclass(frozen=True)
class QuadMax:
    x: float
    value: float
    tie: bool = False


def quad_max_on_interval(q: Quadratic, d: float, e: float) -> QuadMax:
    """Exact maximizer of a quadratic on ``[d, e]``.

    Concave: the vertex clamped into the interval.  Convex: the endpoint
    farther from the vertex (``e`` when the midpoint is not left of it).
    Linear or constant: the better endpoint, ``d`` on ties.  ``tie`` marks
    the cases where both endpoints are optimal.
    """
    if not d <= e:
        raise ValidationError(f"empty interval [{d}, {e}]")
    if d == e:
        return QuadMax(d, q(d))
    if q.a < 0:
        x = min(max(-q.b / (2 * q.a), d), e)
        return QuadMax(x, q(x))
    if q.a > 0:
        vertex = -q.b / (2 * q.a)
        mid = 0.5 * (d + e)
        if mid < vertex:
            return QuadMax(d, q(d))
        return QuadMax(e, q(e), tie=(mid == vertex))
    if q.b > 0:
        return QuadMax(e, q(e))
    return QuadMax(d, q(d), tie=(q.b == 0))


def _evaluate(objective: Callable, xs: np.ndarray, vectorized: bool) -> np.ndarray:
    if vectorized:
        return np.asarray(objective(xs), dtype=float)
    return np.array([objective(float(x)) for x in xs], dtype=float)


def adaptive_upper_bound(objective: Callable[[float], float], lo: float, max_doublings: int = 40) -> float:
    """Double ``hi`` from ``4*lo`` until the objective has fallen twice in a row."""
    if not lo > 0:
        raise ValidationError("an adaptive upper bound needs lo > 0")
    hi = 4.0 * lo
    falling = 0
    for _ in range(max_doublings):
        if objective(hi) < objective(hi / 2):
            falling += 1
            if falling == 2:
                return hi
        else:
            falling = 0
        hi *= 2.0
    raise RuntimeError(f"objective still rising after {max_doublings} doublings from lo={lo}")


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f: Callable[[float], float], a: float, b: float, max_iter: int = 200) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on ``[a, b]``; returns the best point evaluated.

    Runs until the bracket stops shrinking in floating point, so kinked
    maxima are located to machine precision.
    """
    best = max(((a, f(a)), (b, f(b))), key=lambda p: p[1])
    x1 = b - _INV_PHI * (b - a)
    x2 = a + _INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if f1 > best[1]:
            best = (x1, f1)
        if f2 > best[1]:
            best = (x2, f2)
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INV_PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_PHI * (b - a)
            f2 = f(x2)
        if not a < x1 < b or not a < x2 < b:
            break
    return best


def newton_polish(f: Callable[[float], float], x: float, fx: float, a: float, b: float, steps: int = 4) -> tuple[float, float]:
    """Sharpen a smooth interior maximum with central-difference Newton steps.

    Value comparisons alone pin a smooth maximum only to about sqrt(eps);
    the derivative root is good to about eps/h.  A step is kept only if it
    stays in ``[a, b]`` and does not lower ``f``, which leaves kinks alone.
    """
    for _ in range(steps):
        h = 1e-5 * max(1.0, abs(x))
        if not a < x - h and x + h < b:
            break
        lo, hi = f(x - h), f(x + h)
        curv = (hi - 2.0 * fx + lo) / h**2
        if not curv < 0:
            break
        nx = x - (hi - lo) / (2.0 * h) / curv
        if not a <= nx <= b:
            break
        nf = f(nx)
        if nf < fx - 4.0 * np.finfo(float).eps * max(1.0, abs(fx)):
            break
        if nx == x:
            break
        x, fx = nx, nf
    return x, fx


def maximize_1d(
    objective: Callable,
    lo: float,
    hi: float | None = None,
    *,
    n_points: int = 2001,
    rel_tol: float = 1e-9,
    vectorized: bool = False,
    max_candidates: int = 8,
) -> list[tuple[float, float]]:
    """All global maximizers of ``objective`` on ``[lo, hi]``.

    A coarse grid locates local maxima; each is polished by golden section
    on its bracketing cell and then by :func:`newton_polish`.  Maximizers whose value is within ``rel_tol``
    (relative) of the best are all returned, sorted by location.  With
    ``hi=None`` the bound is found by :func:`adaptive_upper_bound`.
    """
    scalar = (lambda x: float(objective(np.array([x]))[0])) if vectorized else objective
    if hi is None:
        hi = adaptive_upper_bound(scalar, lo)
    if not hi >= lo:
        raise ValidationError(f"empty search interval [{lo}, {hi}]")
    if hi == lo:
        return [(lo, scalar(lo))]

    xs = np.linspace(lo, hi, n_points)
    fs = _evaluate(objective, xs, vectorized)
    fs = np.where(np.isfinite(fs), fs, -np.inf)
    left = np.concatenate(([-np.inf], fs[:-1]))
    right = np.concatenate((fs[1:], [-np.inf]))
    peaks = np.flatnonzero((fs >= left) & (fs >= right) & np.isfinite(fs))
    if peaks.size == 0:
        raise RuntimeError("objective is not finite anywhere on the grid")
    peaks = peaks[np.argsort(-fs[peaks], kind="stable")][:max_candidates]

    found: list[tuple[float, float]] = []
    for i in peaks:
        a, b = xs[max(i - 1, 0)], xs[min(i + 1, n_points - 1)]
        x, f = golden_section_max(scalar, float(a), float(b))
        if f < fs[i]:
            x, f = float(xs[i]), float(fs[i])
        x, f = newton_polish(scalar, x, f, float(a), float(b))
        found.append((x, f))

    top = max(f for _, f in found)
    keep = sorted((x, f) for x, f in found if top - f <= rel_tol * abs(top))
    merged: list[tuple[float, float]] = []
    for x, f in keep:
        if merged and abs(x - merged[-1][0]) <= 1e-7 * max(1.0, abs(x)):
            if f > merged[-1][1]:
                merged[-1] = (x, f)
            continue
        merged.append((x, f))
    return merged


@dataclass(frozen=True)
class GridSpec:
    """Deviation grid: ``n_points`` per decision, zoomed ``refinement_rounds`` times.

    ``lo``/``hi`` optionally override the leader's spectrum range scanned at
    the first stage.
    """

    n_points: int = 2001
    refinement_rounds: int = 2
    lo: float | None = None
    hi: float | None = None

    def __post_init__(self) -> None:
        if self.n_points < 3:
            raise ValidationError("GridSpec needs at least 3 points")
        if self.refinement_rounds < 0:
            raise ValidationError("refinement_rounds must be non-negative")
        if self.lo is not None and self.hi is not None and not self.lo < self.hi:
            raise ValidationError(f"GridSpec needs lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def resolution(self) -> float:
        """Final grid step as a fraction of the scanned range."""
        step = 1.0 / (self.n_points - 1)
        return step * (2.0 / (self.n_points - 1)) ** self.refinement_rounds


def scan_max(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, grid: GridSpec) -> tuple[float, float]:
    """Grid maximum with zoom refinement; ties go to the lowest index."""
    xs = np.linspace(lo, hi, grid.n_points)
    vals = np.asarray(f(xs), dtype=float)
    i = int(np.argmax(vals))
    best_x, best_v = float(xs[i]), float(vals[i])
    for _ in range(grid.refinement_rounds):
        step = xs[1] - xs[0]
        if step <= 0:
            break
        xs = np.linspace(max(lo, best_x - step), min(hi, best_x + step), grid.n_points)
        vals = np.asarray(f(xs), dtype=float)
        j = int(np.argmax(vals))
        if vals[j] > best_v:
            best_x, best_v = float(xs[j]), float(vals[j])
    return best_x, best_v


ArrayFn = Callable[..., tuple[np.ndarray, np.ndarray]]


@dataclass
class SequentialGame:
    """Everything the oracle needs to replay deviations in a four-stage game.

    All callables accept numpy arrays (broadcasting) and return arrays.

    payoff(i_l, i_f, p_l, p_f) -> (pi_l, pi_f): stage-4 demand resolved exactly.
    prices(i_l, i_f) -> (p_l, p_f): closed-form stage-3 continuation.
    response(i_l) -> i_f: closed-form stage-2 continuation.
    il_range: leader's admissible spectrum interval for stage-1 deviations.
    eu_regret(profile) -> float: largest utility gain any end user could get by switching.
    price_halfwidth: half-width of the stage-3 deviation window around each price.
    """

    payoff: ArrayFn
    prices: ArrayFn
    response: Callable[[np.ndarray], np.ndarray]
    il_range: tuple[float, float]
    eu_regret: Callable[[StrategyProfile], float]
    price_halfwidth: float = 1.0
    name: str = "game"


@dataclass(frozen=True)
class OracleReport:
    profile: StrategyProfile
    gains: tuple[float, float, float, float]
    epsilon: float
    passed: bool
    payoff_scale: float
    resolution: float

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    @property
    def failing_stages(self) -> list[int]:
        return [k + 1 for k, g in enumerate(self.gains) if g > self.epsilon]


def oracle_verify_spne(
    game: SequentialGame,
    profile: StrategyProfile,
    grid: GridSpec | None = None,
    epsilon: float | None = None,
) -> OracleReport:
    """Grid check that no single decision-maker gains by deviating at any stage.

    Stage 4 uses the exact end-user regret; stage 3 scans each price against
    the other's candidate price; stage 2 scans the follower's spectrum and
    stage 1 the leader's, with later stages played by ``game``'s closed-form
    continuation.  ``gains`` is ordered stage 1..4 and clipped at zero.
    """
    grid = grid or GridSpec()
    i_l, i_f, p_l, p_f = profile.as_tuple()
    pi_l, pi_f = (float(v) for v in game.payoff(i_l, i_f, p_l, p_f))
    scale = max(1.0, abs(pi_l), abs(pi_f))
    if epsilon is None:
        epsilon = 5.0 * scale * grid.resolution

    w = game.price_halfwidth
    _, best = scan_max(lambda p: game.payoff(i_l, i_f, p, p_f)[0], p_l - w, p_l + w, grid)
    gain3 = best - pi_l
    _, best = scan_max(lambda p: game.payoff(i_l, i_f, p_l, p)[1], p_f - w, p_f + w, grid)
    gain3 = max(gain3, best - pi_f)

    def follower(xs):
        pl, pf = game.prices(i_l, xs)
        return game.payoff(i_l, xs, pl, pf)[1]

    _, best = scan_max(follower, 0.0, i_l, grid)
    gain2 = best - pi_f

    def leader(xs):
        yf = game.response(xs)
        pl, pf = game.prices(xs, yf)
        return game.payoff(xs, yf, pl, pf)[0]

    lo = grid.lo if grid.lo is not None else game.il_range[0]
    hi = grid.hi if grid.hi is not None else game.il_range[1]
    gain1 = -math.inf
    if hi > lo:
        _, best = scan_max(leader, lo, hi, grid)
        gain1 = best - pi_l

    gain4 = game.eu_regret(profile)
    gains = tuple(max(0.0, float(g)) for g in (gain1, gain2, gain3, gain4))
    return OracleReport(
        profile=profile,
        gains=gains,
        epsilon=float(epsilon),
        passed=all(g <= epsilon for g in gains),
        payoff_scale=scale,
        resolution=grid.resolution,
    )
