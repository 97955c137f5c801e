"""Uniform entry points over the four market variants."""

from __future__ import annotations

import configparser
from dataclasses import fields
from pathlib import Path
from typing import Callable

from .base_case import game_for_profile, solve_base
from .kernel import GridSpec, OracleReport, SequentialGame, oracle_verify_spne
from .model import EquilibriumResult, MarketParams, StrategyProfile, ValidationError
from .outside_option import outside_game, solve_outside_option
from .three_player import comparison_game, solve_three_player, solve_two_player_comparison, three_player_game

Solver = Callable[[MarketParams], EquilibriumResult]
GameBuilder = Callable[[MarketParams, StrategyProfile], SequentialGame]

VARIANTS: dict[str, tuple[Solver, GameBuilder]] = {
    "base": (solve_base, game_for_profile),
    "outside": (solve_outside_option, lambda p, _prof: outside_game(p)),
    "three_player": (solve_three_player, lambda p, _prof: three_player_game(p)),
    "two_player_comparison": (solve_two_player_comparison, lambda p, _prof: comparison_game(p)),
}

PARAM_KEYS = tuple(f.name for f in fields(MarketParams))


def _lookup(variant: str) -> tuple[Solver, GameBuilder]:
    try:
        return VARIANTS[variant]
    except KeyError:
        raise ValidationError(f"unknown variant {variant!r}; choose from {', '.join(VARIANTS)}") from None


def solve(params: MarketParams, variant: str = "base") -> EquilibriumResult:
    return _lookup(variant)[0](params)


def verify(
    params: MarketParams,
    variant: str,
    profile: StrategyProfile,
    grid: GridSpec | None = None,
    epsilon: float | None = None,
) -> OracleReport:
    game = _lookup(variant)[1](params, profile)
    return oracle_verify_spne(game, profile, grid, epsilon)


def params_from_mapping(values: dict[str, str | float]) -> MarketParams:
    """Build parameters from string or numeric values; ``delta`` sets ``v_l - v_f`` with ``v_f = 0``."""
    kwargs: dict[str, float | None] = {}
    for key, raw in values.items():
        key = key.strip().lower()
        if key == "delta":
            if "v_l" in values or "v_f" in values:
                raise ValidationError("give either delta or v_l/v_f, not both")
            kwargs["v_l"], kwargs["v_f"] = _number(key, raw), 0.0
            continue
        if key not in PARAM_KEYS:
            raise ValidationError(f"unknown parameter {key!r}")
        if key == "m_ub" and str(raw).strip().lower() in ("", "none", "inf"):
            kwargs[key] = None
            continue
        kwargs[key] = _number(key, raw)
    missing = [k for k in ("s", "gamma", "c") if k not in kwargs]
    if missing:
        raise ValidationError(f"missing required parameter(s): {', '.join(missing)}")
    return MarketParams(**kwargs)


def _number(key: str, raw: str | float) -> float:
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise ValidationError(f"{key} must be a number, got {raw!r}") from None


def read_config(path: str | Path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    text = Path(path).read_text()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#",))
    try:
        parser.read_string("[market]\n" + text)
    except configparser.ParsingError as exc:
        # configparser stores each offending line as its repr
        where = "; ".join(f"line {n - 1}: {line[1:-1].removesuffix(chr(92) + 'n')}" for n, line in exc.errors)
        raise ValidationError(f"cannot parse {path}: expected 'key = value' at {where}") from None
    except configparser.DuplicateOptionError as exc:
        raise ValidationError(f"{path}: line {exc.lineno - 1} repeats key {exc.option!r}") from None
    except configparser.Error as exc:
        raise ValidationError(f"cannot parse {path}: {exc}") from None
    return dict(parser["market"])
