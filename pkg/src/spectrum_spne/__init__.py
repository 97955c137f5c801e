"""Subgame-perfect equilibria of spectrum leasing markets between network operators."""

from .base_case import solve_base
from .kernel import GridSpec, OracleReport, Quadratic, maximize_1d, oracle_verify_spne, quad_max_on_interval
from .model import (
    EquilibriumResult,
    MarketOutcome,
    MarketParams,
    MetricsReport,
    StrategyProfile,
    Tag,
    ValidationError,
)
from .outside_option import solve_outside_option
from .three_player import solve_three_player, solve_two_player_comparison
from .variants import solve, verify

__all__ = [
    "EquilibriumResult", "GridSpec", "MarketOutcome", "MarketParams", "MetricsReport", "OracleReport",
    "Quadratic", "StrategyProfile", "Tag", "ValidationError", "maximize_1d", "oracle_verify_spne",
    "quad_max_on_interval", "solve", "solve_base", "solve_outside_option", "solve_three_player",
    "solve_two_player_comparison", "verify",
]
