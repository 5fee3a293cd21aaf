"""Counterfactual regret minimization with a learned choice of regret-update rule."""
from .cfr import (RegretTable, Solver, StrategyProfile, UpdateRule, average_profile, cfr_iteration,
                  current_strategy, get_rule)
from .games import KUHN, LEDUC, ROYAL, ConfigurationError, Game, GameSpec, InfoSetKey, build_game
from .metrics import best_response_value, exploitability, theorem1_bound

__all__ = [
    "KUHN", "LEDUC", "ROYAL", "ConfigurationError", "Game", "GameSpec", "InfoSetKey", "build_game",
    "RegretTable", "Solver", "StrategyProfile", "UpdateRule", "average_profile", "cfr_iteration",
    "current_strategy", "get_rule", "best_response_value", "exploitability", "theorem1_bound",
]
