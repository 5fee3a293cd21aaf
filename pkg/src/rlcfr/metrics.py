"""Exact best responses, exploitability and the average-profile convergence bound."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cfr import StrategyProfile
from .games import CHANCE, TERMINAL, Game


@dataclass(frozen=True)
class ExploitabilityReport:
    br_value_p1: float
    br_value_p2: float
    exploitability: float
    iteration: int = 0


def _check_profile(game: Game, profile: StrategyProfile) -> np.ndarray:
    tree = game.tree
    if profile.keys is tree.keys or profile.keys == tree.keys:
        return profile.probs
    return StrategyProfile.from_mapping(game, profile.as_dict()).probs


def best_response_value(game: Game, profile: StrategyProfile, player: int) -> float:
    """Value ``player`` earns with a best response to the opponent's part of ``profile``.

    Backward induction over the public tree: at the responder's nodes the
    action is chosen per infoset (private rank), summing the values of every
    card of that rank.
    """
    probs = _check_profile(game, profile)
    tree = game.tree
    n_cards = game.spec.deck_size
    card_rank = tree.card_rank
    n_ranks = game.spec.ranks

    def walk(nd, r_opp):
        kind = nd.kind
        if kind == TERMINAL:
            if player == 0:
                return nd.payoff @ r_opp
            return -(r_opp @ nd.payoff)
        if kind == CHANCE:
            v = np.zeros(n_cards)
            for ch in nd.children:
                v += walk(ch, r_opp)
            return v
        if nd.player == player:
            vals = np.stack([walk(ch, r_opp) for ch in nd.children], axis=1)
            by_rank = np.zeros((n_ranks, vals.shape[1]))
            np.add.at(by_rank, card_rank, vals)
            best = np.argmax(by_rank, axis=1)
            return vals[np.arange(n_cards), best[card_rank]]
        sig = probs[nd.rows]
        v = np.zeros(n_cards)
        for a, ch in enumerate(nd.children):
            v += walk(ch, r_opp * sig[:, a])
        return v

    return float(walk(tree.root, np.ones(n_cards)).sum())


def expected_value(game: Game, profile: StrategyProfile, player: int = 0) -> float:
    """Expected utility of ``player`` when both sides follow ``profile``."""
    probs = _check_profile(game, profile)
    tree = game.tree
    n_cards = game.spec.deck_size

    def walk(nd, r0, r1):
        if nd.kind == TERMINAL:
            return float(r0 @ nd.payoff @ r1)
        if nd.kind == CHANCE:
            return sum(walk(ch, r0, r1) for ch in nd.children)
        sig = probs[nd.rows]
        total = 0.0
        for a, ch in enumerate(nd.children):
            if nd.player == 0:
                total += walk(ch, r0 * sig[:, a], r1)
            else:
                total += walk(ch, r0, r1 * sig[:, a])
        return total

    v0 = walk(tree.root, np.ones(n_cards), np.ones(n_cards))
    return v0 if player == 0 else -v0


def exploitability(game: Game, profile: StrategyProfile, iteration: int = 0) -> ExploitabilityReport:
    """Mean of the two best-response values; zero exactly at a Nash equilibrium."""
    b1 = best_response_value(game, profile, 0)
    b2 = best_response_value(game, profile, 1)
    return ExploitabilityReport(b1, b2, (b1 + b2) / 2.0, iteration)


def theorem1_bound(T: int, delta: float, num_infosets: int, num_actions: int) -> float:
    """Epsilon-Nash guarantee ``2 * delta * |I| * sqrt(|A|) / sqrt(T)`` for the average profile."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if delta <= 0 or num_infosets <= 0 or num_actions <= 0:
        raise ValueError("bound inputs must be positive")
    return 2.0 * delta * num_infosets * math.sqrt(num_actions) / math.sqrt(T)


def game_bound(game: Game, T: int) -> float:
    """The bound instantiated from the game's own utility range, infoset count and width."""
    tree = game.tree
    return theorem1_bound(T, game.utility_range, len(tree.keys), int(tree.n_actions.max()))
