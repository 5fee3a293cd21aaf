"""Slow, independent reference computations over explicit histories.

Nothing here touches the compiled public tree; everything walks
``Game.iter_histories`` / ``apply_action`` with dict-based strategies keyed by
``InfoSetKey``.
"""
import itertools
from fractions import Fraction

import numpy as np

from rlcfr.games import CHANCE, DECISION, TERMINAL


def infosets_by_traversal(game):
    """``{InfoSetKey: legal_actions}`` collected by walking every history."""
    found = {}

    def rec(h):
        nd = game.node(h)
        if nd.kind == TERMINAL:
            return
        if nd.kind == CHANCE:
            for c, _ in game.chance_outcomes(h):
                rec(game.apply_action(h, c))
            return
        found[game.infoset_key(h)] = nd.legal_actions
        for a in nd.legal_actions:
            rec(game.apply_action(h, a))

    rec(game.root())
    return found


def expected_utility(game, strategy, player, h=()):
    """Utility of ``player`` from history ``h`` when everyone follows ``strategy``."""
    nd = game.node(h)
    if nd.kind == TERMINAL:
        return game.terminal_utility(h, player)
    if nd.kind == CHANCE:
        return sum(p * expected_utility(game, strategy, player, h + (c,))
                   for c, p in game.chance_outcomes(h))
    probs = strategy[game.infoset_key(h)]
    return sum(p * expected_utility(game, strategy, player, h + (a,))
               for a, p in zip(nd.legal_actions, probs) if p)


def counterfactual_regrets(game, strategy, player):
    """``{key: regrets}`` straight from the definition, summing over every history in the infoset."""
    values = {}

    def rec(h, opp_reach):
        nd = game.node(h)
        if nd.kind == TERMINAL:
            return
        if nd.kind == CHANCE:
            for c, p in game.chance_outcomes(h):
                rec(h + (c,), opp_reach * p)
            return
        key = game.infoset_key(h)
        probs = strategy[key]
        if nd.player_to_act == player:
            v = np.array([expected_utility(game, strategy, player, h + (a,)) for a in nd.legal_actions])
            values.setdefault(key, np.zeros(len(v)))
            values[key] += opp_reach * (v - np.dot(probs, v))
            for a in nd.legal_actions:
                rec(h + (a,), opp_reach)
        else:
            for a, p in zip(nd.legal_actions, probs):
                rec(h + (a,), opp_reach * p)

    rec((), 1.0)
    return values


def pure_strategies(game, player):
    keys = sorted(k for k in infosets_by_traversal(game) if k.player == player)
    acts = infosets_by_traversal(game)
    for choice in itertools.product(*[range(len(acts[k])) for k in keys]):
        yield {k: np.eye(len(acts[k]))[c] for k, c in zip(keys, choice)}


def brute_force_best_response(game, strategy, player):
    """Max over every pure strategy of ``player`` (exponential; Kuhn only)."""
    best = -np.inf
    for pure in pure_strategies(game, player):
        mixed = dict(strategy)
        mixed.update(pure)
        best = max(best, expected_utility(game, mixed, player))
    return best


def brute_force_exploitability(game, strategy):
    return (brute_force_best_response(game, strategy, 0) + brute_force_best_response(game, strategy, 1)) / 2


def kuhn_nash(game, alpha=Fraction(1, 3)):
    """Closed-form Kuhn equilibrium family; ``alpha`` is player 0's jack bluff rate.

    Ranks J=0, Q=1, K=2.  Actions are (call, raise) when unopposed and
    (fold, call) when facing a bet.
    """
    a = float(alpha)
    strat = {}
    for key in infosets_by_traversal(game):
        r, seq = key.private_card, key.betting_sequence
        if key.player == 0 and seq == "":
            bet = {0: a, 1: 0.0, 2: 3 * a}[r]
            strat[key] = np.array([1 - bet, bet])
        elif key.player == 0 and seq == "cr":
            call = {0: 0.0, 1: a + 1 / 3, 2: 1.0}[r]
            strat[key] = np.array([1 - call, call])
        elif key.player == 1 and seq == "c":
            bet = {0: 1 / 3, 1: 0.0, 2: 1.0}[r]
            strat[key] = np.array([1 - bet, bet])
        elif key.player == 1 and seq == "r":
            call = {0: 0.0, 1: 1 / 3, 2: 1.0}[r]
            strat[key] = np.array([1 - call, call])
        else:
            raise AssertionError(f"unexpected Kuhn infoset {key}")
    return strat


KUHN_VALUE = -1.0 / 18.0


def uniform_strategy(game):
    return {k: np.full(len(a), 1.0 / len(a)) for k, a in infosets_by_traversal(game).items()}


def naive_forward(weights, biases, x):
    """Loop-based re-implementation of the network arithmetic."""
    h = [float(v) for v in x]
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        out = []
        for r in range(w.shape[0]):
            z = float(b[r]) + sum(float(w[r, c]) * h[c] for c in range(w.shape[1]))
            out.append(z if i == last else max(z, 0.0))
        h = out
    return np.array(h)


def finite_difference_grads(params, x, action, target, eps=1e-5, coords=None):
    """Central differences of the masked squared error for every (or selected) parameter.

    ``coords`` is an optional list of ``(array_index, flat_index)`` pairs into
    ``params.arrays()``; the result maps those pairs to derivative estimates.
    """
    from rlcfr.nn import forward

    def loss():
        q = forward(params, x)
        return float((q[action] - target) ** 2)

    arrays = params.arrays()
    if coords is None:
        coords = [(i, j) for i, a in enumerate(arrays) for j in range(a.size)]
    out = {}
    for i, j in coords:
        flat = arrays[i].reshape(-1)
        old = flat[j]
        flat[j] = old + eps
        up = loss()
        flat[j] = old - eps
        down = loss()
        flat[j] = old
        out[(i, j)] = (up - down) / (2 * eps)
    return out
