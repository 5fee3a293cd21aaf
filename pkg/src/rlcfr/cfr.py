"""Full-tree counterfactual regret minimization with switchable update rules.

Seven rules are available (``a1`` .. ``a7``).  Each one pairs a way of
turning cumulative regret into the next strategy with a way of accumulating
instantaneous regret:

==== ========= ====================================================
rule alias     regret accumulation
==== ========= ====================================================
a1   cfr+      R <- max(R + r, 0)
a2   lcfr      R <- R + t * r
a3   dcfr      R <- R * m + r, m = t^alpha/(t^alpha + 1) if R > 0
               else t^beta/(t^beta + 1)
a4   ecfr      R <- R + exp(alpha) * r
a5   vanilla   R <- R + r
a6   pos-inst  R <- R + max(r, 0)
a7   uniform   R <- R + r   (strategy is always uniform)
==== ========= ====================================================

Rules a1 to a6 all play regret matching on the stored cumulative regret;
the constant factors of a2 and a4 cancel in the normalisation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .games import CHANCE, DECISION, TERMINAL, ConfigurationError, Game, InfoSetKey

MAX_ACTIONS = 3
NORM_EPS = 1e-300

RULE_KINDS = ("a1", "a2", "a3", "a4", "a5", "a6", "a7")
ALIASES = {
    "cfr+": "a1", "cfrplus": "a1",
    "lcfr": "a2",
    "dcfr": "a3",
    "ecfr": "a4",
    "vanilla": "a5", "cfr": "a5",
    "pos-inst": "a6",
    "uniform": "a7",
}
RULE_NAMES = {"a1": "cfr+", "a2": "lcfr", "a3": "dcfr", "a4": "ecfr",
              "a5": "vanilla", "a6": "pos-inst", "a7": "uniform"}


@dataclass(frozen=True)
class UpdateRule:
    kind: str
    alpha: float | None = None
    beta: float | None = None
    gamma_exp: float | None = None

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ConfigurationError(f"unknown rule kind {self.kind!r}")
        if self.kind == "a3":
            object.__setattr__(self, "alpha", 1.5 if self.alpha is None else self.alpha)
            object.__setattr__(self, "beta", 0.5 if self.beta is None else self.beta)
            object.__setattr__(self, "gamma_exp", 2.0 if self.gamma_exp is None else self.gamma_exp)
        elif self.kind == "a4":
            object.__setattr__(self, "alpha", 0.5 if self.alpha is None else self.alpha)

    @property
    def index(self) -> int:
        return RULE_KINDS.index(self.kind)

    @property
    def name(self) -> str:
        return RULE_NAMES[self.kind]


def get_rule(name: str | int | UpdateRule, **params) -> UpdateRule:
    """Resolve ``"a3"``, ``"dcfr"``, ``2`` (zero-based index) or a rule instance."""
    if isinstance(name, UpdateRule):
        return name
    if isinstance(name, (int, np.integer)):
        if not 0 <= name < len(RULE_KINDS):
            raise ConfigurationError(f"rule index {name} out of range")
        return UpdateRule(RULE_KINDS[name], **params)
    key = str(name).strip().lower()
    kind = ALIASES.get(key, key)
    if kind not in RULE_KINDS:
        valid = ", ".join(list(RULE_KINDS) + list(ALIASES))
        raise ConfigurationError(f"unknown rule {name!r}; valid names: {valid}")
    return UpdateRule(kind, **params)


@dataclass
class RegretTable:
    """Cumulative regret ``R`` and average-strategy weight ``S`` per infoset row.

    Rows follow ``game.infosets``; columns are the legal actions of the row in
    fold/call/raise order, padded to three.
    """

    keys: list[InfoSetKey]
    n_actions: np.ndarray
    regret: np.ndarray
    strategy_sum: np.ndarray
    t: int = 0
    index: dict[InfoSetKey, int] = field(default_factory=dict, repr=False)

    @classmethod
    def for_game(cls, game: Game) -> "RegretTable":
        tree = game.tree
        n = len(tree.keys)
        return cls(keys=tree.keys, n_actions=tree.n_actions.copy(),
                   regret=np.zeros((n, MAX_ACTIONS)), strategy_sum=np.zeros((n, MAX_ACTIONS)),
                   index=tree.index)

    @property
    def mask(self) -> np.ndarray:
        return np.arange(MAX_ACTIONS)[None, :] < self.n_actions[:, None]

    def row(self, key: InfoSetKey) -> int:
        try:
            return self.index[key]
        except KeyError:
            raise KeyError(f"infoset {key} not in table") from None

    def copy(self) -> "RegretTable":
        return RegretTable(self.keys, self.n_actions.copy(), self.regret.copy(),
                           self.strategy_sum.copy(), self.t, self.index)


@dataclass
class StrategyProfile:
    """Action probabilities for every infoset, stored row-aligned with the game."""

    keys: list[InfoSetKey]
    n_actions: np.ndarray
    probs: np.ndarray
    index: dict[InfoSetKey, int] = field(default_factory=dict, repr=False)

    def __getitem__(self, key: InfoSetKey) -> np.ndarray:
        try:
            i = self.index[key]
        except KeyError:
            raise KeyError(f"infoset {key} missing from profile") from None
        return self.probs[i, : self.n_actions[i]]

    def __len__(self):
        return len(self.keys)

    def as_dict(self) -> dict[InfoSetKey, np.ndarray]:
        return {k: self[k] for k in self.keys}

    @classmethod
    def from_mapping(cls, game: Game, mapping) -> "StrategyProfile":
        """Build from ``{InfoSetKey: probabilities}``; every infoset must be present."""
        tree = game.tree
        probs = np.zeros((len(tree.keys), MAX_ACTIONS))
        for i, key in enumerate(tree.keys):
            try:
                p = np.asarray(mapping[key], dtype=float)
            except KeyError:
                raise KeyError(f"infoset {key} missing from profile") from None
            if p.shape != (tree.n_actions[i],):
                raise ValueError(f"infoset {key}: expected {tree.n_actions[i]} probabilities")
            probs[i, : len(p)] = p
        return cls(tree.keys, tree.n_actions.copy(), probs, tree.index)

    @classmethod
    def uniform(cls, game: Game) -> "StrategyProfile":
        tree = game.tree
        mask = np.arange(MAX_ACTIONS)[None, :] < tree.n_actions[:, None]
        return cls(tree.keys, tree.n_actions.copy(), mask / tree.n_actions[:, None], tree.index)


@dataclass
class InstantRegretReport:
    """Instantaneous regrets of one player's infosets from one traversal.

    ``cf_reach`` is the opponent-and-chance reach of each infoset and
    ``own_reach`` the traverser's own reach probability.
    """

    player: int
    rows: np.ndarray
    regret: np.ndarray
    cf_reach: np.ndarray
    own_reach: np.ndarray
    strategy: np.ndarray


# --- strategy computation --------------------------------------------------

def _regret_matching(regret: np.ndarray, mask: np.ndarray) -> np.ndarray:
    n = mask.sum(axis=1, keepdims=True)
    pos = np.where(mask, np.maximum(regret, 0.0), 0.0)
    total = pos.sum(axis=1, keepdims=True)
    ok = total > NORM_EPS
    return np.where(ok, pos / np.where(ok, total, 1.0), mask / n)


def strategy_matrix(table: RegretTable, rule: UpdateRule) -> np.ndarray:
    """Current strategy of every row under ``rule``."""
    mask = table.mask
    if rule.kind == "a7":
        return mask / table.n_actions[:, None]
    return _regret_matching(table.regret, mask)


def current_strategy(table: RegretTable, infoset: InfoSetKey, rule: UpdateRule) -> np.ndarray:
    i = table.row(infoset)
    n = table.n_actions[i]
    if rule.kind == "a7":
        return np.full(n, 1.0 / n)
    return regret_matching(table.regret[i, :n])


def regret_matching(regrets) -> np.ndarray:
    """Positive-part normalisation of one regret vector, uniform if none is positive."""
    regrets = np.asarray(regrets, dtype=float)
    return _regret_matching(regrets[None, :], np.ones((1, len(regrets)), dtype=bool))[0]


def strategy_for_rule(regrets, rule: UpdateRule) -> np.ndarray:
    """Strategy a rule plays for one cumulative-regret vector."""
    regrets = np.asarray(regrets, dtype=float)
    if rule.kind == "a7":
        return np.full(len(regrets), 1.0 / len(regrets))
    return regret_matching(regrets)


# --- accumulation ----------------------------------------------------------

def discount_factors(rule: UpdateRule, t: int) -> tuple[float, float]:
    """DCFR multipliers for positive and non-positive cumulative regret."""
    ta, tb = float(t) ** rule.alpha, float(t) ** rule.beta
    return ta / (ta + 1.0), tb / (tb + 1.0)


def accumulate(regret: np.ndarray, inst: np.ndarray, rule: UpdateRule, t: int) -> np.ndarray:
    """Return the new cumulative regret for arrays of matching shape."""
    if t < 1:
        raise ValueError(f"iteration t must be >= 1, got {t}")
    k = rule.kind
    if k == "a1":
        return np.maximum(regret + inst, 0.0)
    if k == "a2":
        return regret + t * inst
    if k == "a3":
        pos, neg = discount_factors(rule, t)
        return regret * np.where(regret > 0, pos, neg) + inst
    if k == "a4":
        return regret + math.exp(rule.alpha) * inst
    if k == "a6":
        return regret + np.maximum(inst, 0.0)
    return regret + inst


def accumulate_regret(table: RegretTable, report: InstantRegretReport, rule: UpdateRule,
                      t: int) -> RegretTable:
    """Fold one report into ``table`` in place; rows outside the report are untouched."""
    rows = report.rows
    table.regret[rows] = accumulate(table.regret[rows], report.regret, rule, t)
    return table


def update_average(table: RegretTable, rows, strategy, reach, weight: float = 1.0) -> RegretTable:
    """``S(I, a) += weight * reach(I) * strategy(I, a)`` for the given rows."""
    reach = np.asarray(reach, dtype=float)
    if np.any(reach < 0) or np.any(reach > 1 + 1e-12):
        raise ValueError("reach probabilities must lie in [0, 1]")
    table.strategy_sum[rows] += weight * reach[:, None] * strategy
    return table


def average_profile(table: RegretTable) -> StrategyProfile:
    probs = _regret_matching(table.strategy_sum, table.mask)
    return StrategyProfile(table.keys, table.n_actions, probs, table.index)


def current_profile(table: RegretTable, rule: UpdateRule) -> StrategyProfile:
    return StrategyProfile(table.keys, table.n_actions, strategy_matrix(table, rule), table.index)


# --- traversal -------------------------------------------------------------

def traverse(game: Game, sigma: np.ndarray, player: int) -> InstantRegretReport:
    """One full-tree pass computing ``player``'s instantaneous regrets under ``sigma``."""
    tree = game.tree
    n_rows = len(tree.keys)
    n_cards = game.spec.deck_size
    inst = np.zeros((n_rows, MAX_ACTIONS))
    cf_reach = np.zeros(n_rows)
    own_reach = np.zeros(n_rows)

    def walk(nd, r_own, r_opp):
        kind = nd.kind
        if kind == TERMINAL:
            if player == 0:
                return nd.payoff @ r_opp
            return -(r_opp @ nd.payoff)
        if kind == CHANCE:
            v = np.zeros(n_cards)
            for ch in nd.children:
                v += walk(ch, r_own, r_opp)
            return v
        sig = sigma[nd.rows]
        if nd.player == player:
            n = len(nd.actions)
            vals = np.empty((n_cards, n))
            for a, ch in enumerate(nd.children):
                vals[:, a] = walk(ch, r_own * sig[:, a], r_opp)
            v = np.einsum("ij,ij->i", sig[:, :n], vals)
            np.add.at(inst[:, :n], nd.rows, vals - v[:, None])
            cfr = nd.chance @ r_opp if player == 0 else r_opp @ nd.chance
            np.add.at(cf_reach, nd.rows, cfr)
            own_reach[nd.rank_rows] = r_own[nd.rank_card]
            return v
        v = np.zeros(n_cards)
        for a, ch in enumerate(nd.children):
            v += walk(ch, r_own, r_opp * sig[:, a])
        return v

    walk(tree.root, np.ones(n_cards), np.ones(n_cards))
    rows = np.flatnonzero(tree.player_of_row == player)
    return InstantRegretReport(player, rows, inst[rows], cf_reach[rows], own_reach[rows],
                               sigma[rows])


def cfr_iteration(game: Game, table: RegretTable, rule: UpdateRule, *,
                  alternating: bool = True, average_weighting: str = "uniform"
                  ) -> list[InstantRegretReport]:
    """Run iteration ``table.t + 1`` with ``rule`` and advance the counter."""
    t = table.t + 1
    if average_weighting == "uniform":
        w = 1.0
    elif average_weighting == "linear":
        w = float(t)
    else:
        raise ConfigurationError(f"unknown average weighting {average_weighting!r}")
    reports = []
    if alternating:
        for p in (0, 1):
            sigma = strategy_matrix(table, rule)
            rep = traverse(game, sigma, p)
            accumulate_regret(table, rep, rule, t)
            update_average(table, rep.rows, rep.strategy, rep.own_reach, w)
            reports.append(rep)
    else:
        sigma = strategy_matrix(table, rule)
        reports = [traverse(game, sigma, p) for p in (0, 1)]
        for rep in reports:
            accumulate_regret(table, rep, rule, t)
            update_average(table, rep.rows, rep.strategy, rep.own_reach, w)
    table.t = t
    return reports


class Solver:
    """Convenience wrapper owning one table; ``step(rule)`` runs one iteration."""

    def __init__(self, game: Game, *, alternating: bool = True, average_weighting: str = "uniform"):
        self.game = game
        self.table = RegretTable.for_game(game)
        self.alternating = alternating
        self.average_weighting = average_weighting
        self.last_reports: list[InstantRegretReport] = []
        self.last_rule: UpdateRule | None = None

    @property
    def t(self) -> int:
        return self.table.t

    def step(self, rule) -> list[InstantRegretReport]:
        rule = get_rule(rule)
        self.last_rule = rule
        self.last_reports = cfr_iteration(self.game, self.table, rule, alternating=self.alternating,
                                          average_weighting=self.average_weighting)
        return self.last_reports

    def run(self, rule, iterations: int) -> "Solver":
        for _ in range(iterations):
            self.step(rule)
        return self

    def average_profile(self) -> StrategyProfile:
        return average_profile(self.table)

    def current_profile(self, rule=None) -> StrategyProfile:
        rule = get_rule(rule) if rule is not None else (self.last_rule or get_rule("a5"))
        return current_profile(self.table, rule)
