"""Two-player limit poker variants as implicit extensive-form game trees.

A history is a tuple mixing chance outcomes (``int`` card ids) and betting
actions (``"f"``, ``"c"``, ``"r"``).  The first two entries deal the private
cards of player 0 and player 1; board cards are dealt at the start of every
later round.  Players are numbered 0 and 1, and player 0 opens every round.

Cards are ``0 .. deck_size - 1`` and ``rank(card) = card // suits``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator

import numpy as np

FOLD, CALL, RAISE = "f", "c", "r"
ACTIONS = (FOLD, CALL, RAISE)
RANK_NAMES = "JQKA23456789T"

CHANCE, DECISION, TERMINAL = "chance", "decision", "terminal"


class ConfigurationError(ValueError):
    """Raised for invalid game, rule or run configuration."""


@dataclass(frozen=True)
class GameSpec:
    name: str
    deck_size: int
    ranks: int
    rounds: int
    public_cards_per_round: tuple[int, ...]
    bet_size_per_round: tuple[int, ...]
    ante: int = 1
    private_cards: int = 1
    max_raises_per_round: int = 2

    def __post_init__(self):
        object.__setattr__(self, "public_cards_per_round", tuple(self.public_cards_per_round))
        object.__setattr__(self, "bet_size_per_round", tuple(self.bet_size_per_round))
        if self.private_cards != 1:
            raise ConfigurationError("only one private card per player is supported")
        if self.rounds < 1:
            raise ConfigurationError("rounds must be >= 1")
        if len(self.bet_size_per_round) != self.rounds:
            raise ConfigurationError(
                f"bet_size_per_round has {len(self.bet_size_per_round)} entries, expected {self.rounds}"
            )
        if any(b <= 0 for b in self.bet_size_per_round):
            raise ConfigurationError("bet sizes must be positive")
        if len(self.public_cards_per_round) != self.rounds:
            raise ConfigurationError("public_cards_per_round must have one entry per round")
        if self.public_cards_per_round[0] != 0:
            raise ConfigurationError("no board cards may be dealt before the first betting round")
        if any(n < 0 for n in self.public_cards_per_round):
            raise ConfigurationError("public card counts must be >= 0")
        if self.ranks < 1 or self.deck_size % self.ranks:
            raise ConfigurationError("deck_size must be a multiple of ranks")
        if self.deck_size < 2 * self.private_cards + sum(self.public_cards_per_round):
            raise ConfigurationError("deck too small for the deal")
        if self.ante < 0:
            raise ConfigurationError("ante must be >= 0")
        if self.max_raises_per_round < 1:
            raise ConfigurationError("max_raises_per_round must be >= 1")

    @property
    def suits(self) -> int:
        return self.deck_size // self.ranks

    @property
    def board_size(self) -> int:
        return sum(self.public_cards_per_round)

    def rank(self, card: int) -> int:
        return card // self.suits


# Kuhn keeps the classic single bet per round so the tree has 12 infosets.
KUHN = GameSpec("kuhn", deck_size=3, ranks=3, rounds=1, public_cards_per_round=(0,),
                bet_size_per_round=(1,), max_raises_per_round=1)
LEDUC = GameSpec("leduc", deck_size=6, ranks=3, rounds=2, public_cards_per_round=(0, 1),
                 bet_size_per_round=(2, 4))
ROYAL = GameSpec("royal", deck_size=8, ranks=4, rounds=3, public_cards_per_round=(0, 1, 1),
                 bet_size_per_round=(2, 4, 4))
PRESETS = {g.name: g for g in (KUHN, LEDUC, ROYAL)}


def preset(name: str) -> GameSpec:
    try:
        return PRESETS[name.lower()]
    except KeyError:
        raise ConfigurationError(
            f"unknown game {name!r}; valid names: {', '.join(PRESETS)}"
        ) from None


@dataclass(frozen=True, order=True)
class InfoSetKey:
    """What the acting player observes: own rank, board ranks and public betting."""

    player: int
    private_card: int
    public_cards: tuple[int, ...]
    betting_sequence: str

    def __str__(self):
        board = "".join(RANK_NAMES[r] for r in self.public_cards)
        return f"{self.player}:{RANK_NAMES[self.private_card]}:{board}:{self.betting_sequence}"


@dataclass(frozen=True)
class GameNode:
    kind: str
    history: tuple
    player_to_act: int | None = None
    legal_actions: tuple[str, ...] = ()
    pot_contribution: tuple[int, int] = (0, 0)


# --- betting engine -------------------------------------------------------

@dataclass(frozen=True)
class _Betting:
    """Public betting state; independent of which cards were dealt."""

    round: int = 0
    rounds_actions: tuple[str, ...] = ("",)
    raises: int = 0
    contrib: tuple[int, int] = (0, 0)
    folded: int | None = None
    showdown: bool = False
    # board cards still owed before betting can continue
    pending_board: int = 0

    @property
    def to_act(self) -> int:
        return len(self.rounds_actions[-1]) % 2

    @property
    def facing_bet(self) -> bool:
        return self.contrib[0] != self.contrib[1]

    @property
    def terminal(self) -> bool:
        return self.folded is not None or self.showdown

    @property
    def sequence(self) -> str:
        return "/".join(self.rounds_actions)

    def legal(self, spec: GameSpec) -> tuple[str, ...]:
        if self.terminal or self.pending_board:
            return ()
        acts = []
        if self.facing_bet:
            acts.append(FOLD)
        acts.append(CALL)
        if self.raises < spec.max_raises_per_round:
            acts.append(RAISE)
        return tuple(acts)

    def apply(self, spec: GameSpec, action: str) -> "_Betting":
        if action not in self.legal(spec):
            raise ValueError(f"illegal action {action!r} at betting {self.sequence!r}")
        p = self.to_act
        contrib = list(self.contrib)
        acts = self.rounds_actions[:-1] + (self.rounds_actions[-1] + action,)
        if action == FOLD:
            return _Betting(self.round, acts, self.raises, self.contrib, folded=p)
        if action == RAISE:
            contrib[p] = contrib[1 - p] + spec.bet_size_per_round[self.round]
            return _Betting(self.round, acts, self.raises + 1, tuple(contrib))
        contrib[p] = contrib[1 - p]
        if len(self.rounds_actions[-1]) == 0:
            return _Betting(self.round, acts, self.raises, tuple(contrib))
        # check-check or bet-call closes the round
        if self.round + 1 == spec.rounds:
            return _Betting(self.round, acts, self.raises, tuple(contrib), showdown=True)
        nxt = self.round + 1
        return _Betting(nxt, acts + ("",), 0, tuple(contrib),
                        pending_board=spec.public_cards_per_round[nxt])

    def deal_board(self) -> "_Betting":
        return _Betting(self.round, self.rounds_actions, self.raises, self.contrib,
                        pending_board=self.pending_board - 1)


def _showdown_sign(spec: GameSpec, card0: int, card1: int, board_ranks) -> int:
    """+1 if player 0 wins, -1 if player 1 wins, 0 on a split."""
    r0, r1 = spec.rank(card0), spec.rank(card1)
    s0 = (r0 in board_ranks, r0)
    s1 = (r1 in board_ranks, r1)
    return (s0 > s1) - (s0 < s1)


def _payoff0(spec: GameSpec, b: _Betting, card0: int, card1: int, board_ranks) -> float:
    if b.folded is not None:
        return float(-b.contrib[0]) if b.folded == 0 else float(b.contrib[1])
    return float(_showdown_sign(spec, card0, card1, board_ranks) * b.contrib[1])


# --- history-level interface ----------------------------------------------

@dataclass(frozen=True)
class _Parsed:
    cards: tuple[int, ...]
    board: tuple[int, ...]
    betting: _Betting


class Game:
    """Immutable handle over one poker variant.

    History-level methods (``root``, ``apply_action`` ...) walk the explicit
    tree and are meant for oracles and inspection; the solver works on the
    compiled public tree in :attr:`tree`.
    """

    def __init__(self, spec: GameSpec):
        self.spec = spec

    def __repr__(self):
        return f"Game({self.spec.name!r})"

    def root(self) -> tuple:
        return ()

    def _parse(self, history) -> _Parsed:
        spec = self.spec
        ante = spec.ante
        cards, board = [], []
        b = _Betting(contrib=(ante, ante))
        for h in history:
            if len(cards) < 2:
                if not isinstance(h, (int, np.integer)):
                    raise ValueError(f"expected a private card, got {h!r}")
                cards.append(int(h))
            elif b.pending_board:
                if not isinstance(h, (int, np.integer)):
                    raise ValueError(f"expected a board card, got {h!r}")
                board.append(int(h))
                b = b.deal_board()
            else:
                b = b.apply(spec, h)
        return _Parsed(tuple(cards), tuple(board), b)

    def node(self, history) -> GameNode:
        history = tuple(history)
        p = self._parse(history)
        if len(p.cards) < 2 or p.betting.pending_board:
            return GameNode(CHANCE, history, pot_contribution=p.betting.contrib)
        if p.betting.terminal:
            return GameNode(TERMINAL, history, pot_contribution=p.betting.contrib)
        return GameNode(DECISION, history, p.betting.to_act,
                        p.betting.legal(self.spec), p.betting.contrib)

    def is_terminal(self, history) -> bool:
        return self.node(history).kind == TERMINAL

    def is_chance(self, history) -> bool:
        return self.node(history).kind == CHANCE

    def player_to_act(self, history) -> int:
        return self.node(history).player_to_act

    def legal_actions(self, history) -> tuple[str, ...]:
        return self.node(history).legal_actions

    def apply_action(self, history, action) -> tuple:
        history = tuple(history)
        nd = self.node(history)
        if nd.kind == TERMINAL:
            raise ValueError("cannot act at a terminal history")
        if nd.kind == CHANCE:
            if action not in dict(self.chance_outcomes(history)):
                raise ValueError(f"card {action!r} is not available")
        elif action not in nd.legal_actions:
            raise ValueError(f"illegal action {action!r}")
        return history + (action,)

    def chance_outcomes(self, history) -> list[tuple[int, float]]:
        """Remaining cards, each with uniform probability."""
        p = self._parse(history)
        if not (len(p.cards) < 2 or p.betting.pending_board):
            raise ValueError("not a chance node")
        used = set(p.cards) | set(p.board)
        rest = [c for c in range(self.spec.deck_size) if c not in used]
        return [(c, 1.0 / len(rest)) for c in rest]

    def terminal_utility(self, history, player: int) -> float:
        """Net chips won by ``player`` at a terminal history."""
        p = self._parse(history)
        if not p.betting.terminal:
            raise ValueError("terminal_utility called on a non-terminal history")
        board_ranks = [self.spec.rank(c) for c in p.board]
        u0 = _payoff0(self.spec, p.betting, p.cards[0], p.cards[1], board_ranks)
        return u0 if player == 0 else -u0

    utility = terminal_utility

    def infoset_key(self, history) -> InfoSetKey:
        p = self._parse(history)
        if len(p.cards) < 2 or p.betting.pending_board or p.betting.terminal:
            raise ValueError("infoset_key needs a decision history")
        pl = p.betting.to_act
        return InfoSetKey(pl, self.spec.rank(p.cards[pl]),
                          tuple(self.spec.rank(c) for c in p.board), p.betting.sequence)

    def history_from(self, deal, betting) -> tuple:
        """Interleave a full deal ``(c0, c1, board...)`` with betting actions."""
        deal = list(deal)
        h = tuple(deal[:2])
        board = deal[2:]
        for a in betting:
            while self.is_chance(h):
                h = self.apply_action(h, board.pop(0))
            h = self.apply_action(h, a)
        while board and self.is_chance(h):
            h = self.apply_action(h, board.pop(0))
        return h

    def iter_histories(self, history=()) -> Iterator[tuple[tuple, float]]:
        """Depth-first walk yielding ``(history, chance_probability)``."""
        stack = [(tuple(history), 1.0)]
        while stack:
            h, pr = stack.pop()
            yield h, pr
            nd = self.node(h)
            if nd.kind == CHANCE:
                for c, q in reversed(self.chance_outcomes(h)):
                    stack.append((h + (c,), pr * q))
            elif nd.kind == DECISION:
                for a in reversed(nd.legal_actions):
                    stack.append((h + (a,), pr))

    # --- compiled structures ---------------------------------------------

    @cached_property
    def tree(self) -> "PublicTree":
        return PublicTree(self.spec)

    @property
    def infosets(self) -> list[InfoSetKey]:
        return self.tree.keys

    @cached_property
    def utility_range(self) -> float:
        """Max minus min terminal utility for a single player."""
        return self.tree.max_utility - self.tree.min_utility


def build_game(spec: GameSpec | str) -> Game:
    if isinstance(spec, str):
        spec = preset(spec)
    if not isinstance(spec, GameSpec):
        raise ConfigurationError(f"expected a GameSpec, got {type(spec).__name__}")
    return Game(spec)


def enumerate_infosets(game: Game, player: int | None = None) -> list[tuple[InfoSetKey, tuple[str, ...]]]:
    """Sorted, duplicate-free infoset keys with their legal actions."""
    t = game.tree
    out = [(k, a) for k, a in zip(t.keys, t.actions) if player is None or k.player == player]
    return out


# --- public tree ----------------------------------------------------------

@dataclass(eq=False)
class PublicNode:
    kind: str
    betting: _Betting
    board: tuple[int, ...]
    player: int | None = None
    actions: tuple[str, ...] = ()
    children: list["PublicNode"] = field(default_factory=list)
    # decision: card -> table row (impossible cards borrow a valid row)
    rows: np.ndarray | None = None
    # decision: one entry per possible rank
    rank_rows: np.ndarray | None = None
    rank_card: np.ndarray | None = None
    # terminal: player-0 payoff with chance weight folded in, shape (deck, deck)
    payoff: np.ndarray | None = None
    # decision: chance weight of reaching this board with cards (c0, c1)
    chance: np.ndarray | None = None


class PublicTree:
    """Betting tree with boards grouped by rank.

    Each decision node stands for one public state; together with the acting
    player's private rank it identifies exactly one infoset.  All chance
    probabilities are folded into per-node ``(deck, deck)`` weight matrices,
    so reach vectors carried down the tree hold only the players' own action
    probabilities, indexed by private card.
    """

    def __init__(self, spec: GameSpec):
        self.spec = spec
        n = spec.deck_size
        self.card_rank = np.arange(n) // spec.suits
        self._denoms = [self._deal_count(k) for k in range(spec.board_size + 1)]
        self._keys: dict[InfoSetKey, tuple[str, ...]] = {}
        self._decision_nodes: list[PublicNode] = []
        self.max_utility = -np.inf
        self.min_utility = np.inf
        self.terminal_count = 0
        self.root = self._build(_Betting(contrib=(spec.ante, spec.ante)), ())
        self.keys = sorted(self._keys)
        self.actions = [self._keys[k] for k in self.keys]
        self.index = {k: i for i, k in enumerate(self.keys)}
        self.player_of_row = np.array([k.player for k in self.keys], dtype=int)
        self.n_actions = np.array([len(a) for a in self.actions], dtype=int)
        for nd in self._decision_nodes:
            self._assign_rows(nd)

    def _deal_count(self, k: int) -> int:
        n = self.spec.deck_size
        out = 1
        for i in range(2 + k):
            out *= n - i
        return out

    def _ways(self, board: tuple[int, ...]) -> np.ndarray:
        """Ordered ways to deal ``board`` ranks given private cards (c0, c1)."""
        s = self.spec.suits
        r = self.card_rank
        ways = np.ones((len(r), len(r)))
        ways[np.arange(len(r)), np.arange(len(r))] = 0.0
        seen: dict[int, int] = {}
        for b in board:
            avail = s - seen.get(b, 0) - (r[:, None] == b) - (r[None, :] == b)
            ways = ways * np.clip(avail, 0, None)
            seen[b] = seen.get(b, 0) + 1
        return ways

    def _build(self, b: _Betting, board: tuple[int, ...]) -> PublicNode:
        spec = self.spec
        if b.pending_board:
            node = PublicNode(CHANCE, b, board)
            for rank in range(spec.ranks):
                if board.count(rank) < spec.suits:
                    node.children.append(self._build(b.deal_board(), board + (rank,)))
            return node
        weight = self._ways(board) / self._denoms[len(board)]
        if b.terminal:
            r = self.card_rank
            if b.folded is not None:
                u = -b.contrib[0] if b.folded == 0 else b.contrib[1]
                pay = np.full(weight.shape, float(u))
            else:
                strength = np.array([(rk in board, rk) for rk in r], dtype=[("p", bool), ("r", int)])
                s = np.array([int(x[0]) * 100 + x[1] for x in strength])
                pay = np.sign(s[:, None] - s[None, :]) * float(b.contrib[1])
            self.max_utility = max(self.max_utility, float(np.max(np.abs(pay))))
            self.min_utility = min(self.min_utility, -float(np.max(np.abs(pay))))
            self.terminal_count += 1
            return PublicNode(TERMINAL, b, board, payoff=pay * weight)
        acts = b.legal(spec)
        node = PublicNode(DECISION, b, board, player=b.to_act, actions=acts, chance=weight)
        seq = b.sequence
        for rank in range(spec.ranks):
            if board.count(rank) < spec.suits:
                self._keys[InfoSetKey(b.to_act, rank, board, seq)] = acts
        self._decision_nodes.append(node)
        node.children = [self._build(b.apply(spec, a), board) for a in acts]
        return node

    def _assign_rows(self, nd: PublicNode) -> None:
        spec = self.spec
        seq = nd.betting.sequence
        rank_rows, rank_card = [], []
        row_of_rank = {}
        for rank in range(spec.ranks):
            key = InfoSetKey(nd.player, rank, nd.board, seq)
            if key in self.index:
                row_of_rank[rank] = self.index[key]
                rank_rows.append(self.index[key])
                # any card of this rank that is not on the board
                rank_card.append(rank * spec.suits + nd.board.count(rank))
        fallback = rank_rows[0]
        nd.rows = np.array([row_of_rank.get(int(r), fallback) for r in self.card_rank], dtype=int)
        nd.rank_rows = np.array(rank_rows, dtype=int)
        nd.rank_card = np.array(rank_card, dtype=int)

    def decision_nodes(self) -> list[PublicNode]:
        return list(self._decision_nodes)

    def nodes(self) -> Iterator[PublicNode]:
        stack = [self.root]
        while stack:
            nd = stack.pop()
            yield nd
            stack.extend(reversed(nd.children))

    def count(self, kind: str | None = None) -> int:
        return sum(1 for nd in self.nodes() if kind is None or nd.kind == kind)


def all_deals(spec: GameSpec) -> Iterator[tuple[int, ...]]:
    """Every ordered deal (c0, c1, board...) of distinct cards."""
    return itertools.permutations(range(spec.deck_size), 2 + spec.board_size)
