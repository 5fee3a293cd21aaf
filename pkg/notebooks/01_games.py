# %% [markdown]
# # Poker games as trees
# Kuhn, Leduc and the 8-card "Royal" variant share one betting engine.
# Histories are tuples: dealt cards first, then f/c/r actions, with board
# cards spliced in between rounds.

# %%
from rlcfr.games import build_game, enumerate_infosets

kuhn = build_game("kuhn")
print(kuhn.spec)

# %%
# every decision history, grouped by what the acting player can see
for key, actions in enumerate_infosets(kuhn):
    print(str(key).ljust(10), actions)

# %%
# K vs J, bet then call: player 0 wins the ante plus the bet
h = kuhn.history_from((2, 0), "rc")
print(h, kuhn.terminal_utility(h, 0), kuhn.terminal_utility(h, 1))

# %%
for name in ("kuhn", "leduc", "royal"):
    g = build_game(name)
    print(name, "infosets:", len(g.infosets), "utility range:", g.utility_range)

# %%
# walking a Leduc hand by hand
leduc = build_game("leduc")
h = leduc.root()
for a in (0, 4, "r", "c"):
    h = leduc.apply_action(h, a)
print(leduc.node(h).kind, [c for c, _ in leduc.chance_outcomes(h)])
h = leduc.apply_action(h, 1)  # a jack on the board pairs player 0
print(leduc.infoset_key(h), leduc.legal_actions(h))
