# %% [markdown]
# # Best responses and exploitability
# Exploitability here is the mean of the two best-response values, so it is
# zero exactly at an equilibrium.

# %%
import numpy as np

from rlcfr.cfr import Solver, StrategyProfile
from rlcfr.games import build_game
from rlcfr.metrics import best_response_value, exploitability, expected_value, game_bound

kuhn = build_game("kuhn")
uni = StrategyProfile.uniform(kuhn)
print(exploitability(kuhn, uni))  # 11/24

# %%
s = Solver(kuhn).run("a1", 5000)
avg = s.average_profile()
print("value for player 0:", expected_value(kuhn, avg, 0), "(game value is -1/18)")
print("best responses:", best_response_value(kuhn, avg, 0), best_response_value(kuhn, avg, 1))

# %%
# the average-profile guarantee is loose but holds
for T in (10, 100, 1000):
    e = exploitability(kuhn, Solver(kuhn).run("a5", T).average_profile()).exploitability
    print(T, "%.4f" % e, "bound %.2f" % game_bound(kuhn, T))

# %%
for key in avg.keys:
    print(str(key).ljust(8), np.round(avg[key], 3))
