# %% [markdown]
# # Seven regret update rules
# Each rule is a way of folding instantaneous regret into the running total.
# All but `a7` then play regret matching on that total.

# %%
import numpy as np

from rlcfr.cfr import RULE_KINDS, RULE_NAMES, Solver, accumulate, get_rule
from rlcfr.games import build_game
from rlcfr.metrics import exploitability

R = np.array([1.0, -2.0])
r = np.array([0.5, 1.0])
for k in RULE_KINDS:
    print(k, RULE_NAMES[k].ljust(9), accumulate(R, r, get_rule(k), t=3))

# %%
kuhn = build_game("kuhn")
for k in RULE_KINDS:
    s = Solver(kuhn).run(k, 1000)
    print(k, RULE_NAMES[k].ljust(9), "%.2e" % exploitability(kuhn, s.average_profile()).exploitability)

# %%
# rules can be switched every iteration; the solver does not care
s = Solver(kuhn)
for t in range(1000):
    s.step("a3" if t < 100 else "a1")
print("dcfr then cfr+:", exploitability(kuhn, s.average_profile()).exploitability)
