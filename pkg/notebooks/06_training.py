# %% [markdown]
# # Training a rule selector (small scale)
# The full protocol trains for 20000 steps on Kuhn and Leduc; this runs a
# short version on Kuhn so it finishes in well under a minute.  The agent
# picks a rule once every 10 iterations, as in the command-line presets.

# %%
from collections import Counter

from rlcfr.env import build_baseline_curves
from rlcfr.experiments import TrainSettings, evaluate, run_train

curves = {"kuhn": build_baseline_curves("kuhn", 200)}
settings = TrainSettings(games=("kuhn",), steps=2000, episode_steps=200,
                         env_overrides={"decision_interval": 10})
agent, log = run_train(settings, seed=0, curves=curves)
ret = log.episode_returns
print("mean return, first/last 10 episodes: %.3f / %.3f" % (sum(ret[:10]) / 10, sum(ret[-10:]) / 10))

# %% [markdown]
# Two thousand steps are far too few to learn much; compare the greedy
# rollout with the best fixed rule.

# %%
rows, rules = evaluate(agent, "kuhn", 200)
print("final exploitability %.3e vs best fixed %.3e" % (rows[-1].exploitability, curves["kuhn"].at(200)))
print(Counter(rules).most_common())
