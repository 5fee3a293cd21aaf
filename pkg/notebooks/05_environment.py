# %% [markdown]
# # The solve as an environment
# An action picks the update rule for the next iteration.  The observation
# summarises the regret table over the last three iterations; the reward
# compares exploitability to the best fixed rule.

# %%
import numpy as np

from rlcfr.env import EnvConfig, RegretEnv, build_baseline_curves, run_policy

curves = build_baseline_curves("kuhn", 300)
print({k: "%.2e" % v[-1] for k, v in curves.curves.items()}, "min %.2e" % curves.at(300))

# %%
env = RegretEnv(EnvConfig(game="kuhn", max_steps=300, reward_kind="R2"), curves)
for name, policy in [("always cfr+", lambda o: 0), ("always vanilla", lambda o: 4)]:
    outs = run_policy(env, policy)
    print(name.ljust(15), "final %.2e" % outs[-1].info["exploitability"],
          "return %.4f" % sum(o.reward for o in outs))

# %%
obs = env.reset()
out = env.step(0)
print(np.round(out.observation.reshape(3, 6), 3))
