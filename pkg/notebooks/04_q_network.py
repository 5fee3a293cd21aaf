# %% [markdown]
# # The Q-network
# Plain numpy: ReLU layers, linear head, masked squared error.

# %%
import numpy as np

from rlcfr.nn import NetworkSpec, backward, forward, init_params, sgd_step

net = init_params(NetworkSpec(seed=0))
print([w.shape for w in net.weights])

# %%
rng = np.random.default_rng(1)
x = rng.normal(size=(32, 18))
actions = rng.integers(0, 7, 32)
targets = np.sin(x[:, 0])
for step in range(2001):
    loss, gw, gb = backward(net, x, actions, targets)
    sgd_step(net, gw, gb, 1e-2)
    if step % 500 == 0:
        print(step, round(loss, 5))

# %%
q = forward(net, x[:3])
print(np.round(q[np.arange(3), actions[:3]], 3), np.round(targets[:3], 3))
