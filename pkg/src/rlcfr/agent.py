"""DQN controller that picks the regret-update rule at every solver step."""
from __future__ import annotations

import csv
import logging
from collections import deque
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import nn

log = logging.getLogger(__name__)

CHECKPOINT_MAGIC = "rlcfr-dqn-checkpoint"
TRAIN_LOG_HEADER = ("step", "episode", "loss", "epsilon", "reward", "action")


@dataclass
class DqnConfig:
    batch_size: int = 32
    discount: float = 0.99
    epsilon: float = 0.1
    target_sync_every: int = 200
    learning_rate: float = 1e-3
    train_steps: int = 20000
    seed: int = 0
    buffer_capacity: int = 2000
    layer_dims: tuple[int, ...] = nn.DEFAULT_DIMS
    # "constant" or "linear" (from epsilon_start down to epsilon over epsilon_decay_steps)
    epsilon_schedule: str = "constant"
    epsilon_start: float = 1.0
    epsilon_decay_steps: int = 5000
    # gradient steps per environment step
    train_ratio: int = 1

    def __post_init__(self):
        self.layer_dims = tuple(int(d) for d in self.layer_dims)
        if not 0 < self.discount <= 1:
            raise ValueError("discount must be in (0, 1]")
        if not 0 <= self.epsilon <= 1 or not 0 <= self.epsilon_start <= 1:
            raise ValueError("epsilon must be in [0, 1]")
        if self.epsilon_schedule not in ("constant", "linear"):
            raise ValueError(f"unknown epsilon schedule {self.epsilon_schedule!r}")
        if self.batch_size < 1 or self.buffer_capacity < self.batch_size:
            raise ValueError("buffer_capacity must be >= batch_size >= 1")
        if self.target_sync_every < 1 or self.train_ratio < 0:
            raise ValueError("target_sync_every must be >= 1 and train_ratio >= 0")

    def epsilon_at(self, step: int) -> float:
        if self.epsilon_schedule == "constant":
            return self.epsilon
        frac = min(1.0, step / max(1, self.epsilon_decay_steps))
        return self.epsilon_start + frac * (self.epsilon - self.epsilon_start)


class Transition(NamedTuple):
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    done: bool


class ReplayBuffer:
    """FIFO replay memory; the oldest transition is evicted once full."""

    def __init__(self, capacity: int = 2000):
        self.capacity = capacity
        self._items: deque[Transition] = deque(maxlen=capacity)

    def __len__(self):
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def push(self, transition: Transition) -> "ReplayBuffer":
        s = np.asarray(transition.state, dtype=float)
        s2 = np.asarray(transition.next_state, dtype=float)
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(s2)) and np.isfinite(transition.reward)):
            raise ValueError("transition contains non-finite values")
        self._items.append(Transition(s, int(transition.action), float(transition.reward), s2,
                                      bool(transition.done)))
        return self

    def sample_batch(self, batch_size: int, rng: np.random.Generator) -> list[Transition] | None:
        """Uniform sample without replacement, or ``None`` while underfilled."""
        if len(self._items) < batch_size:
            return None
        idx = rng.choice(len(self._items), size=batch_size, replace=False)
        return [self._items[i] for i in idx]


def push(buffer: ReplayBuffer, transition: Transition) -> ReplayBuffer:
    return buffer.push(transition)


def sample_batch(buffer: ReplayBuffer, batch_size: int, rng: np.random.Generator):
    return buffer.sample_batch(batch_size, rng)


def select_action(qvalues, epsilon: float, rng: np.random.Generator | None = None) -> int:
    """Epsilon-greedy; ties go to the lowest index and ``epsilon == 0`` draws nothing."""
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must be in [0, 1]")
    q = np.asarray(qvalues, dtype=float)
    if epsilon > 0 and rng.random() < epsilon:
        return int(rng.integers(len(q)))
    return int(np.argmax(q))


def td_target(reward, done, next_q, discount: float):
    """``reward`` at episode end, else ``reward + discount * max(next_q)``.

    Works on scalars or on batches (``next_q`` with one row per sample).
    """
    if not 0 < discount <= 1:
        raise ValueError("discount must be in (0, 1]")
    next_q = np.asarray(next_q, dtype=float)
    best = next_q.max(axis=-1)
    out = np.where(np.asarray(done, dtype=bool), reward, reward + discount * best)
    return float(out) if out.ndim == 0 else out


class DQNAgent:
    def __init__(self, config: DqnConfig | None = None):
        self.config = config or DqnConfig()
        spec = nn.NetworkSpec(self.config.layer_dims, self.config.seed)
        self.online = nn.init_params(spec)
        self.target = nn.copy_params(self.online)
        self.buffer = ReplayBuffer(self.config.buffer_capacity)
        self.rng = np.random.default_rng(self.config.seed)
        self.step = 0  # gradient steps taken
        self.env_steps = 0
        self.sync_steps: list[int] = []
        self.meta: dict[str, str] = {}

    @property
    def n_actions(self) -> int:
        return self.config.layer_dims[-1]

    @property
    def epsilon(self) -> float:
        return self.config.epsilon_at(self.env_steps)

    def q_values(self, obs) -> np.ndarray:
        return nn.forward(self.online, obs)

    def act(self, obs, greedy: bool = False) -> int:
        eps = 0.0 if greedy else self.epsilon
        return select_action(self.q_values(obs), eps, self.rng)

    def remember(self, transition: Transition) -> None:
        self.buffer.push(transition)

    def train_step(self, batch: Sequence[Transition]) -> float:
        """One SGD step on ``batch``; targets come from the target network."""
        states = np.stack([tr.state for tr in batch])
        actions = np.array([tr.action for tr in batch])
        rewards = np.array([tr.reward for tr in batch])
        nexts = np.stack([tr.next_state for tr in batch])
        dones = np.array([tr.done for tr in batch])
        targets = td_target(rewards, dones, nn.forward(self.target, nexts), self.config.discount)
        loss, gw, gb = nn.backward(self.online, states, actions, targets)
        if not np.isfinite(loss):
            raise nn.TrainingError(f"non-finite loss at step {self.step}")
        nn.sgd_step(self.online, gw, gb, self.config.learning_rate)
        self.step += 1
        if self.step % self.config.target_sync_every == 0:
            nn.copy_params(self.online, self.target)
            self.sync_steps.append(self.step)
        return loss

    def observe(self, transition: Transition) -> float | None:
        """Store a transition and train if the buffer is warm; returns the last loss."""
        self.remember(transition)
        self.env_steps += 1
        loss = None
        for _ in range(self.config.train_ratio):
            batch = self.buffer.sample_batch(self.config.batch_size, self.rng)
            if batch is None:
                break
            loss = self.train_step(batch)
        return loss

    # --- persistence ------------------------------------------------------

    def to_text(self) -> str:
        cfg = {f.name: getattr(self.config, f.name) for f in fields(self.config)}
        lines = [CHECKPOINT_MAGIC, f"version {nn.CHECKPOINT_VERSION}", f"step {self.step}",
                 f"env_steps {self.env_steps}"]
        for k, v in cfg.items():
            v = " ".join(map(str, v)) if isinstance(v, tuple) else v
            lines.append(f"config {k} {v}")
        for k, v in sorted(self.meta.items()):
            lines.append(f"meta {k} {v}")
        lines.append("network online")
        lines += nn.params_to_lines(self.online)
        lines.append("network target")
        lines += nn.params_to_lines(self.target)
        lines.append("end")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DQNAgent":
        lines = text.splitlines()
        err = nn.CheckpointError
        if not lines or lines[0] != CHECKPOINT_MAGIC:
            raise err("not a DQN checkpoint")
        if len(lines) < 2 or lines[1] != f"version {nn.CHECKPOINT_VERSION}":
            raise err(f"unsupported checkpoint version line {lines[1] if len(lines) > 1 else ''!r}")
        if lines[-1] != "end":
            raise err("checkpoint is truncated")
        try:
            step = int(lines[2].split()[1])
            env_steps = int(lines[3].split()[1])
        except (IndexError, ValueError) as exc:
            raise err("bad step counters") from exc
        pos = 4
        types = {f.name: f.type for f in fields(DqnConfig)}
        raw = {}
        while lines[pos].startswith("config "):
            parts = lines[pos].split()
            if len(parts) < 3 or parts[1] not in types:
                raise err(f"bad config line {pos + 1}")
            raw[parts[1]] = parts[2:]
            pos += 1
        meta = {}
        while lines[pos].startswith("meta "):
            parts = lines[pos].split(maxsplit=2)
            if len(parts) < 2:
                raise err(f"bad meta line {pos + 1}")
            meta[parts[1]] = parts[2] if len(parts) > 2 else ""
            pos += 1
        defaults = asdict(DqnConfig())
        kwargs = {}
        for k, vals in raw.items():
            d = defaults[k]
            if isinstance(d, tuple):
                kwargs[k] = tuple(int(v) for v in vals)
            elif isinstance(d, bool):
                kwargs[k] = vals[0] == "True"
            else:
                kwargs[k] = type(d)(vals[0])
        if lines[pos] != "network online":
            raise err("missing online network")
        online, pos = nn.params_from_lines(lines, pos + 1)
        if lines[pos] != "network target":
            raise err("missing target network")
        target, pos = nn.params_from_lines(lines, pos + 1)
        if lines[pos] != "end":
            raise err("trailing data after networks")
        agent = cls(DqnConfig(**kwargs))
        if online.spec.layer_dims != agent.config.layer_dims:
            raise err("network dims do not match config")
        agent.online, agent.target = online, target
        agent.step, agent.env_steps = step, env_steps
        agent.meta = meta
        return agent

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "DQNAgent":
        return cls.from_text(Path(path).read_text())


def save_checkpoint(agent: DQNAgent, path) -> None:
    agent.save(path)


def load_checkpoint(path) -> DQNAgent:
    return DQNAgent.load(path)


@dataclass
class TrainLog:
    rows: list[tuple] = field(default_factory=list)
    episode_returns: list[float] = field(default_factory=list)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRAIN_LOG_HEADER)
            for step, ep, loss, eps, rew, act in self.rows:
                w.writerow([step, ep, "" if loss is None else repr(loss), repr(eps), repr(rew), act])


def train(agent: DQNAgent, envs: Sequence, steps: int, *,
          on_step: Callable[[int, DQNAgent], None] | None = None,
          return_discount: float | None = None) -> TrainLog:
    """Run ``steps`` environment steps, cycling through ``envs`` one episode at a time.

    Each env needs ``reset() -> obs`` and ``step(action)`` returning an object
    with ``observation``, ``reward`` and ``done``.
    """
    gamma = agent.config.discount if return_discount is None else return_discount
    tlog = TrainLog()
    episode = 0
    env = envs[0]
    obs = env.reset()
    rewards: list[float] = []
    for step in range(1, steps + 1):
        eps = agent.epsilon
        action = agent.act(obs)
        out = env.step(action)
        loss = agent.observe(Transition(obs, action, out.reward, out.observation, out.done))
        tlog.rows.append((step, episode, loss, eps, float(out.reward), action))
        rewards.append(float(out.reward))
        obs = out.observation
        if on_step is not None:
            on_step(step, agent)
        if out.done:
            tlog.episode_returns.append(float(np.sum(np.power(gamma, np.arange(len(rewards))) * rewards)))
            log.info("episode %d done at step %d, return %.4f", episode, step, tlog.episode_returns[-1])
            rewards = []
            episode += 1
            env = envs[episode % len(envs)]
            obs = env.reset()
    return tlog
