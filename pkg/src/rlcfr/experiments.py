"""Experiment drivers behind the command line: baselines, curves, training, evaluation, comparison."""
from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .agent import DqnConfig, DQNAgent, train
from .cfr import RULE_KINDS, Solver, get_rule
from .env import BASELINE_RULES, OBS_DIM, BaselineCurves, EnvConfig, RegretEnv, build_baseline_curves
from .games import ConfigurationError, build_game
from .metrics import exploitability
from .nn import CheckpointError

log = logging.getLogger(__name__)

RESULTS_HEADER = ("game", "method", "seed", "iteration", "exploitability", "wall_time_ms")
COMPARE_HEADER = ("game", "method", "iteration", "mean_exploitability", "n_seeds")
ACTION_SETS = {4: RULE_KINDS[:4], 6: RULE_KINDS[:6], 7: RULE_KINDS}


@dataclass(frozen=True)
class ResultRow:
    game: str
    method: str
    seed: int
    iteration: int
    exploitability: float
    wall_time_ms: float = 0.0

    def validate(self, T: int | None = None) -> None:
        if self.iteration < 1 or (T is not None and self.iteration > T):
            raise ValueError(f"iteration {self.iteration} out of range")
        if not self.exploitability >= -1e-9:
            raise ValueError(f"exploitability {self.exploitability} below -1e-9")


def write_results(rows: Iterable[ResultRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULTS_HEADER)
        for r in rows:
            w.writerow([r.game, r.method, r.seed, r.iteration, repr(float(r.exploitability)),
                        repr(float(r.wall_time_ms))])


def read_results(path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if tuple(header or ()) != RESULTS_HEADER:
            raise ValueError(f"{path}: bad header {header}")
        out = []
        for rec in rd:
            g, m, s, it, e, wt = rec
            row = ResultRow(g, m, int(s), int(it), float(e), float(wt))
            row.validate()
            out.append(row)
    return out


def checkpoints(T: int, log_spaced: bool = False, per_decade: int = 20) -> list[int]:
    """Iterations at which exploitability is logged."""
    if not log_spaced or T <= 1000:
        return list(range(1, T + 1))
    pts = set(range(1, 1001))
    grid = np.logspace(3, np.log10(T), int(per_decade * np.log10(T / 1000)) + 2)
    pts.update(int(round(x)) for x in grid)
    pts.add(T)
    return sorted(p for p in pts if 1 <= p <= T)


# --- baseline --------------------------------------------------------------

def run_baseline(game: str, rule: str, iterations: int, *, seed: int = 0, log_spaced: bool = False,
                 timing: bool = False, measure: str = "average") -> list[ResultRow]:
    g = build_game(game)
    rule = get_rule(rule)
    solver = Solver(g)
    marks = set(checkpoints(iterations, log_spaced))
    rows = []
    start = time.perf_counter()
    for t in range(1, iterations + 1):
        solver.step(rule)
        if t in marks:
            prof = solver.average_profile() if measure == "average" else solver.current_profile(rule)
            e = exploitability(g, prof).exploitability
            ms = (time.perf_counter() - start) * 1e3 if timing else 0.0
            rows.append(ResultRow(g.spec.name, rule.name, seed, t, e, ms))
    return rows


def curves_path(curves_dir, game: str) -> Path:
    return Path(curves_dir) / f"curves_{game}.csv"


def run_build_curves(game: str, iterations: int, out_path, *, rules: Sequence[str] = BASELINE_RULES,
                     repeats: int = 1) -> BaselineCurves:
    return build_baseline_curves(game, iterations, rules=rules, repeats=repeats, path=out_path)


# --- training --------------------------------------------------------------

@dataclass
class TrainSettings:
    games: tuple[str, ...] = ("kuhn", "leduc")
    reward_kind: str = "R2"
    steps: int = 20000
    episode_steps: int = 1000
    n_actions: int = 7
    checkpoint_every: int = 1000
    dqn: DqnConfig = field(default_factory=DqnConfig)
    env_overrides: dict = field(default_factory=dict)


def make_agent(settings: TrainSettings, seed: int) -> DQNAgent:
    actions = ACTION_SETS[settings.n_actions]
    dims = settings.dqn.layer_dims[:-1] + (len(actions),)
    if dims[0] != OBS_DIM:
        raise ConfigurationError(f"network input must be {OBS_DIM}")
    agent = DQNAgent(replace(settings.dqn, seed=seed, layer_dims=dims, train_steps=settings.steps))
    agent.meta["actions"] = " ".join(actions)
    agent.meta["decision_interval"] = str(settings.env_overrides.get("decision_interval", 1))
    return agent


def make_envs(settings: TrainSettings, curves: dict[str, BaselineCurves | None]) -> list[RegretEnv]:
    actions = ACTION_SETS[settings.n_actions]
    envs = []
    for g in settings.games:
        cfg = EnvConfig(game=g, max_steps=settings.episode_steps, reward_kind=settings.reward_kind,
                        actions=actions, **settings.env_overrides)
        envs.append(RegretEnv(cfg, curves.get(g)))
    return envs


def load_curves_for(games: Sequence[str], curves_dir, reward_kind: str, T: int) -> dict:
    out = {}
    for g in games:
        if reward_kind.upper() == "R1":
            out[g] = None
            continue
        path = curves_path(curves_dir, g) if curves_dir is not None else None
        if path is None or not path.exists():
            raise ConfigurationError(
                f"missing baseline curves for {g} (expected {path}); run `rlcfr build-curves --game {g} --iters {T}` first")
        bc = BaselineCurves.read_csv(path, g)
        if not bc.covers(T):
            raise ConfigurationError(f"curves for {g} cover {bc.T} iterations, need {T}; rerun build-curves")
        out[g] = bc
    return out


def run_train(settings: TrainSettings, seed: int, curves: dict, out_dir=None):
    """Train one agent; returns ``(agent, train_log)`` and writes files when ``out_dir`` is set."""
    agent = make_agent(settings, seed)
    envs = make_envs(settings, curves)
    out = Path(out_dir) if out_dir is not None else None

    def on_step(step, ag):
        if out is not None and settings.checkpoint_every and step % settings.checkpoint_every == 0:
            ag.save(out / f"agent_seed{seed}_step{step}.ckpt")

    tlog = train(agent, envs, settings.steps, on_step=on_step)
    if out is not None:
        agent.save(out / f"agent_seed{seed}.ckpt")
        tlog.write_csv(out / f"train_log_seed{seed}.csv")
    return agent, tlog


# --- evaluation ------------------------------------------------------------

def evaluate(agent: DQNAgent, game: str, iterations: int, *, seed: int = 0, timing: bool = False):
    """Greedy rollout; returns ``(result_rows, chosen_rules)``."""
    if agent.config.layer_dims[0] != OBS_DIM:
        raise CheckpointError(
            f"checkpoint expects {agent.config.layer_dims[0]}-dim observations, env emits {OBS_DIM}")
    actions = tuple(agent.meta.get("actions", " ".join(RULE_KINDS)).split())
    if len(actions) != agent.n_actions:
        raise CheckpointError("checkpoint action set does not match its output layer")
    k = int(agent.meta.get("decision_interval", 1))
    env = RegretEnv(EnvConfig(game=game, max_steps=iterations, reward_kind="R1", actions=actions,
                              decision_interval=k))
    obs = env.reset()
    rows, rules = [], []
    start = time.perf_counter()
    while not env.done:
        out = env.step(agent.act(obs, greedy=True))
        obs = out.observation
        ms = (time.perf_counter() - start) * 1e3 if timing else 0.0
        rows.append(ResultRow(env.game.spec.name, "rlcfr", seed, out.info["iteration"],
                              out.info["exploitability"], ms))
        rules.append(out.info["rule"])
    return rows, rules


# --- comparison ------------------------------------------------------------

def compare(rows: Sequence[ResultRow]) -> list[tuple]:
    """Per (game, method, iteration) mean exploitability across seeds."""
    acc: dict[tuple, list[float]] = {}
    for r in rows:
        r.validate()
        acc.setdefault((r.game, r.method, r.iteration), []).append(r.exploitability)
    return [(g, m, it, float(np.mean(v)), len(v)) for (g, m, it), v in sorted(acc.items())]


def write_compare(table: Sequence[tuple], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COMPARE_HEADER)
        for g, m, it, mean, n in table:
            w.writerow([g, m, it, repr(mean), n])


def plot_compare(table: Sequence[tuple], out_dir) -> list[Path]:
    """One SVG line chart per game, log-scaled iteration axis."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "rlcfr"
    games = sorted({row[0] for row in table})
    paths = []
    for g in games:
        fig, ax = plt.subplots(figsize=(6, 4))
        methods = sorted({row[1] for row in table if row[0] == g})
        for m in methods:
            pts = [(it, mean) for gg, mm, it, mean, _ in table if gg == g and mm == m]
            xs, ys = zip(*pts)
            ax.plot(xs, ys, label=m)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("iteration")
        ax.set_ylabel("exploitability")
        ax.set_title(g)
        ax.legend()
        path = Path(out_dir) / f"compare_{g}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        paths.append(path)
    return paths


def config_fields(cls) -> list[str]:
    return [f.name for f in fields(cls)]
