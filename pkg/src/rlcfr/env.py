"""The CFR solve as an MDP: actions are update rules, rewards track exploitability."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .cfr import RULE_KINDS, Solver, UpdateRule, get_rule
from .games import ConfigurationError, Game, build_game
from .metrics import exploitability
from .cfr import StrategyProfile

OBS_STATS = 6
WINDOW = 3
OBS_DIM = OBS_STATS * WINDOW
BASELINE_RULES = ("a5", "a2", "a3", "a4")  # vanilla CFR, LCFR, DCFR, ECFR
CURVES_HEADER = ("game", "rule", "iteration", "exploitability")
REWARD_KINDS = ("R1", "R2", "R3")


class DegenerateBaselineError(ZeroDivisionError):
    pass


# --- rewards ---------------------------------------------------------------

def reward_r1(e_prev: float, e_curr: float) -> float:
    return 1.0 if e_prev - e_curr > 0 else -1.0


def reward_r2(e_baseline_min: float, e_curr: float) -> float:
    return e_baseline_min - e_curr


def reward_r3(e_baseline_min: float, e_curr: float, slope_prev: float, slope_curr: float) -> float:
    """Relative gap to the baseline, with a slope bonus when behind it."""
    if e_baseline_min == 0:
        raise DegenerateBaselineError("baseline exploitability is zero")
    gap = e_baseline_min - e_curr
    if gap >= 0:
        return gap / e_baseline_min
    if slope_curr - slope_prev > 0:
        return 1.0 / (slope_curr - slope_prev)
    return gap / e_baseline_min


def episode_return(rewards: Sequence[float], discount: float) -> float:
    if not 0 < discount <= 1:
        raise ValueError("discount must be in (0, 1]")
    r = np.asarray(rewards, dtype=float)
    return float(np.sum(discount ** np.arange(len(r)) * r))


# --- baseline curves -------------------------------------------------------

def fixed_rule_trace(game: Game, rule, iterations: int, measure: str = "average") -> np.ndarray:
    """Exploitability after each of ``iterations`` iterations of one rule."""
    rule = get_rule(rule)
    solver = Solver(game)
    out = np.empty(iterations)
    for i in range(iterations):
        solver.step(rule)
        prof = solver.average_profile() if measure == "average" else solver.current_profile(rule)
        out[i] = exploitability(game, prof).exploitability
    return out


@dataclass
class BaselineCurves:
    game: str
    curves: dict[str, np.ndarray]
    min: np.ndarray = field(init=False)

    def __post_init__(self):
        arrs = list(self.curves.values())
        if not arrs:
            raise ConfigurationError("no baseline curves")
        n = min(len(a) for a in arrs)
        self.min = np.min(np.stack([a[:n] for a in arrs]), axis=0)

    @property
    def T(self) -> int:
        return len(self.min)

    def at(self, t: int) -> float:
        """Baseline minimum after ``t`` iterations (1-based)."""
        if not 1 <= t <= self.T:
            raise IndexError(f"iteration {t} outside baseline coverage [1, {self.T}]")
        return float(self.min[t - 1])

    def covers(self, T: int) -> bool:
        return self.T >= T

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CURVES_HEADER)
            for name, arr in list(self.curves.items()) + [("min", self.min)]:
                for i, e in enumerate(arr, start=1):
                    w.writerow([self.game, name, i, repr(float(e))])

    @classmethod
    def read_csv(cls, path, game: str | None = None) -> "BaselineCurves":
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"baseline curves file {path} not found; run build-curves first")
        rows: dict[str, dict[int, float]] = {}
        names = set()
        with open(path, newline="") as fh:
            rd = csv.reader(fh)
            header = next(rd, None)
            if tuple(header or ()) != CURVES_HEADER:
                raise ConfigurationError(f"{path}: bad header {header}")
            for rec in rd:
                g, rule, it, e = rec
                if game is not None and g != game:
                    continue
                names.add(g)
                rows.setdefault(rule, {})[int(it)] = float(e)
        if not rows:
            raise ConfigurationError(f"{path}: no curves for game {game!r}")
        if len(names) > 1:
            raise ConfigurationError(f"{path}: several games present, pass game=")
        curves = {}
        for rule, pts in rows.items():
            n = max(pts)
            if sorted(pts) != list(range(1, n + 1)):
                raise ConfigurationError(f"{path}: rule {rule} has gaps in its iterations")
            curves[rule] = np.array([pts[i] for i in range(1, n + 1)])
        stored_min = curves.pop("min", None)
        out = cls(names.pop(), curves)
        if stored_min is not None and not np.array_equal(stored_min[: out.T], out.min):
            raise ConfigurationError(f"{path}: stored min row set disagrees with the rule curves")
        return out


def build_baseline_curves(game: Game | str, T: int, rules: Sequence[str] = BASELINE_RULES,
                          repeats: int = 1, path=None, measure: str = "average") -> BaselineCurves:
    """Run each fixed rule for ``T`` iterations and keep the pointwise minimum."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if isinstance(game, str):
        game = build_game(game)
    curves = {}
    for r in rules:
        rule = get_rule(r)
        first = fixed_rule_trace(game, rule, T, measure)
        for _ in range(repeats - 1):
            if not np.array_equal(first, fixed_rule_trace(game, rule, T, measure)):
                raise RuntimeError(f"baseline {rule.kind} is not reproducible")
        curves[rule.kind] = first
    bc = BaselineCurves(game.spec.name, curves)
    if path is not None:
        bc.write_csv(path)
    return bc


# --- observation -----------------------------------------------------------

def _symlog(x):
    return np.sign(x) * np.log1p(np.abs(x))


def regret_snapshot(solver: Solver, squash: bool = True) -> np.ndarray:
    """Six summary statistics of the solver's regrets after its latest iteration."""
    table = solver.table
    mask = table.mask
    cum = table.regret[mask]
    inst_parts = []
    for rep in solver.last_reports:
        m = np.arange(rep.regret.shape[1])[None, :] < table.n_actions[rep.rows][:, None]
        inst_parts.append(rep.regret[m])
    inst = np.concatenate(inst_parts) if inst_parts else np.zeros(1)
    stats = np.array([
        cum.mean(),
        cum.std(),
        max(cum.max(), 0.0),
        cum.min(),
        np.maximum(inst, 0.0).mean(),
    ])
    if squash:
        stats = _symlog(stats)
    return np.append(stats, math.log1p(table.t))


@dataclass
class EnvConfig:
    game: str = "kuhn"
    max_steps: int = 1000
    reward_kind: str = "R2"
    decision_interval: int = 1
    measure_profile: str = "average"
    baseline_curve_path: str | None = None
    discount: float = 0.99
    actions: tuple[str, ...] = RULE_KINDS
    random_init: bool = False
    squash_observation: bool = True
    seed: int = 0

    def __post_init__(self):
        self.reward_kind = self.reward_kind.upper()
        if self.reward_kind not in REWARD_KINDS:
            raise ConfigurationError(f"unknown reward kind {self.reward_kind!r}")
        if self.max_steps < 1 or self.decision_interval < 1:
            raise ConfigurationError("max_steps and decision_interval must be >= 1")
        if self.measure_profile not in ("average", "current"):
            raise ConfigurationError(f"unknown profile measure {self.measure_profile!r}")
        self.actions = tuple(get_rule(a).kind for a in self.actions)


@dataclass
class StepOutcome:
    observation: np.ndarray
    reward: float
    done: bool
    info: dict


class RegretEnv:
    """One solve per episode; ``step(i)`` applies ``config.actions[i]`` for one decision interval."""

    def __init__(self, config: EnvConfig, baseline: BaselineCurves | None = None):
        self.config = config
        self.game = build_game(config.game)
        self.baseline = baseline
        if self.baseline is None and config.baseline_curve_path is not None:
            self.baseline = BaselineCurves.read_csv(config.baseline_curve_path, self.game.spec.name)
        self._needs_baseline = config.reward_kind in ("R2", "R3")
        self._e0 = exploitability(self.game, StrategyProfile.uniform(self.game)).exploitability
        self._rng = np.random.default_rng(config.seed)
        self.solver: Solver | None = None
        self.done = True

    @property
    def n_actions(self) -> int:
        return len(self.config.actions)

    @property
    def t(self) -> int:
        return self.solver.t if self.solver else 0

    def reset(self) -> np.ndarray:
        cfg = self.config
        if self._needs_baseline:
            if self.baseline is None:
                raise ConfigurationError(
                    f"reward {cfg.reward_kind} needs baseline curves for {cfg.game}; run build-curves first")
            if not self.baseline.covers(cfg.max_steps):
                raise ConfigurationError(
                    f"baseline curves cover {self.baseline.T} iterations, need {cfg.max_steps}")
        self.solver = Solver(self.game)
        if cfg.random_init:
            self.window = [self._rng.uniform(-1, 1, OBS_STATS) for _ in range(WINDOW)]
            for w in self.window:
                w[-1] = 0.0
        else:
            self.window = [np.zeros(OBS_STATS) for _ in range(WINDOW)]
        self.e_prev = self._e0
        self.slope_prev = 0.0
        self.done = False
        self.trace: list[float] = []
        self.rules: list[str] = []
        return self.observation()

    def observation(self) -> np.ndarray:
        return np.concatenate(self.window)

    def profile(self) -> StrategyProfile:
        if self.config.measure_profile == "average":
            return self.solver.average_profile()
        return self.solver.current_profile()

    def step(self, action: int) -> StepOutcome:
        if self.done:
            raise RuntimeError("step() called on a finished episode; call reset()")
        cfg = self.config
        if not 0 <= action < self.n_actions:
            raise ValueError(f"action {action} out of range [0, {self.n_actions})")
        rule = get_rule(cfg.actions[action])
        t_before = self.solver.t
        n = min(cfg.decision_interval, cfg.max_steps - t_before)
        for _ in range(n):
            self.solver.step(rule)
        t = self.solver.t
        e = exploitability(self.game, self.profile(), t).exploitability
        slope = (self.e_prev - e) / (t - t_before)
        reward = self._reward(e, t, slope)
        self.window = self.window[1:] + [regret_snapshot(self.solver, cfg.squash_observation)]
        self.e_prev, self.slope_prev = e, slope
        self.trace.append(e)
        self.rules.append(rule.kind)
        self.done = t >= cfg.max_steps
        return StepOutcome(self.observation(), reward, self.done,
                           {"exploitability": e, "rule": rule.kind, "iteration": t})

    def _reward(self, e: float, t: int, slope: float) -> float:
        kind = self.config.reward_kind
        if kind == "R1":
            return reward_r1(self.e_prev, e)
        base = self.baseline.at(t)
        if kind == "R2":
            return reward_r2(base, e)
        return reward_r3(base, e, self.slope_prev, slope)


def reset(config: EnvConfig, baseline: BaselineCurves | None = None) -> tuple[RegretEnv, np.ndarray]:
    env = RegretEnv(config, baseline)
    return env, env.reset()


def run_policy(env: RegretEnv, policy) -> list[StepOutcome]:
    """Play one full episode; ``policy(obs) -> action index``."""
    obs = env.reset()
    out = []
    while not env.done:
        o = env.step(policy(obs))
        out.append(o)
        obs = o.observation
    return out
