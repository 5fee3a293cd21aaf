"""Command line: ``rlcfr {baseline,build-curves,train,eval,compare}``.

Exit codes: 0 success, 2 usage error, 3 configuration error, 4 I/O error.
Settings can also come from a flat ``key = value`` file (``--config``) with
dotted keys such as ``dqn.learning_rate`` or ``env.measure_profile``;
command-line flags win over the file.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .agent import DqnConfig, DQNAgent
from .cfr import ALIASES, RULE_KINDS, get_rule
from .env import BASELINE_RULES, EnvConfig
from .experiments import (ACTION_SETS, TrainSettings, compare, curves_path, evaluate, load_curves_for,
                          plot_compare, read_results, run_baseline, run_build_curves, run_train,
                          write_compare, write_results)
from .games import PRESETS, ConfigurationError
from .nn import CheckpointError, TrainingError

log = logging.getLogger("rlcfr")

EXIT_OK, EXIT_TRAINING, EXIT_USAGE, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3, 4

# Named experiment setups; values are config keys.  Training makes one rule
# choice per 10 CFR iterations: a single iteration moves exploitability by too
# little for the Q-network to tell the rules apart.
_TRAIN = {"games": "kuhn,leduc", "reward": "R2", "steps": "20000", "env.decision_interval": "10"}
EXPERIMENT_PRESETS = {
    "main": {**_TRAIN, "seeds": "1,2,3"},
    "reward-r1": {**_TRAIN, "reward": "R1", "seeds": "1,2,3,4,5"},
    "reward-r2": {**_TRAIN, "seeds": "1,2,3,4,5"},
    "reward-r3": {**_TRAIN, "reward": "R3", "seeds": "1,2,3,4,5"},
    "actions-4": {**_TRAIN, "seeds": "1,2,3,4,5", "actions": "4"},
    "actions-6": {**_TRAIN, "seeds": "1,2,3,4,5", "actions": "6"},
    "actions-7": {**_TRAIN, "seeds": "1,2,3,4,5", "actions": "7"},
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    games: list[str] = field(default_factory=lambda: ["kuhn"])
    rule: str = "vanilla"
    iterations: int = 1000
    reward_kind: str = "R2"
    seeds: list[int] = field(default_factory=lambda: [0])
    out: Path = Path("runs")
    curves_dir: Path | None = None
    steps: int = 20000
    episode_steps: int = 1000
    n_actions: int = 7
    checkpoint_every: int = 1000
    log_spaced: bool = False
    timing: bool = False
    checkpoint: Path | None = None
    inputs: list[Path] = field(default_factory=list)
    svg: bool = True
    rules: list[str] = field(default_factory=lambda: list(BASELINE_RULES))
    repeats: int = 1
    dqn: dict[str, str] = field(default_factory=dict)
    env: dict[str, str] = field(default_factory=dict)


def read_config_file(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from exc
    out = {}
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{n}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k] = v
    return out


def _coerce(cls, raw: dict[str, str]) -> dict:
    types = {f.name: f for f in fields(cls)}
    defaults = cls()
    out = {}
    for k, v in raw.items():
        if k not in types:
            raise ConfigurationError(f"unknown {cls.__name__} key {k!r}")
        d = getattr(defaults, k)
        try:
            if isinstance(d, bool):
                out[k] = v.lower() in ("1", "true", "yes", "on")
            elif isinstance(d, tuple):
                out[k] = tuple(int(x) if x.strip().isdigit() else x.strip() for x in v.split(","))
            elif d is None:
                out[k] = v
            else:
                out[k] = type(d)(v)
        except ValueError as exc:
            raise ConfigurationError(f"bad value for {k}: {v!r}") from exc
    return out


def _split(v: str) -> list[str]:
    return [x.strip() for x in str(v).split(",") if x.strip()]


def resolve(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, preset, config file and flags (in increasing priority)."""
    raw: dict[str, str] = {}
    if getattr(args, "preset", None):
        raw.update(EXPERIMENT_PRESETS[args.preset])
    if args.config:
        raw.update(read_config_file(args.config))
    for item in args.set or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        raw[k.strip()] = v.strip()
    flag_keys = ("game", "games", "rule", "iters", "reward", "seed", "seeds", "out", "curves_dir", "steps",
                 "episode_steps", "actions", "checkpoint_every", "checkpoint", "repeats", "rules")
    for k in flag_keys:
        v = getattr(args, k, None)
        if v is not None:
            raw[k] = str(v)
    if getattr(args, "log_spaced", False):
        raw["log_spaced"] = "true"
    if getattr(args, "timing", False):
        raw["timing"] = "true"
    if getattr(args, "no_svg", False):
        raw["svg"] = "false"

    cfg = RunConfig(command=args.command)
    try:
        for k, v in raw.items():
            if k.startswith("dqn."):
                cfg.dqn[k[4:]] = v
            elif k.startswith("env."):
                cfg.env[k[4:]] = v
            elif k in ("game", "games"):
                cfg.games = _split(v)
            elif k == "rule":
                cfg.rule = v
            elif k in ("iters", "iterations"):
                cfg.iterations = int(v)
            elif k in ("reward", "reward_kind"):
                cfg.reward_kind = v.upper()
            elif k in ("seed", "seeds"):
                cfg.seeds = [int(s) for s in _split(v)]
            elif k == "out":
                cfg.out = Path(v)
            elif k == "curves_dir":
                cfg.curves_dir = Path(v)
            elif k == "steps":
                cfg.steps = int(v)
            elif k == "episode_steps":
                cfg.episode_steps = int(v)
            elif k == "actions":
                cfg.n_actions = int(v)
            elif k == "checkpoint_every":
                cfg.checkpoint_every = int(v)
            elif k == "checkpoint":
                cfg.checkpoint = Path(v)
            elif k == "repeats":
                cfg.repeats = int(v)
            elif k == "rules":
                cfg.rules = _split(v)
            elif k in ("log_spaced", "timing", "svg"):
                setattr(cfg, k, v.lower() in ("1", "true", "yes", "on"))
            else:
                raise ConfigurationError(f"unknown config key {k!r}")
    except ValueError as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(str(exc)) from exc
    for g in cfg.games:
        if g.lower() not in PRESETS:
            raise UsageError(f"unknown game {g!r}; valid names: {', '.join(PRESETS)}")
    cfg.games = [g.lower() for g in cfg.games]
    if cfg.n_actions not in ACTION_SETS:
        raise UsageError(f"--actions must be one of {sorted(ACTION_SETS)}")
    for r in [cfg.rule] + cfg.rules:
        try:
            get_rule(r)
        except ConfigurationError as exc:
            raise UsageError(str(exc)) from None
    return cfg


def _write_run_config(cfg: RunConfig, out: Path) -> None:
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, dict):
            lines += [f"{f.name}.{k} = {x}" for k, x in sorted(v.items())]
        elif isinstance(v, list):
            lines.append(f"{f.name} = {','.join(map(str, v))}")
        else:
            lines.append(f"{f.name} = {v}")
    (out / f"run_config_{cfg.command}.txt").write_text("\n".join(lines) + "\n")


def _train_settings(cfg: RunConfig) -> TrainSettings:
    try:
        dqn = DqnConfig(**_coerce(DqnConfig, cfg.dqn))
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc
    env_over = _coerce(EnvConfig, cfg.env)
    for k in ("game", "max_steps", "reward_kind", "actions", "baseline_curve_path"):
        if k in env_over:
            raise ConfigurationError(f"env.{k} is set through its own flag")
    return TrainSettings(games=tuple(cfg.games), reward_kind=cfg.reward_kind, steps=cfg.steps,
                         episode_steps=cfg.episode_steps, n_actions=cfg.n_actions,
                         checkpoint_every=cfg.checkpoint_every, dqn=dqn, env_overrides=env_over)


# --- commands ----------------------------------------------------------------

def cmd_baseline(cfg: RunConfig) -> list[Path]:
    rule = get_rule(cfg.rule)
    paths = []
    for g in cfg.games:
        for seed in cfg.seeds:
            rows = run_baseline(g, rule, cfg.iterations, seed=seed, log_spaced=cfg.log_spaced,
                                timing=cfg.timing)
            path = cfg.out / f"baseline_{g}_{rule.name}_seed{seed}.csv"
            write_results(rows, path)
            paths.append(path)
    return paths


def cmd_build_curves(cfg: RunConfig) -> list[Path]:
    d = cfg.curves_dir or cfg.out
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for g in cfg.games:
        path = curves_path(d, g)
        run_build_curves(g, cfg.iterations, path, rules=cfg.rules, repeats=cfg.repeats)
        paths.append(path)
    return paths


def cmd_train(cfg: RunConfig) -> list[Path]:
    settings = _train_settings(cfg)
    curves = load_curves_for(cfg.games, cfg.curves_dir or cfg.out, cfg.reward_kind, cfg.episode_steps)
    paths = []
    returns = []
    for seed in cfg.seeds:
        _, tlog = run_train(settings, seed, curves, cfg.out)
        returns.append(np.mean(tlog.episode_returns) if tlog.episode_returns else float("nan"))
        paths.append(cfg.out / f"agent_seed{seed}.ckpt")
    log.info("mean episode return over %d seeds: %.6f", len(cfg.seeds), float(np.nanmean(returns)))
    return paths


def cmd_eval(cfg: RunConfig) -> list[Path]:
    if cfg.checkpoint is None:
        raise UsageError("eval needs --checkpoint")
    agent = DQNAgent.load(cfg.checkpoint)
    paths = []
    for g in cfg.games:
        seed = cfg.seeds[0]
        rows, rules = evaluate(agent, g, cfg.iterations, seed=seed, timing=cfg.timing)
        path = cfg.out / f"eval_{g}_{cfg.checkpoint.stem}.csv"
        write_results(rows, path)
        (cfg.out / f"eval_{g}_{cfg.checkpoint.stem}_rules.csv").write_text(
            "iteration,rule\n" + "".join(f"{r.iteration},{k}\n" for r, k in zip(rows, rules)))
        paths.append(path)
    return paths


def cmd_compare(cfg: RunConfig) -> list[Path]:
    missing = [str(p) for p in cfg.inputs if not Path(p).exists()]
    if missing:
        raise FileNotFoundError("missing result files: " + ", ".join(missing))
    if not cfg.inputs:
        raise UsageError("compare needs at least one input CSV")
    rows = []
    for p in cfg.inputs:
        try:
            rows += read_results(p)
        except ValueError as exc:
            raise ConfigurationError(f"{p}: {exc}") from exc
    table = compare(rows)
    path = cfg.out / "compare.csv"
    write_compare(table, path)
    paths = [path]
    if cfg.svg:
        paths += plot_compare(table, cfg.out)
    return paths


COMMANDS = {"baseline": cmd_baseline, "build-curves": cmd_build_curves, "train": cmd_train,
            "eval": cmd_eval, "compare": cmd_compare}


def build_parser() -> argparse.ArgumentParser:
    rule_names = ", ".join(list(RULE_KINDS) + list(ALIASES))
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value settings file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one setting")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", "--seeds", dest="seeds", help="seed or comma-separated seeds")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="rlcfr", description="CFR update-rule selection workbench")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("baseline", parents=[common], help="fixed-rule solve")
    b.add_argument("--game")
    b.add_argument("--rule", help=f"one of: {rule_names}")
    b.add_argument("--iters", type=int)
    b.add_argument("--log-spaced", action="store_true", help="log-spaced logging above 1000 iterations")
    b.add_argument("--timing", action="store_true", help="record wall time (rows stop being reproducible)")

    c = sub.add_parser("build-curves", parents=[common], help="baseline minimum curves for rewards R2/R3")
    c.add_argument("--game", "--games", dest="games")
    c.add_argument("--iters", type=int)
    c.add_argument("--rules", help="comma-separated baseline rules")
    c.add_argument("--repeats", type=int)
    c.add_argument("--curves-dir", dest="curves_dir")

    t = sub.add_parser("train", parents=[common], help="train the DQN rule selector")
    t.add_argument("--games", "--game", dest="games")
    t.add_argument("--reward", help="R1, R2 or R3")
    t.add_argument("--steps", type=int)
    t.add_argument("--episode-steps", dest="episode_steps", type=int)
    t.add_argument("--actions", type=int, help="4, 6 or 7")
    t.add_argument("--checkpoint-every", dest="checkpoint_every", type=int)
    t.add_argument("--curves-dir", dest="curves_dir")
    t.add_argument("--preset", choices=sorted(EXPERIMENT_PRESETS))

    e = sub.add_parser("eval", parents=[common], help="greedy rollout of a trained agent")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--game", "--games", dest="games")
    e.add_argument("--iters", type=int)
    e.add_argument("--timing", action="store_true")

    m = sub.add_parser("compare", parents=[common], help="merge result CSVs and plot")
    m.add_argument("inputs", nargs="+")
    m.add_argument("--no-svg", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args)
        if args.command == "compare":
            cfg.inputs = [Path(p) for p in args.inputs]
        cfg.out.mkdir(parents=True, exist_ok=True)
        _write_run_config(cfg, cfg.out)
        for path in COMMANDS[args.command](cfg):
            print(path)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigurationError, CheckpointError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except TrainingError as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
