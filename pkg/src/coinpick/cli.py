"""Command-line front end.

Subcommands::

    coinpick simulate <config>                     CSV of per-step regrets
    coinpick optimal <config>                      optimal tree + value/regret
    coinpick closed-form --n <n> --a <a>           equal-allocation regret
    coinpick gittins-table --max-sum <m> --s <s>   CSV of Gittins indices
    coinpick eval-alloc <config> --alloc <a1,...>  value of one allocation

Shared flags: ``--seed`` (overrides the config seed), ``--gittins-cache``
(CSV cache of computed indices), ``--threads`` (speed only; output is
byte-identical for any value).  Exit codes: 0 success, 2 bad config or
arguments, 3 instance exceeds the solver caps.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import gittins as _gittins
from .allocation import Allocation, evaluate_allocation, uniform_equal_allocation_regret
from .beliefs import expected_theta_max
from .config import ExperimentConfig, parse_config_file
from .errors import (
    BudgetExceededError,
    ConfigError,
    InstanceTooLargeError,
    NoAffordableCoinError,
)
from .harness import ExperimentResult, run_experiment
from .solver import Flip, serialize_tree, solve_optimal


def fmt9(x: float) -> str:
    """9 significant digits; scientific with lowercase e below 1e-4."""
    x = float(x)
    if x != 0.0 and abs(x) < 1e-4:
        return f"{x:.8e}"
    return f"{x:.9g}"


def emit_simulation_csv(result: ExperimentResult, config: ExperimentConfig, out) -> None:
    reward = result.mean_reward
    header = "policy,t,trials,mean_regret,stderr"
    if reward is not None:
        header += ",mean_reward"
    out.write(header + "\n")
    steps = (
        range(result.steps + 1) if config.record_every_step else [result.steps]
    )
    for policy_id in result.policies:
        means = result.mean_regret[policy_id]
        errs = result.stderr[policy_id]
        for t in steps:
            row = (
                f"{policy_id},{t},{result.trials},"
                f"{fmt9(means[t])},{fmt9(errs[t])}"
            )
            if reward is not None:
                row += f",{fmt9(reward[policy_id][t])}"
            out.write(row + "\n")


def parse_simulation_csv(text: str) -> ExperimentResult:
    """Read ``emit_simulation_csv`` output back into an ExperimentResult."""
    lines = [line for line in text.splitlines() if line]
    header = lines[0].split(",")
    has_reward = header[-1] == "mean_reward"
    policies: list[str] = []
    rows: dict[str, list[tuple[int, float, float, float | None]]] = {}
    trials = 0
    for line in lines[1:]:
        parts = line.split(",")
        policy_id, t, trials = parts[0], int(parts[1]), int(parts[2])
        if policy_id not in rows:
            policies.append(policy_id)
            rows[policy_id] = []
        rows[policy_id].append(
            (
                t,
                float(parts[3]),
                float(parts[4]),
                float(parts[5]) if has_reward else None,
            )
        )
    steps = max(t for per in rows.values() for t, *_ in per)
    mean_regret = {}
    stderr = {}
    mean_reward = {} if has_reward else None
    for policy_id, per in rows.items():
        means = np.zeros(steps + 1)
        errs = np.zeros(steps + 1)
        rewards = np.zeros(steps + 1)
        for t, m, e, r in per:
            means[t], errs[t] = m, e
            if r is not None:
                rewards[t] = r
        mean_regret[policy_id] = means
        stderr[policy_id] = errs
        if mean_reward is not None:
            mean_reward[policy_id] = rewards
    return ExperimentResult(
        policies=tuple(policies),
        trials=trials,
        steps=steps,
        mean_regret=mean_regret,
        stderr=stderr,
        mean_reward=mean_reward,
    )


def _apply_seed(config: ExperimentConfig, seed: int | None) -> ExperimentConfig:
    if seed is None:
        return config
    if not 0 <= seed < 2**64:
        raise ConfigError("seed", "must fit in 64 bits")
    return replace(config, seed=seed)


def cmd_simulate(args) -> int:
    config = _apply_seed(parse_config_file(args.config), args.seed)
    if not config.policies:
        raise ConfigError("policies", "simulate needs at least one policy")
    if args.gittins_cache:
        _gittins.load_cache(args.gittins_cache)
    result = run_experiment(config, threads=args.threads)
    if args.gittins_cache:
        _gittins.save_cache(args.gittins_cache)
    emit_simulation_csv(result, config, sys.stdout)
    return 0


def cmd_optimal(args) -> int:
    config = parse_config_file(args.config)
    instance = config.instance()
    result = solve_optimal(instance.initial_state(), instance.costs)
    print(serialize_tree(result.tree))
    if isinstance(result.tree, Flip):
        print(f"first action: coin {result.tree.coin}")
    else:
        print("first action: stop")
    print(f"value={fmt9(result.value)} regret={fmt9(result.regret)}")
    return 0


def cmd_closed_form(args) -> int:
    if args.n < 1:
        raise ConfigError("n", "must be >= 1")
    if args.a < 0:
        raise ConfigError("a", "must be >= 0")
    print(fmt9(uniform_equal_allocation_regret(args.n, args.a)))
    return 0


def cmd_gittins_table(args) -> int:
    if args.max_sum < 2:
        raise ConfigError("max-sum", "must be >= 2")
    if args.s < 1:
        raise ConfigError("s", "must be >= 1")
    if args.gittins_cache:
        _gittins.load_cache(args.gittins_cache)
    print("alpha1,alpha2,index")
    for a1, a2, value in _gittins.index_table(args.max_sum, args.s):
        print(f"{a1},{a2},{fmt9(value)}")
    if args.gittins_cache:
        _gittins.save_cache(args.gittins_cache)
    return 0


def cmd_eval_alloc(args) -> int:
    config = parse_config_file(args.config)
    instance = config.instance()
    try:
        flips = tuple(int(part) for part in args.alloc.split(","))
    except ValueError:
        raise ConfigError("alloc", f"expected comma-separated integers, got {args.alloc!r}")
    if len(flips) != instance.n:
        raise ConfigError(
            "alloc", f"expected {instance.n} entries, got {len(flips)}"
        )
    state = instance.initial_state()
    value = evaluate_allocation(state, Allocation(flips), instance.costs)
    regret = max(0.0, expected_theta_max(state) - value)
    print(f"value={fmt9(value)} regret={fmt9(regret)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override config seed")
    common.add_argument(
        "--gittins-cache", default=None, help="CSV cache file for Gittins indices"
    )
    common.add_argument(
        "--threads", type=int, default=1, help="worker processes (speed only)"
    )

    parser = argparse.ArgumentParser(
        prog="coinpick", description="Budgeted best-coin selection toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="run a Monte Carlo experiment")
    p.add_argument("config")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimal", parents=[common], help="solve a small instance exactly")
    p.add_argument("config")
    p.set_defaults(func=cmd_optimal)

    p = sub.add_parser(
        "closed-form", parents=[common], help="uniform equal-allocation regret"
    )
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--a", type=int, required=True)
    p.set_defaults(func=cmd_closed_form)

    p = sub.add_parser(
        "gittins-table", parents=[common], help="tabulate Gittins indices"
    )
    p.add_argument("--max-sum", type=int, required=True, dest="max_sum")
    p.add_argument("--s", type=int, required=True)
    p.set_defaults(func=cmd_gittins_table)

    p = sub.add_parser(
        "eval-alloc", parents=[common], help="evaluate a fixed allocation"
    )
    p.add_argument("config")
    p.add_argument("--alloc", required=True)
    p.set_defaults(func=cmd_eval_alloc)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InstanceTooLargeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (BudgetExceededError, NoAffordableCoinError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
