"""Monte Carlo evaluation of policies.

Each trial draws every coin's true head probability from its prior, runs
one policy until no coin is affordable, and records the declared winner
and its true-probability regret after every step (including step 0).
Experiments aggregate many trials into per-step mean regret and standard
error.

Determinism: every (policy, trial, purpose) triple gets its own
counter-based Philox stream derived from the master seed, so results are
bit-identical regardless of execution order, parallelism, or which other
policies run alongside.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .beliefs import BetaParams, ProblemInstance
from .errors import NoAffordableCoinError
from .policies import FlipRecord, Policy, parse_policy

_PURPOSE_INSTANCE = 0
_PURPOSE_FLIPS = 1
_PURPOSE_POLICY = 2


def _policy_code(policy_id: str) -> int:
    digest = hashlib.sha256(policy_id.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def substream(
    seed: int, policy_id: str, trial: int, purpose: int
) -> np.random.Generator:
    """Independent Philox stream for one (policy, trial, purpose) triple."""
    ss = np.random.SeedSequence(
        entropy=[seed, _policy_code(policy_id), trial, purpose]
    )
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class TrialStreams:
    instance: np.random.Generator
    flips: np.random.Generator
    policy: np.random.Generator

    @classmethod
    def for_trial(cls, seed: int, policy_id: str, trial: int) -> "TrialStreams":
        return cls(
            instance=substream(seed, policy_id, trial, _PURPOSE_INSTANCE),
            flips=substream(seed, policy_id, trial, _PURPOSE_FLIPS),
            policy=substream(seed, policy_id, trial, _PURPOSE_POLICY),
        )


def sample_instance(
    priors: Sequence[BetaParams], rng: np.random.Generator
) -> np.ndarray:
    """Draw each coin's true head probability from its prior."""
    return np.array(
        [rng.beta(p.alpha_heads, p.alpha_tails) for p in priors], dtype=np.float64
    )


@dataclass
class TrialRecord:
    true_thetas: list[float]
    history: list[FlipRecord]
    winner_at_step: list[int]
    regret_at_step: list[float]


def _argmax_mean(heads: list[int], totals: list[int]) -> int:
    best = 0
    for i in range(1, len(heads)):
        if heads[i] * totals[best] > heads[best] * totals[i]:
            best = i
    return best + 1


def run_trial(
    policy: Policy, instance: ProblemInstance, streams: TrialStreams
) -> TrialRecord:
    """Run one trial of ``policy`` on a freshly sampled instance."""
    costs = instance.costs
    n = instance.n
    thetas = sample_instance(instance.priors, streams.instance)
    theta_best = float(np.max(thetas))
    min_cost = min(costs)
    max_flips = instance.budget // min_cost
    uniforms = streams.flips.random(max_flips) if max_flips else np.empty(0)

    heads = [p.alpha_heads for p in instance.priors]
    totals = [p.total for p in instance.priors]
    counts = [(p.alpha_heads, p.alpha_tails) for p in instance.priors]
    remaining = instance.budget

    policy.reset()
    history: list[FlipRecord] = []
    winner = _argmax_mean(heads, totals)
    winners = [winner]
    regrets = [theta_best - float(thetas[winner - 1])]

    t = 0
    while remaining >= min_cost:
        coin = policy.choose(counts, remaining, costs, streams.policy)
        if not 1 <= coin <= n or costs[coin - 1] > remaining:
            raise NoAffordableCoinError(
                f"{policy.policy_id} returned coin {coin}, which is not an "
                f"affordable coin at remaining budget {remaining}"
            )
        i = coin - 1
        is_heads = uniforms[t] < thetas[i]
        t += 1
        outcome = "heads" if is_heads else "tails"
        if is_heads:
            heads[i] += 1
        totals[i] += 1
        counts[i] = (heads[i], totals[i] - heads[i])
        remaining -= costs[i]
        policy.observe(coin, outcome)
        history.append(FlipRecord(t, coin, outcome))
        winner = _argmax_mean(heads, totals)
        winners.append(winner)
        regrets.append(theta_best - float(thetas[winner - 1]))

    return TrialRecord(
        true_thetas=[float(x) for x in thetas],
        history=history,
        winner_at_step=winners,
        regret_at_step=regrets,
    )


@dataclass
class ExperimentResult:
    """Per-policy, per-step aggregates over all trials."""

    policies: tuple[str, ...]
    trials: int
    steps: int
    mean_regret: dict[str, np.ndarray]
    stderr: dict[str, np.ndarray]
    mean_reward: dict[str, np.ndarray] | None = None

    def final_regret(self, policy_id: str) -> float:
        return float(self.mean_regret[policy_id][self.steps])

    def final_stderr(self, policy_id: str) -> float:
        return float(self.stderr[policy_id][self.steps])


def _trial_rows(
    policy_id: str,
    instance: ProblemInstance,
    seed: int,
    trial_lo: int,
    trial_hi: int,
    steps: int,
    want_reward: bool,
) -> tuple[np.ndarray, np.ndarray | None]:
    regret = np.empty((trial_hi - trial_lo, steps + 1))
    reward = np.empty((trial_hi - trial_lo, steps + 1)) if want_reward else None
    policy = parse_policy(policy_id)
    for trial in range(trial_lo, trial_hi):
        streams = TrialStreams.for_trial(seed, policy_id, trial)
        record = run_trial(policy, instance, streams)
        row = record.regret_at_step
        # budget leftovers smaller than every cost leave the winner fixed
        pad = steps + 1 - len(row)
        regret[trial - trial_lo, : len(row)] = row
        if pad:
            regret[trial - trial_lo, len(row) :] = row[-1]
        if reward is not None:
            acc = np.zeros(steps + 1)
            total = 0
            for rec in record.history:
                total += rec.outcome == "heads"
                acc[rec.time] = total
            acc[len(record.history) + 1 :] = total
            reward[trial - trial_lo] = acc
    return regret, reward


def _mean_and_stderr(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    trials = matrix.shape[0]
    mean = matrix.mean(axis=0)
    if trials > 1:
        std = matrix.std(axis=0, ddof=1)
        stderr = std / np.sqrt(trials)
    else:
        stderr = np.zeros(matrix.shape[1])
    return mean, stderr


def run_experiment(config, threads: int = 1) -> ExperimentResult:
    """Run every configured policy for the configured number of trials.

    ``config`` is an :class:`coinpick.config.ExperimentConfig`.  ``threads``
    only affects speed: trials are split into index blocks whose results
    are stitched back in trial order, so output is identical for any value.
    """
    instance = config.instance()
    trials = config.trials
    steps = instance.budget // min(instance.costs)
    if not config.policies:
        raise ValueError("experiment needs at least one policy")

    mean_regret: dict[str, np.ndarray] = {}
    stderr: dict[str, np.ndarray] = {}
    mean_reward: dict[str, np.ndarray] | None = (
        {} if config.report_reward else None
    )

    tasks = []
    if threads > 1:
        block = max(1, -(-trials // threads))
        for policy_id in config.policies:
            for lo in range(0, trials, block):
                tasks.append((policy_id, lo, min(trials, lo + block)))
    else:
        tasks = [(policy_id, 0, trials) for policy_id in config.policies]

    results: dict[tuple[str, int], tuple[np.ndarray, np.ndarray | None]] = {}
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = {
                pool.submit(
                    _trial_rows,
                    policy_id,
                    instance,
                    config.seed,
                    lo,
                    hi,
                    steps,
                    config.report_reward,
                ): (policy_id, lo)
                for policy_id, lo, hi in tasks
            }
            for fut, key in futures.items():
                results[key] = fut.result()
    else:
        for policy_id, lo, hi in tasks:
            results[(policy_id, lo)] = _trial_rows(
                policy_id,
                instance,
                config.seed,
                lo,
                hi,
                steps,
                config.report_reward,
            )

    for policy_id in config.policies:
        blocks = sorted(
            (lo, mats) for (pid, lo), mats in results.items() if pid == policy_id
        )
        regret = np.vstack([mats[0] for _, mats in blocks])
        mean_regret[policy_id], stderr[policy_id] = _mean_and_stderr(regret)
        if mean_reward is not None:
            reward = np.vstack([mats[1] for _, mats in blocks])
            mean_reward[policy_id] = reward.mean(axis=0)

    return ExperimentResult(
        policies=tuple(config.policies),
        trials=trials,
        steps=steps,
        mean_regret=mean_regret,
        stderr=stderr,
        mean_reward=mean_reward,
    )
