"""Flip-selection policies.

Each policy maps (current beliefs, remaining budget, costs) to the next
coin to flip.  The ``choose_*`` functions are the pure decision rules;
the :class:`Policy` classes wrap them with the little state some rules
carry (a round-robin clock, a biased-robin cursor) and with affordability
handling for non-unit costs: cursor policies skip coins they cannot
afford, score policies restrict the argmax to affordable coins.

All argmax ties break to the lowest coin index.  Policy identifiers, as
accepted by :func:`parse_policy`:

    round-robin | random | greedy:<k> | biased-robin | scla
    | interval:<gamma> | gittins
"""

from __future__ import annotations

import operator
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import gittins as _gittins
from . import solver as _solver
from .beliefs import BeliefState, BetaParams, beta_mean, beta_std
from .errors import NoAffordableCoinError

DEFAULT_GAMMA = 1.96
GREEDY_MAX_K = 5

Counts = Sequence[tuple[int, int]]


@dataclass(frozen=True)
class FlipRecord:
    """One executed flip: 1-based time, 1-based coin, 'heads' or 'tails'."""

    time: int
    coin: int
    outcome: str


def _affordable(costs: Sequence[int], remaining: int) -> list[int]:
    coins = [i + 1 for i, c in enumerate(costs) if c <= remaining]
    if not coins:
        raise NoAffordableCoinError(
            f"no coin costs at most the remaining budget {remaining}"
        )
    return coins


def choose_round_robin(t: int, n: int) -> int:
    """Coin ((t - 1) mod n) + 1 at time t = 1, 2, ..."""
    t = operator.index(t)
    n = operator.index(n)
    if t < 1 or n < 1:
        raise ValueError("t and n must be >= 1")
    return ((t - 1) % n) + 1


def choose_random(
    n: int, rng: np.random.Generator, affordable: Sequence[int] | None = None
) -> int:
    """A coin drawn uniformly from ``affordable`` (default: all of 1..n)."""
    pool = list(affordable) if affordable is not None else list(range(1, n + 1))
    if not pool:
        raise NoAffordableCoinError("no affordable coin to draw from")
    return pool[int(rng.integers(len(pool)))]


def choose_biased_robin(cursor: tuple[int, str] | None, n: int) -> int:
    """Stay on the last coin after heads, advance (wrapping) after tails."""
    n = operator.index(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    if cursor is None:
        return 1
    coin, outcome = cursor
    if outcome == "heads":
        return coin
    return coin % n + 1


def choose_greedy_k(
    state: BeliefState, k: int, costs: Sequence[int] | None = None
) -> int:
    """Root action of the optimal strategy for the smaller budget min(k, remaining).

    When that strategy stops immediately (no flip strictly improves the
    expected best mean), falls back to the lowest-index affordable coin.
    """
    k = operator.index(k)
    if k < 1:
        raise ValueError("k must be >= 1")
    cost_tuple = tuple(costs) if costs is not None else (1,) * state.n
    remaining = state.remaining_budget
    coin = _solver.first_action(
        state,
        cost_tuple,
        budget=min(k, remaining),
        max_coins=None,
        max_budget=None,
    )
    if coin is not None:
        return coin
    return _affordable(cost_tuple, remaining)[0]


def _scla_group_values(
    a: np.ndarray,
    b: np.ndarray,
    m: int,
    c_num: np.ndarray,
    c_den: np.ndarray,
) -> np.ndarray:
    """E[max(posterior mean after m flips, c)] per coin, c = c_num/c_den exact.

    Writes E[max(M, c)] as mean + E[(c - M)+] when mean >= c and as
    c + E[(M - c)+] otherwise, so that a coin whose flips can never move
    the best mean scores the current best mean bit-exactly (empty sum).
    """
    s = a + b
    denom = s + m
    h = np.arange(m + 1, dtype=np.int64)
    if m > 0:
        j = np.arange(m, dtype=np.int64)
        pmf0 = np.prod((b[:, None] + j) / (s[:, None] + j), axis=1)
        ratios = ((m - h[:-1]) / (h[:-1] + 1.0))[None, :] * (
            (a[:, None] + h[:-1]) / (b[:, None] + (m - h[:-1] - 1.0))
        )
        pmf = np.empty((a.shape[0], m + 1))
        pmf[:, 0] = pmf0
        np.cumprod(ratios, axis=1, out=ratios)
        pmf[:, 1:] = pmf0[:, None] * ratios
    else:
        pmf = np.ones((a.shape[0], 1))
    means = (a[:, None] + h) / denom[:, None].astype(np.float64)
    lhs = (a[:, None] + h) * c_den[:, None]
    rhs = c_num[:, None] * denom[:, None]
    c_float = c_num / c_den.astype(np.float64)
    mu_float = a / s.astype(np.float64)
    gain_below = np.where(lhs < rhs, pmf * (c_float[:, None] - means), 0.0).sum(
        axis=1
    )
    gain_above = np.where(lhs > rhs, pmf * (means - c_float[:, None]), 0.0).sum(
        axis=1
    )
    mu_ge_c = a * c_den >= c_num * s
    return np.where(mu_ge_c, mu_float + gain_below, c_float + gain_above)


def _scla_scores(
    counts: Counts, remaining: int, costs: Sequence[int]
) -> np.ndarray:
    """Single-coin look-ahead value per coin; -inf where unaffordable."""
    n = len(counts)
    a = np.fromiter((c[0] for c in counts), dtype=np.int64, count=n)
    b = np.fromiter((c[1] for c in counts), dtype=np.int64, count=n)
    s = a + b
    # leave-one-out best mean, exactly: track best and runner-up by
    # cross-multiplied comparison
    best_i = 0
    for i in range(1, n):
        if a[i] * s[best_i] > a[best_i] * s[i]:
            best_i = i
    second_num, second_den = 0, 1
    for i in range(n):
        if i != best_i and a[i] * second_den > second_num * s[i]:
            second_num, second_den = int(a[i]), int(s[i])
    c_num = np.full(n, int(a[best_i]), dtype=np.int64)
    c_den = np.full(n, int(s[best_i]), dtype=np.int64)
    c_num[best_i] = second_num
    c_den[best_i] = second_den
    m = np.fromiter((remaining // c for c in costs), dtype=np.int64, count=n)
    scores = np.full(n, -np.inf)
    for flips in np.unique(m):
        if flips < 1:
            continue
        group = np.nonzero(m == flips)[0]
        scores[group] = _scla_group_values(
            a[group], b[group], int(flips), c_num[group], c_den[group]
        )
    return scores


def choose_scla(
    state: BeliefState,
    remaining_budget: int | None = None,
    costs: Sequence[int] | None = None,
) -> int:
    """Coin whose all-remaining-budget single-coin allocation maximizes the
    expected best mean; floor(budget / cost) flips per candidate."""
    counts = [(p.alpha_heads, p.alpha_tails) for p in state.posteriors]
    remaining = (
        state.remaining_budget if remaining_budget is None else remaining_budget
    )
    cost_tuple = tuple(costs) if costs is not None else (1,) * state.n
    _affordable(cost_tuple, remaining)
    scores = _scla_scores(counts, remaining, cost_tuple)
    return int(np.argmax(scores)) + 1


def choose_interval_estimation(
    state: BeliefState, gamma: float = DEFAULT_GAMMA
) -> int:
    """Coin maximizing mean + gamma * std of its posterior."""
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    best, best_score = 1, -np.inf
    for i, p in enumerate(state.posteriors, start=1):
        score = beta_mean(p) + gamma * beta_std(p)
        if score > best_score:
            best, best_score = i, score
    return best


def choose_gittins(state: BeliefState, remaining_budget: int) -> int:
    """Coin with the largest Gittins index at discount 1 - 1/remaining_budget."""
    s = operator.index(remaining_budget)
    if s < 1:
        raise ValueError("remaining budget must be >= 1")
    best, best_score = 1, -np.inf
    for i, p in enumerate(state.posteriors, start=1):
        score = _gittins.gittins_index_for_budget(p, s)
        if score > best_score:
            best, best_score = i, score
    return best


class Policy:
    """Per-trial policy instance; `choose` must return an affordable coin."""

    policy_id: str = ""

    def reset(self) -> None:
        pass

    def choose(
        self,
        counts: Counts,
        remaining: int,
        costs: Sequence[int],
        rng: np.random.Generator,
    ) -> int:
        raise NotImplementedError

    def observe(self, coin: int, outcome: str) -> None:
        pass


def _as_state(counts: Counts, remaining: int) -> BeliefState:
    return BeliefState(tuple(BetaParams(h, t) for h, t in counts), remaining)


class RoundRobinPolicy(Policy):
    policy_id = "round-robin"

    def __init__(self) -> None:
        self._t = 1

    def reset(self) -> None:
        self._t = 1

    def choose(self, counts, remaining, costs, rng) -> int:
        n = len(counts)
        t = self._t
        for _ in range(n):
            coin = choose_round_robin(t, n)
            if costs[coin - 1] <= remaining:
                self._t = t
                return coin
            t += 1
        raise NoAffordableCoinError("round-robin found no affordable coin")

    def observe(self, coin, outcome) -> None:
        self._t += 1


class RandomPolicy(Policy):
    policy_id = "random"

    def choose(self, counts, remaining, costs, rng) -> int:
        return choose_random(len(counts), rng, _affordable(costs, remaining))


class BiasedRobinPolicy(Policy):
    policy_id = "biased-robin"

    def __init__(self) -> None:
        self._cursor: tuple[int, str] | None = None

    def reset(self) -> None:
        self._cursor = None

    def choose(self, counts, remaining, costs, rng) -> int:
        n = len(counts)
        coin = choose_biased_robin(self._cursor, n)
        for _ in range(n):
            if costs[coin - 1] <= remaining:
                return coin
            coin = coin % n + 1
        raise NoAffordableCoinError("biased-robin found no affordable coin")

    def observe(self, coin, outcome) -> None:
        self._cursor = (coin, outcome)


class GreedyPolicy(Policy):
    def __init__(self, k: int = 1) -> None:
        k = operator.index(k)
        if not 1 <= k <= GREEDY_MAX_K:
            raise ValueError(f"greedy k must lie in 1..{GREEDY_MAX_K}")
        self.k = k
        self.policy_id = f"greedy:{k}"

    def choose(self, counts, remaining, costs, rng) -> int:
        return choose_greedy_k(_as_state(counts, remaining), self.k, costs)


class SCLAPolicy(Policy):
    policy_id = "scla"

    def choose(self, counts, remaining, costs, rng) -> int:
        _affordable(costs, remaining)
        scores = _scla_scores(counts, remaining, costs)
        return int(np.argmax(scores)) + 1


class IntervalEstimationPolicy(Policy):
    def __init__(self, gamma: float = DEFAULT_GAMMA) -> None:
        if gamma < 0:
            raise ValueError("gamma must be >= 0")
        self.gamma = gamma
        self.policy_id = f"interval:{gamma:g}"

    def choose(self, counts, remaining, costs, rng) -> int:
        best, best_score = None, -np.inf
        for i, (h, t) in enumerate(counts, start=1):
            if costs[i - 1] > remaining:
                continue
            p = BetaParams(h, t)
            score = beta_mean(p) + self.gamma * beta_std(p)
            if score > best_score:
                best, best_score = i, score
        if best is None:
            raise NoAffordableCoinError("interval estimation found no affordable coin")
        return best


class GittinsPolicy(Policy):
    policy_id = "gittins"

    def __init__(self, tolerance: float = _gittins.DEFAULT_TOLERANCE) -> None:
        self.tolerance = tolerance

    def choose(self, counts, remaining, costs, rng) -> int:
        best, best_score = None, -np.inf
        for i, (h, t) in enumerate(counts, start=1):
            if costs[i - 1] > remaining:
                continue
            score = _gittins.index_for_budget_counts(
                h, t, remaining, self.tolerance
            )
            if score > best_score:
                best, best_score = i, score
        if best is None:
            raise NoAffordableCoinError("gittins found no affordable coin")
        return best


def parse_policy(text: str) -> Policy:
    """Build a fresh policy from its identifier string."""
    name, sep, arg = text.partition(":")
    name = name.strip()
    arg = arg.strip()
    if name == "round-robin" and not sep:
        return RoundRobinPolicy()
    if name == "random" and not sep:
        return RandomPolicy()
    if name == "biased-robin" and not sep:
        return BiasedRobinPolicy()
    if name == "scla" and not sep:
        return SCLAPolicy()
    if name == "gittins" and not sep:
        return GittinsPolicy()
    if name == "greedy":
        try:
            k = int(arg) if sep else 1
        except ValueError:
            raise ValueError(f"greedy parameter must be an integer: {text!r}")
        return GreedyPolicy(k)
    if name == "interval":
        try:
            gamma = float(arg) if sep else DEFAULT_GAMMA
        except ValueError:
            raise ValueError(f"interval parameter must be a number: {text!r}")
        return IntervalEstimationPolicy(gamma)
    raise ValueError(f"unknown policy identifier: {text!r}")
