"""Exact optimal strategies for small instances, and strategy-tree tools.

A strategy is a finite rooted binary tree: internal nodes flip a coin and
branch on the outcome, leaves stop and name the winner.  The solver runs
the obvious dynamic program over (posterior counts, remaining budget),
memoized, with double-precision values and a relative tie tolerance; ties
always break toward stopping first and then the lowest coin index.  This
is exponential in the number of coins, hence the size caps.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from .beliefs import BeliefState, BetaParams, expected_theta_max, min_regret
from .errors import InstanceTooLargeError, InvalidCoinError, MalformedTreeError

DEFAULT_MAX_COINS = 10
DEFAULT_MAX_BUDGET = 12

# DP values live in (0, 1], so one absolute tolerance covers tie detection.
_TIE_TOL = 1e-12


@dataclass(frozen=True)
class Stop:
    """Leaf: stop flipping and declare ``winner`` (1-based)."""

    winner: int


@dataclass(frozen=True)
class Flip:
    """Internal node: flip ``coin`` (1-based) and branch on the outcome."""

    coin: int
    on_heads: "StrategyTree"
    on_tails: "StrategyTree"


StrategyTree = Union[Stop, Flip]


@dataclass(frozen=True)
class SolveResult:
    tree: StrategyTree
    value: float
    regret: float
    states_expanded: int


Counts = tuple[tuple[int, int], ...]


def _argmax_mean_counts(counts: Counts) -> int:
    best = 1
    bh, bt = counts[0][0], counts[0][0] + counts[0][1]
    for i in range(1, len(counts)):
        h, t = counts[i]
        s = h + t
        if h * bt > bh * s:
            best, bh, bt = i + 1, h, s
    return best


def _max_mean_counts(counts: Counts) -> float:
    return max(h / (h + t) for h, t in counts)


class _Solver:
    """One solve's memoized value function over (counts, budget)."""

    def __init__(self, costs: tuple[int, ...], symmetric: bool):
        self.costs = costs
        self.symmetric = symmetric
        self.memo: dict = {}

    def _key(self, counts: Counts, budget: int):
        if self.symmetric:
            return (tuple(sorted(counts)), budget)
        return (counts, budget)

    def value(self, counts: Counts, budget: int) -> float:
        key = self._key(counts, budget)
        cached = self.memo.get(key)
        if cached is not None:
            return cached
        mu_max = _max_mean_counts(counts)
        best = mu_max
        for i, (h, t) in enumerate(counts):
            cost = self.costs[i]
            if cost > budget:
                continue
            p_head = h / (h + t)
            v_h = self.value(
                counts[:i] + ((h + 1, t),) + counts[i + 1 :], budget - cost
            )
            v_t = self.value(
                counts[:i] + ((h, t + 1),) + counts[i + 1 :], budget - cost
            )
            q = p_head * v_h + (1.0 - p_head) * v_t
            if q > best:
                best = q
        self.memo[key] = best
        return best

    def build_tree(self, counts: Counts, budget: int) -> StrategyTree:
        mu_max = _max_mean_counts(counts)
        best_q = mu_max
        best_coin = None
        for i, (h, t) in enumerate(counts):
            cost = self.costs[i]
            if cost > budget:
                continue
            p_head = h / (h + t)
            after_h = counts[:i] + ((h + 1, t),) + counts[i + 1 :]
            after_t = counts[:i] + ((h, t + 1),) + counts[i + 1 :]
            q = p_head * self.value(after_h, budget - cost) + (
                1.0 - p_head
            ) * self.value(after_t, budget - cost)
            # Strictly-better wins; a tie keeps the earlier choice, so the
            # tree stops early whenever flipping cannot beat stopping.
            if q > best_q + _TIE_TOL:
                best_q = q
                best_coin = i
        if best_coin is None:
            return Stop(_argmax_mean_counts(counts))
        h, t = counts[best_coin]
        cost = self.costs[best_coin]
        after_h = counts[:best_coin] + ((h + 1, t),) + counts[best_coin + 1 :]
        after_t = counts[:best_coin] + ((h, t + 1),) + counts[best_coin + 1 :]
        return Flip(
            best_coin + 1,
            self.build_tree(after_h, budget - cost),
            self.build_tree(after_t, budget - cost),
        )


def _as_counts(state: BeliefState) -> Counts:
    return tuple((p.alpha_heads, p.alpha_tails) for p in state.posteriors)


def _make_solver(
    state: BeliefState,
    costs: Sequence[int] | None,
    budget: int | None,
    max_coins: int | None,
    max_budget: int | None,
) -> tuple[_Solver, Counts, tuple[int, ...], int]:
    counts = _as_counts(state)
    n = len(counts)
    cost_tuple = tuple(
        operator.index(c) for c in (costs if costs is not None else (1,) * n)
    )
    if len(cost_tuple) != n:
        raise ValueError("costs length must match the number of coins")
    if any(c < 1 for c in cost_tuple):
        raise ValueError("costs must be positive integers")
    b = state.remaining_budget if budget is None else operator.index(budget)
    if b < 0:
        raise ValueError("budget must be >= 0")
    if max_coins is not None and n > max_coins:
        raise InstanceTooLargeError(f"{n} coins exceeds solver cap {max_coins}")
    if max_budget is not None and b > max_budget:
        raise InstanceTooLargeError(f"budget {b} exceeds solver cap {max_budget}")
    symmetric = len(set(counts)) == 1 and len(set(cost_tuple)) == 1
    return _Solver(cost_tuple, symmetric), counts, cost_tuple, b


def solve_optimal(
    root: BeliefState,
    costs: Sequence[int] | None = None,
    budget: int | None = None,
    max_coins: int | None = DEFAULT_MAX_COINS,
    max_budget: int | None = DEFAULT_MAX_BUDGET,
) -> SolveResult:
    """Compute an optimal strategy tree and its value and regret.

    ``budget`` defaults to the state's remaining budget, ``costs`` to unit
    costs.  Raises :class:`InstanceTooLargeError` beyond the caps (pass
    ``None`` to lift a cap deliberately).
    """
    solver, counts, _, b = _make_solver(root, costs, budget, max_coins, max_budget)
    value = solver.value(counts, b)
    tree = solver.build_tree(counts, b)
    regret = max(0.0, expected_theta_max(root) - value)
    return SolveResult(tree, value, regret, len(solver.memo))


def first_action(
    root: BeliefState,
    costs: Sequence[int] | None = None,
    budget: int | None = None,
    max_coins: int | None = DEFAULT_MAX_COINS,
    max_budget: int | None = DEFAULT_MAX_BUDGET,
) -> int | None:
    """The optimal first coin to flip (1-based), or None when stopping is optimal."""
    solver, counts, cost_tuple, b = _make_solver(
        root, costs, budget, max_coins, max_budget
    )
    mu_max = _max_mean_counts(counts)
    best_q = mu_max
    best_coin = None
    for i, (h, t) in enumerate(counts):
        if cost_tuple[i] > b:
            continue
        p_head = h / (h + t)
        q = p_head * solver.value(
            counts[:i] + ((h + 1, t),) + counts[i + 1 :], b - cost_tuple[i]
        ) + (1.0 - p_head) * solver.value(
            counts[:i] + ((h, t + 1),) + counts[i + 1 :], b - cost_tuple[i]
        )
        if q > best_q + _TIE_TOL:
            best_q = q
            best_coin = i + 1
    return best_coin


def root_action_values(
    root: BeliefState,
    costs: Sequence[int] | None = None,
    budget: int | None = None,
    max_coins: int | None = DEFAULT_MAX_COINS,
    max_budget: int | None = DEFAULT_MAX_BUDGET,
) -> list[float | None]:
    """Best achievable value per first flip (None where unaffordable)."""
    solver, counts, cost_tuple, b = _make_solver(
        root, costs, budget, max_coins, max_budget
    )
    values: list[float | None] = []
    for i, (h, t) in enumerate(counts):
        if cost_tuple[i] > b:
            values.append(None)
            continue
        p_head = h / (h + t)
        q = p_head * solver.value(
            counts[:i] + ((h + 1, t),) + counts[i + 1 :], b - cost_tuple[i]
        ) + (1.0 - p_head) * solver.value(
            counts[:i] + ((h, t + 1),) + counts[i + 1 :], b - cost_tuple[i]
        )
        values.append(q)
    return values


def strategy_regret(
    tree: StrategyTree,
    root: BeliefState,
    costs: Sequence[int] | None = None,
) -> float:
    """Expected regret of executing ``tree`` from ``root``.

    The leaf-probability-weighted sum of leaf regrets; cross-checked
    internally against E(theta_max) - E(best-mean | tree), which must
    agree to 1e-9.
    """
    n = root.n
    cost_tuple = tuple(costs) if costs is not None else (1,) * n
    leaves: list[tuple[Fraction, Counts]] = []

    def walk(node: StrategyTree, counts: Counts, spent: int, prob: Fraction) -> None:
        if isinstance(node, Stop):
            if not 1 <= node.winner <= n:
                raise MalformedTreeError(f"stop names invalid coin {node.winner}")
            leaves.append((prob, counts))
            return
        if not isinstance(node, Flip):
            raise MalformedTreeError(f"unknown node type {type(node).__name__}")
        if not 1 <= node.coin <= n:
            raise InvalidCoinError(f"flip names invalid coin {node.coin}")
        cost = cost_tuple[node.coin - 1]
        if spent + cost > root.remaining_budget:
            raise MalformedTreeError(
                f"branch cost {spent + cost} exceeds budget {root.remaining_budget}"
            )
        i = node.coin - 1
        h, t = counts[i]
        p_head = Fraction(h, h + t)
        walk(
            node.on_heads,
            counts[:i] + ((h + 1, t),) + counts[i + 1 :],
            spent + cost,
            prob * p_head,
        )
        walk(
            node.on_tails,
            counts[:i] + ((h, t + 1),) + counts[i + 1 :],
            spent + cost,
            prob * (1 - p_head),
        )

    walk(tree, _as_counts(root), 0, Fraction(1))

    def leaf_state(counts: Counts) -> BeliefState:
        return BeliefState(tuple(BetaParams(h, t) for h, t in counts), 0)

    regret_leaf_sum = sum(
        float(p) * min_regret(leaf_state(c)) for p, c in leaves
    )
    expected_best_mean = sum(
        float(p) * _max_mean_counts(c) for p, c in leaves
    )
    regret_root_form = expected_theta_max(root) - expected_best_mean
    if abs(regret_leaf_sum - regret_root_form) > 1e-9:
        raise ArithmeticError(
            "strategy regret routes disagree: "
            f"{regret_leaf_sum!r} vs {regret_root_form!r}"
        )
    return max(0.0, regret_leaf_sum)


def serialize_tree(tree: StrategyTree) -> str:
    """Line-indented text form; ``parse_tree`` round-trips it bit-exactly."""
    lines: list[str] = []

    def emit(node: StrategyTree, indent: int, prefix: str) -> None:
        pad = " " * indent
        if isinstance(node, Stop):
            lines.append(f"{pad}{prefix}stop {node.winner}")
            return
        lines.append(f"{pad}{prefix}flip {node.coin}")
        emit(node.on_heads, indent + 2, "H: ")
        emit(node.on_tails, indent + 2, "T: ")

    emit(tree, 0, "")
    return "\n".join(lines)


def parse_tree(text: str) -> StrategyTree:
    """Parse the ``serialize_tree`` text form."""
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise MalformedTreeError("empty tree text")
    pos = 0

    def parse_node(indent: int, prefix: str) -> StrategyTree:
        nonlocal pos
        if pos >= len(lines):
            raise MalformedTreeError("unexpected end of tree text")
        line = lines[pos]
        expected = " " * indent + prefix
        if not line.startswith(expected):
            raise MalformedTreeError(f"expected {expected!r} at line {pos + 1}")
        body = line[len(expected) :]
        pos += 1
        kind, _, arg = body.partition(" ")
        if kind == "stop":
            return Stop(int(arg))
        if kind == "flip":
            coin = int(arg)
            on_heads = parse_node(indent + 2, "H: ")
            on_tails = parse_node(indent + 2, "T: ")
            return Flip(coin, on_heads, on_tails)
        raise MalformedTreeError(f"unknown node kind {kind!r} at line {pos}")

    tree = parse_node(0, "")
    if pos != len(lines):
        raise MalformedTreeError(f"trailing content at line {pos + 1}")
    return tree
