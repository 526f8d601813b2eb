"""Non-contingent (allocational) strategies and their exact evaluation.

An allocation fixes, up front, how many flips each coin receives.  Its
quality is the expected best posterior mean once all flips are in.  With
independent coins that expectation is computed exactly: each coin's
posterior mean after ``m`` flips takes one of ``m + 1`` values with
Beta-Binomial predictive probabilities, and the maximum of independent
discrete variables is read off the product of their CDFs over the sorted
union of attainable values.  Everything runs in rational arithmetic so
that equal means collide exactly.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .beliefs import BeliefState, BetaParams
from .errors import BudgetExceededError


@dataclass(frozen=True)
class Allocation:
    """Number of flips assigned to each coin (positionally, coin 1 first)."""

    flips_per_coin: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "flips_per_coin",
            tuple(operator.index(a) for a in self.flips_per_coin),
        )
        if any(a < 0 for a in self.flips_per_coin):
            raise ValueError("flip counts must be >= 0")

    @property
    def total_flips(self) -> int:
        return sum(self.flips_per_coin)


def _rising(x: int, k: int) -> int:
    out = 1
    for i in range(k):
        out *= x + i
    return out


def _pmf_fraction(p: BetaParams, m: int, h: int) -> Fraction:
    a, b = p.alpha_heads, p.alpha_tails
    return Fraction(
        math.comb(m, h) * _rising(a, h) * _rising(b, m - h), _rising(a + b, m)
    )


def beta_binomial_pmf(p: BetaParams, m: int, h: int) -> float:
    """P(exactly ``h`` heads in ``m`` flips) under the Beta predictive."""
    m = operator.index(m)
    h = operator.index(h)
    if m < 0:
        raise ValueError("m must be >= 0")
    if h < 0 or h > m:
        raise ValueError(f"h must lie in 0..{m}, got {h}")
    return float(_pmf_fraction(p, m, h))


def _posterior_mean_distribution(
    p: BetaParams, m: int
) -> list[tuple[Fraction, Fraction]]:
    """Attainable posterior means after ``m`` flips, as (mean, probability)."""
    total = p.total + m
    return [
        (Fraction(p.alpha_heads + h, total), _pmf_fraction(p, m, h))
        for h in range(m + 1)
    ]


def evaluate_allocation_exact(
    state: BeliefState, alloc: Allocation
) -> Fraction:
    """Exact E(best posterior mean) after executing ``alloc`` on ``state``."""
    if len(alloc.flips_per_coin) != state.n:
        raise ValueError("allocation length must match the number of coins")
    supports = [
        _posterior_mean_distribution(p, m)
        for p, m in zip(state.posteriors, alloc.flips_per_coin)
    ]
    grid = sorted({mean for support in supports for mean, _ in support})
    # CDF of each coin's mean over the grid, then the product CDF of the max.
    product = [Fraction(1)] * len(grid)
    for support in supports:
        k = 0
        acc = Fraction(0)
        for gi, v in enumerate(grid):
            while k < len(support) and support[k][0] <= v:
                acc += support[k][1]
                k += 1
            product[gi] *= acc
    value = Fraction(0)
    prev = Fraction(0)
    for v, cum in zip(grid, product):
        value += v * (cum - prev)
        prev = cum
    return value


def evaluate_allocation(
    state: BeliefState,
    alloc: Allocation,
    costs: Sequence[int] | None = None,
) -> float:
    """E(best posterior mean | allocation), computed exactly.

    When ``costs`` is given, the allocation must fit the state's remaining
    budget or :class:`BudgetExceededError` is raised.
    """
    if costs is not None:
        spend = sum(a * c for a, c in zip(alloc.flips_per_coin, costs))
        if spend > state.remaining_budget:
            raise BudgetExceededError(
                f"allocation costs {spend}, budget is {state.remaining_budget}"
            )
    return float(evaluate_allocation_exact(state, alloc))


def uniform_equal_allocation_regret(n: int, a: int) -> float:
    """Regret of giving each of ``n`` uniform-prior coins ``a`` flips.

    Closed form: n/(n+1) - sum_{h=0}^{a} ((h+1)^n - h^n)/(a+1)^n * (h+1)/(a+2).
    """
    n = operator.index(n)
    a = operator.index(a)
    if n < 1:
        raise ValueError("n must be >= 1")
    if a < 0:
        raise ValueError("a must be >= 0")
    best = Fraction(0)
    for h in range(a + 1):
        weight = Fraction((h + 1) ** n - h**n, (a + 1) ** n)
        best += weight * Fraction(h + 1, a + 2)
    return float(Fraction(n, n + 1) - best)
