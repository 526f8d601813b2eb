"""Gittins indices for Beta-Bernoulli arms under geometric discounting.

The index of an arm in state B(a1, a2) at discount beta is calibrated via
the retirement option: the per-step payoff ``lam`` of a constant arm such
that, facing the choice between flipping the Beta arm (1 per head,
discounted by beta each step) and retiring on ``lam`` forever, the root
state is indifferent.  Each candidate ``lam`` is priced by a finite-horizon
dynamic program over the Beta parameter lattice; the horizon is chosen so
beta^H falls below the requested tolerance (capped, so discounts very
close to 1 lose precision gracefully).  A bisection over [mean, 1] then
pins the indifference point.

Budget adaptation: with ``s`` flips remaining the discount is
``1 - 1/s``, making the expected horizon of the discounted proxy equal to
the remaining budget.  Indices for that use are memoized per
(a1, a2, s, tolerance) and can be persisted to a CSV cache.
"""

from __future__ import annotations

import csv
import math
import operator
import os
import threading
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from numba import njit

from .beliefs import BetaParams, beta_mean
from .errors import NonconvergenceError

DEFAULT_TOLERANCE = 1e-6
MAX_HORIZON = 200
_MAX_BISECTIONS = 1000


@dataclass(frozen=True)
class GittinsQuery:
    params: BetaParams
    discount: float
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self) -> None:
        if not 0.0 <= self.discount < 1.0:
            raise ValueError("discount must lie in [0, 1)")
        if self.tolerance <= 0.0:
            raise ValueError("tolerance must be positive")


def discount_for_budget(s: int) -> float:
    """Discount 1 - 1/s matching a remaining budget of ``s`` flips."""
    s = operator.index(s)
    if s < 1:
        raise ValueError("remaining budget must be >= 1")
    return 1.0 - 1.0 / s


def horizon_for(discount: float, tolerance: float) -> int:
    """Smallest H with discount^H < tolerance, capped at MAX_HORIZON."""
    if discount <= 0.0:
        return 1
    return min(MAX_HORIZON, math.ceil(math.log(tolerance) / math.log(discount)))


@njit(cache=True)
def _continue_minus_retire(
    a0: int, b0: int, beta: float, lam: float, horizon: int
) -> float:
    """Root advantage of playing the arm over retiring at payoff ``lam``."""
    retire = lam / (1.0 - beta)
    v = np.full(horizon + 1, retire)
    for depth in range(horizon - 1, -1, -1):
        for i in range(depth + 1):
            a = a0 + i
            b = b0 + (depth - i)
            mu = a / (a + b)
            q = mu * (1.0 + beta * v[i + 1]) + (1.0 - mu) * beta * v[i]
            if q > retire:
                v[i] = q
            else:
                v[i] = retire
    return v[0] - retire


def gittins_index(q: GittinsQuery) -> float:
    """Retirement-calibrated index; within ``q.tolerance`` of the fixed point."""
    mu = beta_mean(q.params)
    if q.discount == 0.0:
        return mu
    horizon = horizon_for(q.discount, q.tolerance)
    a, b = q.params.alpha_heads, q.params.alpha_tails
    lo, hi = mu, 1.0
    iterations = 0
    while hi - lo > q.tolerance:
        iterations += 1
        if iterations > _MAX_BISECTIONS:
            raise NonconvergenceError(
                f"no bracket within {_MAX_BISECTIONS} bisections for "
                f"B({a},{b}) at discount {q.discount}"
            )
        mid = 0.5 * (lo + hi)
        if _continue_minus_retire(a, b, q.discount, mid, horizon) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# Shared memo of budget-adapted indices; reads are lock-free, inserts are
# idempotent (recomputation yields the identical value).
_table: dict[tuple[int, int, int, float], float] = {}
_table_lock = threading.Lock()


def index_for_budget_counts(
    a1: int, a2: int, s: int, tolerance: float = DEFAULT_TOLERANCE
) -> float:
    """Memoized index of B(a1, a2) at discount 1 - 1/s (allocation-free path)."""
    key = (a1, a2, s, tolerance)
    value = _table.get(key)
    if value is None:
        value = gittins_index(
            GittinsQuery(BetaParams(a1, a2), discount_for_budget(s), tolerance)
        )
        with _table_lock:
            _table[key] = value
    return value


def gittins_index_for_budget(
    params: BetaParams, s: int, tolerance: float = DEFAULT_TOLERANCE
) -> float:
    """Memoized index of ``params`` at discount 1 - 1/s."""
    return index_for_budget_counts(
        params.alpha_heads, params.alpha_tails, operator.index(s), tolerance
    )


def table_snapshot() -> dict[tuple[int, int, int, float], float]:
    return dict(_table)


def load_cache(path: str) -> int:
    """Merge a CSV cache file into the memo; returns entries loaded."""
    if not os.path.exists(path):
        return 0
    loaded = 0
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for row in reader:
            if not row or row[0] == "alpha1":
                continue
            a1, a2, s = int(row[0]), int(row[1]), int(row[2])
            tol, value = float(row[3]), float(row[4])
            with _table_lock:
                _table[(a1, a2, s, tol)] = value
            loaded += 1
    return loaded


def save_cache(path: str) -> int:
    """Write the memo (merged with any existing file) back to ``path``."""
    load_cache(path)
    entries = sorted(_table.items())
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha1", "alpha2", "s", "tolerance", "index"])
        for (a1, a2, s, tol), value in entries:
            writer.writerow([a1, a2, s, repr(tol), repr(value)])
    return len(entries)


def index_table(
    max_alpha_sum: int, s: int, tolerance: float = DEFAULT_TOLERANCE
) -> Iterable[tuple[int, int, float]]:
    """All (alpha1, alpha2, index) with alpha1 + alpha2 <= max_alpha_sum,
    in lexicographic (alpha1, alpha2) order, at discount 1 - 1/s."""
    max_alpha_sum = operator.index(max_alpha_sum)
    if max_alpha_sum < 2:
        raise ValueError("max_alpha_sum must be >= 2")
    for a1 in range(1, max_alpha_sum):
        for a2 in range(1, max_alpha_sum - a1 + 1):
            yield a1, a2, gittins_index_for_budget(
                BetaParams(a1, a2), s, tolerance
            )
