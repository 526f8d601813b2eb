"""Beta-Bernoulli belief tracking and exact selection-regret quantities.

Each coin's unknown head probability carries an integer-parameter Beta
density.  Flips update the density conjugately.  The quantities that drive
every policy and solver in this package are

* ``mu_max``   -- the best posterior mean available right now, and
* ``E(theta_max)`` -- the mean of the maximum of the true head
  probabilities under the current joint belief,

whose difference is the minimum achievable expected regret of declaring a
winner from the current belief state.

``expected_theta_max`` is exact: with integer Beta parameters every
per-coin CDF is a polynomial with 0/1 coefficients in the Bernstein basis,
so the product of CDFs and its integral are computed in integer arithmetic
(switching to exact-degree Gauss-Legendre quadrature for large states, and
to adaptive quadrature above a configurable degree cap).
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .errors import BudgetExceededError, DegreeOverflowError, InvalidCoinError

HEADS = "heads"
TAILS = "tails"

#: Above this total polynomial degree the product-CDF route refuses to run.
DEFAULT_DEGREE_CAP = 4096

# Largest total degree handled in exact integer arithmetic; beyond it the
# polynomial is still integrated exactly, but via degree-matched quadrature
# in double precision.
_EXACT_DEGREE_LIMIT = 64


@dataclass(frozen=True)
class BetaParams:
    """Integer-parameter Beta density over one coin's head probability."""

    alpha_heads: int
    alpha_tails: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha_heads", operator.index(self.alpha_heads))
        object.__setattr__(self, "alpha_tails", operator.index(self.alpha_tails))
        if self.alpha_heads < 1 or self.alpha_tails < 1:
            raise ValueError("Beta parameters must be integers >= 1")

    @property
    def total(self) -> int:
        return self.alpha_heads + self.alpha_tails

    def mean_fraction(self) -> Fraction:
        return Fraction(self.alpha_heads, self.total)

    def with_heads(self) -> "BetaParams":
        return BetaParams(self.alpha_heads + 1, self.alpha_tails)

    def with_tails(self) -> "BetaParams":
        return BetaParams(self.alpha_heads, self.alpha_tails + 1)


@dataclass(frozen=True)
class BeliefState:
    """Per-coin posteriors plus the remaining flip budget.

    Coin identity is positional and 1-based: coin ``i`` is
    ``posteriors[i - 1]``.  Instances are immutable; ``update`` returns a
    new state.
    """

    posteriors: tuple[BetaParams, ...]
    remaining_budget: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "posteriors", tuple(self.posteriors))
        object.__setattr__(
            self, "remaining_budget", operator.index(self.remaining_budget)
        )
        if not self.posteriors:
            raise ValueError("belief state needs at least one coin")
        if self.remaining_budget < 0:
            raise ValueError("remaining budget must be >= 0")

    @property
    def n(self) -> int:
        return len(self.posteriors)


@dataclass(frozen=True)
class ProblemInstance:
    """Coin priors, per-coin flip costs, and the total budget."""

    priors: tuple[BetaParams, ...]
    costs: tuple[int, ...]
    budget: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "priors", tuple(self.priors))
        object.__setattr__(
            self, "costs", tuple(operator.index(c) for c in self.costs)
        )
        object.__setattr__(self, "budget", operator.index(self.budget))
        if not self.priors:
            raise ValueError("instance needs at least one coin")
        if len(self.costs) != len(self.priors):
            raise ValueError("priors and costs must have equal length")
        if any(c < 1 for c in self.costs):
            raise ValueError("costs must be positive integers")
        if self.budget < 0:
            raise ValueError("budget must be >= 0")

    @property
    def n(self) -> int:
        return len(self.priors)

    def initial_state(self) -> BeliefState:
        return BeliefState(self.priors, self.budget)


def beta_mean(p: BetaParams) -> float:
    """Posterior mean alpha_heads / (alpha_heads + alpha_tails)."""
    return p.alpha_heads / p.total


def beta_std(p: BetaParams) -> float:
    """Standard deviation sqrt(mu * (1 - mu) / (total + 1))."""
    mu = Fraction(p.alpha_heads, p.total)
    return math.sqrt(float(mu * (1 - mu)) / (p.total + 1))


def update(
    state: BeliefState, coin: int, outcome: str, cost: int = 1
) -> BeliefState:
    """Return the state after flipping ``coin`` (1-based) with ``outcome``."""
    if not 1 <= coin <= state.n:
        raise InvalidCoinError(f"coin {coin} out of range 1..{state.n}")
    cost = operator.index(cost)
    if cost < 1:
        raise ValueError("cost must be a positive integer")
    if cost > state.remaining_budget:
        raise BudgetExceededError(
            f"cost {cost} exceeds remaining budget {state.remaining_budget}"
        )
    if outcome == HEADS:
        new = state.posteriors[coin - 1].with_heads()
    elif outcome == TAILS:
        new = state.posteriors[coin - 1].with_tails()
    else:
        raise ValueError(f"outcome must be {HEADS!r} or {TAILS!r}")
    posteriors = (
        state.posteriors[: coin - 1] + (new,) + state.posteriors[coin:]
    )
    return BeliefState(posteriors, state.remaining_budget - cost)


def argmax_mean(posteriors: Sequence[BetaParams]) -> int:
    """1-based index of the highest posterior mean; lowest index on ties."""
    best = 1
    bh = posteriors[0].alpha_heads
    bt = posteriors[0].total
    for i, p in enumerate(posteriors[1:], start=2):
        # a/b > c/d  <=>  a*d > c*b for positive denominators
        if p.alpha_heads * bt > bh * p.total:
            best, bh, bt = i, p.alpha_heads, p.total
    return best


def max_mean(posteriors: Sequence[BetaParams]) -> Fraction:
    """The highest posterior mean, exactly."""
    return max(p.mean_fraction() for p in posteriors)


def beta_cdf(theta: float, p: BetaParams) -> float:
    """P(Theta <= theta) for the integer-parameter Beta.

    The regularized incomplete beta with integer parameters reduces to a
    binomial tail: P(Bin(a1 + a2 - 1, theta) >= a1).  Terms are positive,
    so the direct sum is numerically stable.
    """
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    if theta == 0.0:
        return 0.0
    if theta == 1.0:
        return 1.0
    a = p.alpha_heads
    m = p.total - 1
    if m <= 60:
        total = 0.0
        for j in range(a, m + 1):
            total += math.comb(m, j) * theta**j * (1.0 - theta) ** (m - j)
    else:
        j = np.arange(a, m + 1)
        logc = gammaln(m + 1) - gammaln(j + 1) - gammaln(m - j + 1)
        total = float(
            np.exp(logc + j * math.log(theta) + (m - j) * math.log1p(-theta)).sum()
        )
    return min(total, 1.0)


def _cdf_scaled_coeffs(p: BetaParams) -> list[int]:
    """Coefficients c_j of F(t) = sum_j c_j t^j (1-t)^(m-j), m = total - 1."""
    a = p.alpha_heads
    m = p.total - 1
    return [0] * a + [math.comb(m, j) for j in range(a, m + 1)]


def _convolve_int(p: list[int], q: list[int]) -> list[int]:
    out = [0] * (len(p) + len(q) - 1)
    for i, pi in enumerate(p):
        if pi:
            for j, qj in enumerate(q):
                if qj:
                    out[i + j] += pi * qj
    return out


def _theta_max_exact(posteriors: Sequence[BetaParams]) -> Fraction:
    conv = [1]
    for p in posteriors:
        conv = _convolve_int(conv, _cdf_scaled_coeffs(p))
    m = len(conv) - 1
    total = sum(
        c * math.factorial(k) * math.factorial(m - k)
        for k, c in enumerate(conv)
        if c
    )
    return 1 - Fraction(total, math.factorial(m + 1))


def _theta_max_gauss(posteriors: Sequence[BetaParams], degree: int) -> float:
    # Gauss-Legendre with ceil((degree+1)/2) nodes integrates the exact
    # product-of-CDFs polynomial with no truncation error.
    nodes = degree // 2 + 1
    x, w = np.polynomial.legendre.leggauss(nodes)
    theta = 0.5 * (x + 1.0)
    weights = 0.5 * w
    log_t = np.log(theta)
    log_1mt = np.log1p(-theta)
    prod = np.ones_like(theta)
    for p in posteriors:
        a = p.alpha_heads
        m = p.total - 1
        j = np.arange(a, m + 1)[:, None]
        logc = gammaln(m + 1) - gammaln(j + 1) - gammaln(m - j + 1)
        prod *= np.exp(logc + j * log_t + (m - j) * log_1mt).sum(axis=0)
    return 1.0 - float(np.dot(weights, prod))


def _theta_max_quadrature(posteriors: Sequence[BetaParams]) -> float:
    def product_cdf(t: float) -> float:
        out = 1.0
        for p in posteriors:
            out *= beta_cdf(t, p)
        return out

    value, _ = integrate.quad(
        product_cdf, 0.0, 1.0, epsabs=1e-10, epsrel=1e-10, limit=200
    )
    return 1.0 - value


def expected_theta_max_polynomial(
    state: BeliefState, degree_cap: int = DEFAULT_DEGREE_CAP
) -> float:
    """E(max_i Theta_i) by exact integration of the product of CDFs.

    Raises :class:`DegreeOverflowError` when the product polynomial's
    degree exceeds ``degree_cap``; callers then fall back to adaptive
    quadrature (``expected_theta_max`` does so automatically).
    """
    degree = sum(p.total - 1 for p in state.posteriors)
    if degree > degree_cap:
        raise DegreeOverflowError(
            f"product CDF degree {degree} exceeds cap {degree_cap}"
        )
    if degree <= _EXACT_DEGREE_LIMIT:
        return float(_theta_max_exact(state.posteriors))
    return _theta_max_gauss(state.posteriors, degree)


def expected_theta_max(
    state: BeliefState, degree_cap: int = DEFAULT_DEGREE_CAP
) -> float:
    """E(max_i Theta_i) under the current joint belief, accurate to 1e-10."""
    try:
        return expected_theta_max_polynomial(state, degree_cap)
    except DegreeOverflowError:
        return _theta_max_quadrature(state.posteriors)


def min_regret(state: BeliefState) -> float:
    """Expected regret of declaring the best-mean coin now: E(theta_max) - mu_max."""
    value = expected_theta_max(state) - float(max_mean(state.posteriors))
    return max(0.0, value)
