"""Budgeted best-coin selection.

Pick the coin with the highest unknown head probability when only a fixed
budget of observation flips is allowed: Beta-Bernoulli belief tracking,
exact regret quantities, seven flip-selection policies, an exact optimal
strategy solver for small instances, and a reproducible Monte Carlo
experiment harness.
"""

from .allocation import (
    Allocation,
    beta_binomial_pmf,
    evaluate_allocation,
    uniform_equal_allocation_regret,
)
from .beliefs import (
    HEADS,
    TAILS,
    BeliefState,
    BetaParams,
    ProblemInstance,
    argmax_mean,
    beta_cdf,
    beta_mean,
    beta_std,
    expected_theta_max,
    min_regret,
    update,
)
from .config import ExperimentConfig, parse_config_file, parse_config_text
from .errors import (
    BudgetExceededError,
    CoinpickError,
    ConfigError,
    DegreeOverflowError,
    InstanceTooLargeError,
    InvalidCoinError,
    MalformedTreeError,
    NoAffordableCoinError,
    NonconvergenceError,
)
from .gittins import (
    GittinsQuery,
    discount_for_budget,
    gittins_index,
    gittins_index_for_budget,
)
from .harness import (
    ExperimentResult,
    TrialRecord,
    TrialStreams,
    run_experiment,
    run_trial,
    sample_instance,
)
from .policies import (
    FlipRecord,
    Policy,
    choose_biased_robin,
    choose_gittins,
    choose_greedy_k,
    choose_interval_estimation,
    choose_random,
    choose_round_robin,
    choose_scla,
    parse_policy,
)
from .solver import (
    Flip,
    SolveResult,
    Stop,
    StrategyTree,
    first_action,
    parse_tree,
    root_action_values,
    serialize_tree,
    solve_optimal,
    strategy_regret,
)

__version__ = "0.1.0"
