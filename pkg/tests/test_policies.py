import numpy as np
import pytest

from coinpick.allocation import Allocation, evaluate_allocation
from coinpick.beliefs import BeliefState, BetaParams, argmax_mean
from coinpick.errors import NoAffordableCoinError
from coinpick.harness import substream
from coinpick.policies import (
    BiasedRobinPolicy,
    GittinsPolicy,
    GreedyPolicy,
    IntervalEstimationPolicy,
    Policy,
    RandomPolicy,
    RoundRobinPolicy,
    SCLAPolicy,
    _scla_scores,
    choose_biased_robin,
    choose_gittins,
    choose_greedy_k,
    choose_interval_estimation,
    choose_random,
    choose_round_robin,
    choose_scla,
    parse_policy,
)

from oracles import gittins_grid_oracle, random_counts


def state_of(counts, budget):
    return BeliefState(tuple(BetaParams(h, t) for h, t in counts), budget)


class TestRoundRobin:
    @pytest.mark.parametrize("t,n,expected", [(1, 3, 1), (4, 3, 1), (5, 3, 2)])
    def test_schedule(self, t, n, expected):
        assert choose_round_robin(t, n) == expected

    def test_validation(self):
        with pytest.raises(ValueError):
            choose_round_robin(0, 3)

    def test_policy_skips_unaffordable(self):
        policy = RoundRobinPolicy()
        rng = np.random.default_rng(0)
        counts = [(1, 1)] * 3
        costs = (5, 1, 1)
        assert policy.choose(counts, 2, costs, rng) == 2
        policy.observe(2, "heads")
        assert policy.choose(counts, 2, costs, rng) == 3


class TestRandom:
    def test_single_coin(self):
        rng = np.random.default_rng(1)
        assert choose_random(1, rng) == 1

    def test_uniform_frequencies(self):
        rng = np.random.default_rng(2)
        draws = np.array([choose_random(5, rng) for _ in range(100_000)])
        for coin in range(1, 6):
            frequency = float(np.mean(draws == coin))
            assert 0.19 <= frequency <= 0.21

    def test_deterministic_given_stream(self):
        a = [choose_random(6, substream(9, "random", 0, 2)) for _ in range(1)]
        b = [choose_random(6, substream(9, "random", 0, 2)) for _ in range(1)]
        assert a == b

    def test_respects_affordable_subset(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            assert choose_random(4, rng, affordable=[2, 4]) in (2, 4)


class TestGreedy:
    def test_prefers_wider_coin(self):
        assert choose_greedy_k(state_of(((1, 2), (1, 3)), 1), 1) == 2

    def test_context_sensitivity(self):
        assert choose_greedy_k(state_of(((1, 1), (5, 3)), 1), 1) == 1
        assert choose_greedy_k(state_of(((1, 1), (5, 3), (17, 9)), 1), 1) == 2

    def test_tie_breaks_to_first_coin(self):
        # both one-flip values are 7/12; the first coin wins the tie
        assert choose_greedy_k(state_of(((1, 1), (1, 1)), 1), 1) == 1

    def test_falls_back_when_no_flip_helps(self):
        # after one head nothing a single flip reveals can move the best mean
        assert choose_greedy_k(state_of(((2, 1), (1, 1), (1, 1)), 5), 1) == 1

    def test_k_cap(self):
        with pytest.raises(ValueError):
            GreedyPolicy(6)
        with pytest.raises(ValueError):
            GreedyPolicy(0)


class TestBiasedRobin:
    def test_starts_at_first_coin(self):
        assert choose_biased_robin(None, 4) == 1

    def test_stays_on_heads(self):
        assert choose_biased_robin((2, "heads"), 4) == 2

    def test_advances_and_wraps_on_tails(self):
        assert choose_biased_robin((2, "tails"), 4) == 3
        assert choose_biased_robin((4, "tails"), 4) == 1

    def test_trace_property(self):
        # coin changes only after tails, and moves exactly +1 mod n
        policy = BiasedRobinPolicy()
        rng = np.random.default_rng(7)
        n = 4
        counts = [(1, 1)] * n
        costs = (1,) * n
        previous = None
        for _ in range(200):
            coin = policy.choose(counts, 10, costs, rng)
            if previous is not None:
                last_coin, last_outcome = previous
                if coin != last_coin:
                    assert last_outcome == "tails"
                    assert coin == last_coin % n + 1
                else:
                    assert last_outcome == "heads"
            outcome = "heads" if rng.random() < 0.5 else "tails"
            policy.observe(coin, outcome)
            previous = (coin, outcome)


class TestSCLA:
    def test_one_flip_matches_greedy(self):
        assert choose_scla(state_of(((1, 2), (1, 3)), 1)) == 2

    def test_tie_break_when_nothing_changes(self):
        # no single-coin allocation can move the best mean: scores all equal
        state = state_of(((9, 1), (1, 9)), 1)
        assert choose_scla(state) == 1

    def test_matches_exhaustive_single_coin_search(self):
        state = state_of(((1, 1), (1, 1), (1, 1)), 4)
        values = [
            evaluate_allocation(state, Allocation(tuple(4 if j == i else 0 for j in range(3))))
            for i in range(3)
        ]
        best = max(range(3), key=lambda i: (values[i], -i)) + 1
        assert choose_scla(state) == best
        scores = _scla_scores([(1, 1), (1, 1), (1, 1)], 4, (1, 1, 1))
        assert np.allclose(scores, values, atol=1e-12)

    def test_fast_path_matches_exact_evaluation(self):
        rng = np.random.default_rng(31)
        for _ in range(25):
            n = int(rng.integers(2, 5))
            counts = random_counts(rng, n)
            remaining = int(rng.integers(1, 7))
            state = state_of(counts, remaining)
            scores = _scla_scores(counts, remaining, (1,) * n)
            for i in range(n):
                alloc = Allocation(tuple(remaining if j == i else 0 for j in range(n)))
                assert scores[i] == pytest.approx(
                    evaluate_allocation(state, alloc), abs=1e-12
                )

    def test_agrees_with_greedy_at_budget_one(self):
        rng = np.random.default_rng(37)
        for _ in range(30):
            n = int(rng.integers(2, 5))
            counts = random_counts(rng, n)
            state = state_of(counts, 1)
            assert choose_scla(state) == choose_greedy_k(state, 1)

    def test_no_affordable_coin(self):
        with pytest.raises(NoAffordableCoinError):
            choose_scla(state_of(((1, 1),), 1), costs=(2,))


class TestIntervalEstimation:
    def test_zero_gamma_is_pure_exploitation(self):
        state = state_of(((2, 3), (4, 2), (1, 1)), 3)
        assert choose_interval_estimation(state, gamma=0.0) == argmax_mean(
            state.posteriors
        )

    def test_identical_coins_tie_to_first(self):
        state = state_of(((3, 2),) * 4, 3)
        assert choose_interval_estimation(state) == 1

    def test_prefers_optimistic_coin(self):
        # scores ~1.0659 for B(1,1) vs ~1.1094 for B(5,1) at gamma 1.96
        state = state_of(((1, 1), (5, 1)), 3)
        assert choose_interval_estimation(state, gamma=1.96) == 2

    def test_shift_invariance_of_argmax(self):
        # ranking only depends on score differences
        state = state_of(((2, 5), (3, 3), (1, 2)), 3)
        base = choose_interval_estimation(state, gamma=1.3)
        ranked = max(
            range(1, 4),
            key=lambda i: (
                state.posteriors[i - 1].alpha_heads
                / state.posteriors[i - 1].total
                + 1.3
                * np.sqrt(
                    (
                        state.posteriors[i - 1].alpha_heads
                        * state.posteriors[i - 1].alpha_tails
                    )
                    / (
                        state.posteriors[i - 1].total ** 2
                        * (state.posteriors[i - 1].total + 1)
                    )
                )
                + 10.0,
                -i,
            ),
        )
        assert base == ranked

    def test_gamma_validation(self):
        with pytest.raises(ValueError):
            choose_interval_estimation(state_of(((1, 1),), 1), gamma=-0.5)


class TestGittinsChoice:
    def test_identical_coins_tie_to_first(self):
        state = state_of(((2, 2),) * 3, 4)
        assert choose_gittins(state, 4) == 1

    def test_budget_one_is_myopic(self):
        state = state_of(((2, 3), (4, 2), (1, 1)), 1)
        assert choose_gittins(state, 1) == argmax_mean(state.posteriors)

    def test_head_rich_coin_preferred(self):
        # the grid oracle confirms the index ordering at discount 0.9
        assert gittins_grid_oracle(2, 1, 0.9) > gittins_grid_oracle(1, 1, 0.9)
        assert choose_gittins(state_of(((2, 1), (1, 1)), 10), 10) == 1


class TestPolicyObjects:
    def test_parse_round_trip_ids(self):
        for text, cls in [
            ("round-robin", RoundRobinPolicy),
            ("random", RandomPolicy),
            ("greedy:2", GreedyPolicy),
            ("biased-robin", BiasedRobinPolicy),
            ("scla", SCLAPolicy),
            ("interval:1.96", IntervalEstimationPolicy),
            ("gittins", GittinsPolicy),
        ]:
            policy = parse_policy(text)
            assert isinstance(policy, cls)
            assert isinstance(policy, Policy)

    def test_parse_parameters(self):
        assert parse_policy("greedy:3").k == 3
        assert parse_policy("greedy").k == 1
        assert parse_policy("interval:0.5").gamma == 0.5
        assert parse_policy("interval").gamma == 1.96

    def test_parse_rejects_garbage(self):
        for bad in ("ucb", "greedy:x", "interval:abc", "scla:3", "random:1"):
            with pytest.raises(ValueError):
                parse_policy(bad)

    def test_choices_always_affordable(self):
        rng = np.random.default_rng(43)
        costs = (1, 3, 2, 1)
        for text in (
            "round-robin",
            "random",
            "greedy:1",
            "biased-robin",
            "scla",
            "interval:1.96",
            "gittins",
        ):
            policy = parse_policy(text)
            counts = [(1, 1)] * 4
            remaining = 9
            while remaining >= 1:
                coin = policy.choose(counts, remaining, costs, rng)
                assert costs[coin - 1] <= remaining
                outcome = "heads" if rng.random() < 0.5 else "tails"
                h, t = counts[coin - 1]
                counts[coin - 1] = (h + 1, t) if outcome == "heads" else (h, t + 1)
                policy.observe(coin, outcome)
                remaining -= costs[coin - 1]

    def test_deterministic_replay(self):
        # identical streams reproduce the identical flip sequence
        for text in ("round-robin", "biased-robin", "scla", "greedy:1"):
            sequences = []
            for _ in range(2):
                policy = parse_policy(text)
                rng = np.random.default_rng(5)
                counts = [(1, 1)] * 3
                seq = []
                for _ in range(6):
                    coin = policy.choose(counts, 6, (1, 1, 1), rng)
                    seq.append(coin)
                    outcome = "heads" if rng.random() < 0.5 else "tails"
                    h, t = counts[coin - 1]
                    counts[coin - 1] = (
                        (h + 1, t) if outcome == "heads" else (h, t + 1)
                    )
                    policy.observe(coin, outcome)
                sequences.append(seq)
            assert sequences[0] == sequences[1]
