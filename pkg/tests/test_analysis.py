"""Occupancy, stationary behavior, wheel approximation, synchronizing words.

Expected values come from independent oracles computed here: exhaustive path
enumeration, a direct Fibonacci recurrence, exact cycle arithmetic, and
brute-force word application.
"""
import math
from fractions import Fraction
from random import Random

import pytest

from cmoore.analysis import (
    FiniteDistribution,
    approximate_distribution,
    monte_carlo_occupancy,
    path_count_occupancy,
    signal_occupancy,
    stationary_distribution,
    synchronizing_word,
)
from cmoore.errors import (
    AmbiguousChainError,
    HaltedError,
    InfeasibleError,
    InputDomainError,
)
from cmoore.machine import Automaton, validate
from cmoore.menagerie import annotate_outputs, chain, synapse, wheel, wire

GOLDEN_RECIPROCAL = 2 / (1 + math.sqrt(5))


def looped_two_wheel():
    return wheel(2, loops=("a",))


def enumerate_paths(machine, steps):
    """Oracle: depth-first enumeration of all equal-length paths."""
    symbol = machine.inputs[0]
    counts = {q: 0 for q in machine.states}

    def walk(state, remaining):
        if remaining == 0:
            counts[state] += 1
            return
        for nxt in machine.successors(state, symbol):
            walk(nxt, remaining - 1)

    walk(machine.initial, steps)
    return counts


def fibonacci(n):
    a, b = 1, 1
    for _ in range(n - 1):
        a, b = b, a + b
    return a


def prop3_wheel():
    m = wheel(10)
    labels = {q: "1" if i < 5 else "2" if i < 8 else "3" for i, q in enumerate(m.states)}
    return annotate_outputs(m, labels)


class TestPathCountOccupancy:
    def test_three_steps_match_exhaustive_enumeration(self):
        m = looped_two_wheel()
        vector = path_count_occupancy(m, 3)
        oracle = enumerate_paths(m, 3)
        total = sum(oracle.values())
        assert vector["a"] == Fraction(oracle["a"], total) == Fraction(3, 5)
        assert vector["b"] == Fraction(2, 5)

    def test_forty_steps_hit_the_golden_ratio(self):
        vector = path_count_occupancy(looped_two_wheel(), 40)
        assert vector["a"] == Fraction(fibonacci(41), fibonacci(42))
        assert abs(float(vector["a"]) - 0.61803) < 1e-3

    def test_deterministic_wheel_concentrates_on_one_state(self):
        m = wheel(4)
        vector = path_count_occupancy(m, 7)
        assert vector[m.states[7 % 4]] == 1

    def test_halted_chain_raises(self):
        with pytest.raises(HaltedError):
            path_count_occupancy(chain(3), 5)

    def test_fibonacci_ratio_for_all_horizons_up_to_sixty(self):
        m = looped_two_wheel()
        for n in range(0, 61):
            vector = path_count_occupancy(m, n)
            assert vector["a"] == Fraction(fibonacci(n + 1), fibonacci(n + 2))

    def test_error_magnitude_strictly_decreases(self):
        m = looped_two_wheel()
        errors = [
            abs(float(path_count_occupancy(m, n)["a"]) - GOLDEN_RECIPROCAL)
            for n in range(0, 30)
        ]
        assert all(errors[i + 1] < errors[i] for i in range(len(errors) - 1))
        evens = [float(path_count_occupancy(m, n)["a"]) for n in range(0, 20, 2)]
        odds = [float(path_count_occupancy(m, n)["a"]) for n in range(1, 20, 2)]
        assert all(x > y for x, y in zip(evens, evens[1:]))
        assert all(x < y for x, y in zip(odds, odds[1:]))

    def test_close_to_limit_beyond_thirty_five_steps(self):
        m = looped_two_wheel()
        for n in (35, 50, 60):
            assert abs(float(path_count_occupancy(m, n)["a"]) - 0.618034) < 1e-6

    def test_float_mode_beyond_exact_limit_agrees(self):
        m = looped_two_wheel()
        vector = path_count_occupancy(m, 250)
        assert not vector.exact
        assert abs(vector["a"] - GOLDEN_RECIPROCAL) < 1e-9

    def test_negative_steps(self):
        with pytest.raises(InputDomainError):
            path_count_occupancy(wheel(2), -1)


class TestStationaryDistribution:
    def test_looped_two_wheel(self):
        vector = stationary_distribution(looped_two_wheel())
        assert abs(vector["a"] - 2 / 3) < 1e-9
        assert abs(vector["b"] - 1 / 3) < 1e-9

    def test_wheels_are_uniform_and_exact(self):
        for k in (1, 3, 8):
            vector = stationary_distribution(wheel(k))
            assert vector.exact
            assert all(value == Fraction(1, k) for _, value in vector.entries)

    def test_prop3_signal_shares(self):
        m = prop3_wheel()
        shares = signal_occupancy(stationary_distribution(m), m)
        assert shares == {"1": Fraction(1, 2), "2": Fraction(3, 10), "3": Fraction(1, 5)}

    def test_fixed_point_residual(self):
        m = looped_two_wheel()
        vector = stationary_distribution(m).as_dict()
        # v P = v for the uniform-choice chain: a -> {a, b}, b -> {a}
        next_a = vector["a"] / 2 + vector["b"]
        next_b = vector["a"] / 2
        assert abs(next_a - vector["a"]) + abs(next_b - vector["b"]) < 1e-10

    def test_incomplete_machine_rejected(self):
        with pytest.raises(InputDomainError):
            stationary_distribution(chain(3))

    def test_multiple_closed_classes(self):
        m = Automaton.make(
            "split",
            ["s", "p", "q"],
            ["e"],
            "s",
            edges=[("s", "e", "p"), ("s", "e", "q"), ("p", "e", "p"), ("q", "e", "q")],
        )
        with pytest.raises(AmbiguousChainError) as err:
            stationary_distribution(m)
        assert err.value.classes == (("p",), ("q",))

    def test_transient_states_get_zero_mass(self):
        m = Automaton.make(
            "lead-in",
            ["s", "a", "b"],
            ["e"],
            "s",
            edges=[("s", "e", "a"), ("a", "e", "b"), ("b", "e", "a")],
        )
        vector = stationary_distribution(m)
        assert vector["s"] == 0
        assert vector["a"] == Fraction(1, 2)


class TestMonteCarlo:
    def test_looped_two_wheel_converges(self):
        vector = monte_carlo_occupancy(looped_two_wheel(), 100_000, seed=7)
        assert abs(vector["a"] - 2 / 3) < 6e-3

    def test_three_wheel_near_uniform(self):
        vector = monte_carlo_occupancy(wheel(3), 300_000, seed=1)
        for _, value in vector.entries:
            assert abs(value - 1 / 3) < 1e-5

    def test_same_seed_same_vector(self):
        a = monte_carlo_occupancy(looped_two_wheel(), 5_000, seed=42)
        b = monte_carlo_occupancy(looped_two_wheel(), 5_000, seed=42)
        assert a == b

    def test_halt_carries_partial_data(self):
        m = Automaton.make(
            "stub", ["a", "b"], ["e"], "a", edges=[("a", "e", "b")]
        )
        with pytest.raises(HaltedError) as err:
            monte_carlo_occupancy(m, 10, seed=0)
        assert err.value.partial is not None
        assert err.value.partial["b"] == 0.5

    def test_doubling_steps_does_not_double_deviation(self):
        m = looped_two_wheel()
        for seed in (0, 1, 2):
            small = monte_carlo_occupancy(m, 50_000, seed=seed)
            large = monte_carlo_occupancy(m, 100_000, seed=seed)
            dev_small = abs(small["a"] - 2 / 3)
            dev_large = abs(large["a"] - 2 / 3)
            assert dev_large <= 2 * dev_small


class TestApproximateDistribution:
    def test_half_three_two_is_exact_at_ten(self):
        dist = FiniteDistribution.parse("0.5,0.3,0.2")
        m = approximate_distribution(dist, Fraction(1, 100))
        assert len(m.states) == 10
        shares = signal_occupancy(stationary_distribution(m), m)
        assert shares == {"1": Fraction(1, 2), "2": Fraction(3, 10), "3": Fraction(1, 5)}

    def test_single_outcome(self):
        dist = FiniteDistribution.make([("win", 1)])
        m = approximate_distribution(dist, Fraction(1, 2))
        assert len(m.states) == 1
        assert m.output_of(m.states[0]) == "win"

    def test_infeasible_tolerance_reports_best(self):
        delta = Fraction(1, 10**7)
        dist = FiniteDistribution.make(
            [("x", Fraction(1, 2)), ("y", Fraction(1, 4) + delta), ("z", Fraction(1, 4) - delta)]
        )
        with pytest.raises(InfeasibleError) as err:
            approximate_distribution(dist, Fraction(1, 10**9))
        assert err.value.best_epsilon is not None
        assert err.value.best_epsilon > Fraction(1, 10**9)

    def test_result_validates_and_meets_epsilon_componentwise(self):
        dist = FiniteDistribution.make(
            [("p", Fraction(17, 100)), ("q", Fraction(53, 100)), ("r", Fraction(30, 100))]
        )
        eps = Fraction(1, 50)
        m = approximate_distribution(dist, eps)
        assert validate(m) == []
        shares = signal_occupancy(stationary_distribution(m), m)
        for label, p in zip(dist.outcomes, dist.probabilities):
            assert abs(shares.get(label, Fraction(0)) - p) <= eps

    def test_distribution_validation(self):
        with pytest.raises(ValueError):
            FiniteDistribution.make([("a", Fraction(1, 2)), ("b", Fraction(1, 4))])
        with pytest.raises(InputDomainError):
            approximate_distribution(FiniteDistribution.make([("a", 1)]), 0)


class TestSynchronizingWord:
    def test_pure_wheels_cannot_synchronize(self):
        for k in (2, 3, 7):
            assert synchronizing_word(wheel(k)) is None

    def test_wire_synchronizes_in_one_symbol(self):
        result = synchronizing_word(wire(("x", "y")))
        assert result is not None
        assert len(result.word) == 1
        assert result.sink == result.word[0]
        assert result.shortest
        assert not result.sink_is_initial

    def test_single_state_machine(self):
        result = synchronizing_word(wheel(1))
        assert result.word == ()
        assert result.sink_is_initial

    def test_preconditions(self):
        with pytest.raises(InputDomainError):
            synchronizing_word(chain(3))  # not complete
        with pytest.raises(InputDomainError):
            synchronizing_word(synapse())  # not deterministic

    def test_random_machines_respect_the_conjecture_bound(self):
        rng = Random(2024)
        found = 0
        for trial in range(40):
            n = rng.randint(2, 8)
            names = [f"s{i}" for i in range(n)]
            edges = [
                (p, sym, names[rng.randrange(n)]) for p in names for sym in ("x", "y")
            ]
            m = Automaton.make(f"rand{trial}", names, ["x", "y"], names[0], edges=edges)
            result = synchronizing_word(m)
            if result is None:
                continue
            found += 1
            assert len(result.word) <= (n - 1) ** 2
            image = set(names)
            for sym in result.word:
                image = {m.successors(q, sym)[0] for q in image}
            assert image == {result.sink}
        assert found > 10  # random complete maps synchronize often


class TestGreedySynchronization:
    def test_large_machines_fall_back_to_greedy_merging(self):
        # 30 states exceeds the subset-search limit, so the word is greedy.
        # Rotation plus a single merging letter always synchronizes.
        names = [f"q{i}" for i in range(30)]
        edges = []
        for i, name in enumerate(names):
            edges.append((name, "a", names[(i + 1) % 30]))
            edges.append((name, "b", names[1] if i == 0 else name))
        m = Automaton.make("big", names, ("a", "b"), names[0], edges=edges)
        result = synchronizing_word(m)
        assert result is not None
        assert not result.shortest
        image = set(names)
        for sym in result.word:
            image = {m.successors(q, sym)[0] for q in image}
        assert image == {result.sink}
