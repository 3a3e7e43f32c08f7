"""Nested-machine semantics: ticking, cycle lengths, classification,
bisimulation."""
from random import Random

import pytest

from cmoore.cluster import (
    ClusterNode,
    digit_count,
    ScaleSystem,
    TemporalClass,
    bisimilar,
    canonical_machine,
    classify,
    cycle_length,
    initial_state,
    max_prime_power_sizes,
    node_from_json,
    node_to_json,
    product,
    simulate,
    tick,
    unfold,
    validate_cluster,
    wheel_cluster_cycle,
)
from cmoore.errors import BudgetError, InputDomainError, UnsupportedStructureError
from cmoore.machine import Automaton
from cmoore.menagerie import chain, state_names, synapse, wheel


def wheels_within_wheels(inner=(3, 5), policy="union"):
    outer = wheel(len(inner))
    nodes = tuple(
        (outer.states[i], ClusterNode.leaf(wheel(k))) for i, k in enumerate(inner)
    )
    return ClusterNode(outer, scale=1, inner=nodes, tick_policy=policy)


def first_return_oracle(outer_size, inner_sizes):
    """Oracle: modular unfolding of positions, independent of the tick
    machinery."""
    positions = [0] * len(inner_sizes)
    outer = 0
    t = 0
    while True:
        t += 1
        fired = False
        for i, size in enumerate(inner_sizes):
            positions[i] = (positions[i] + 1) % size
            if positions[i] == size - 1:
                fired = True
        if fired:
            outer = (outer + 1) % outer_size
        if outer == 0 and not any(positions):
            return t


class TestScaleSystem:
    def test_modern_windows_are_decimal(self):
        scales = ScaleSystem.modern()
        assert scales.branching(1) == 10
        assert scales.units(2, 0) == 100
        assert scales.units(0, 0) == 1

    def test_naive_preset(self):
        scales = ScaleSystem.naive()
        assert (scales.min_scale, scales.max_scale) == (-1, 5)
        assert scales.branching(0) == 100
        assert scales.branching(2) == 96
        assert scales.label(2) == "day"
        # full gamut: instants per aeon, a rough-order-of-magnitude check
        assert 1e12 < scales.units(5, -1) < 1e14

    def test_bounds_are_validated(self):
        with pytest.raises(ValueError):
            ScaleSystem(min_scale=3, max_scale=3)
        with pytest.raises(InputDomainError):
            ScaleSystem.modern().branching(19)


class TestClusterNode:
    def test_inner_scale_must_be_strictly_faster(self):
        with pytest.raises(ValueError):
            ClusterNode(
                wheel(2),
                scale=1,
                inner=(("a", ClusterNode(wheel(3), scale=1, tick_policy="external")),),
            )

    def test_union_policy_needs_an_inner_node(self):
        with pytest.raises(ValueError):
            ClusterNode(wheel(2), scale=1, tick_policy="union")

    def test_validate_wheels_within_wheels_is_clean(self):
        assert validate_cluster(wheels_within_wheels()) == []

    def test_validate_flags_scale_bounds(self):
        node = ClusterNode(
            wheel(2),
            scale=-18,
            inner=(("a", ClusterNode.leaf(wheel(3), scale=-19)),),
        )
        rules = {v.rule for v in validate_cluster(node)}
        assert "scale-bounds" in rules

    def test_validate_reports_layer_budgets(self):
        node = ClusterNode.leaf(wheel(30))
        from cmoore.machine import Constraints

        report = validate_cluster(node, constraints=Constraints(max_states=10))
        assert [v.rule for v in report] == ["ss"]


class TestTick:
    def test_union_keeps_outer_states_balanced(self):
        report = simulate(wheels_within_wheels(), 100_000)
        occupancy = report.occupancy()
        assert 0.45 <= occupancy["a"] <= 0.55
        assert 0.45 <= occupancy["b"] <= 0.55
        assert not report.halted

    def test_union_balance_even_for_non_coprime_wheels(self):
        report = simulate(wheels_within_wheels(inner=(4, 6)), 90_000)
        occupancy = report.occupancy()
        assert 0.45 <= occupancy["a"] <= 0.55

    def test_external_policy_just_advances_the_outer_machine(self):
        node = ClusterNode.leaf(wheel(3))
        state = initial_state(node)
        state, result = tick(state, node)
        assert result.advanced
        assert state.current == "b"
        assert state.ticks == 1

    def test_current_state_policy_advances_every_k_ticks(self):
        k = 3
        outer = wheel(2)
        node = ClusterNode(
            outer,
            scale=1,
            inner=(
                ("a", ClusterNode.leaf(wheel(k))),
                ("b", ClusterNode.leaf(wheel(k))),
            ),
            tick_policy="current-state",
        )
        state = initial_state(node)
        advances = []
        for t in range(1, 40):
            state, result = tick(state, node)
            if result.advanced:
                advances.append(t)
        gaps = [b - a for a, b in zip(advances, advances[1:])]
        assert all(gap == k for gap in gaps[2:])  # steady state after the fresh copies

    def test_current_state_without_driver_is_a_fixed_point(self):
        node = ClusterNode(
            wheel(2),
            scale=1,
            inner=(("b", ClusterNode.leaf(wheel(2))),),
            tick_policy="current-state",
        )
        state = initial_state(node)
        state2, result = tick(state, node)
        assert state2 == state
        assert not result.advanced and not result.halted

    def test_inner_machines_persist_across_outer_transitions(self):
        node = wheels_within_wheels(inner=(3, 5))
        state = initial_state(node)
        for _ in range(4):
            state, _ = tick(state, node)
        # the wheel inside "b" has been running the whole time, not resetting
        assert state.child("b").ticks == 4

    def test_halted_component_halts_the_cluster(self):
        node = ClusterNode(
            wheel(2),
            scale=1,
            inner=(("a", ClusterNode.leaf(chain(3))),),
            tick_policy="union",
        )
        report = simulate(node, 10)
        assert report.halted
        assert report.ticks_run < 10

    def test_tick_is_deterministic(self):
        node = wheels_within_wheels()
        s1 = initial_state(node)
        s2 = initial_state(node)
        for _ in range(20):
            s1, _ = tick(s1, node)
            s2, _ = tick(s2, node)
            assert s1 == s2

    def test_nondeterministic_component_rejected(self):
        node = ClusterNode.leaf(wheel(2, loops=("a",)))
        with pytest.raises(UnsupportedStructureError):
            tick(initial_state(node), node)


class TestCycleLength:
    def test_two_three_five(self):
        result = cycle_length(wheels_within_wheels(inner=(3, 5)))
        assert result.base_ticks == first_return_oracle(2, [3, 5]) == 30
        assert result.verified

    def test_single_wheel(self):
        node = ClusterNode.leaf(wheel(7))
        assert cycle_length(node).base_ticks == 7

    def test_trivial_outer(self):
        outer = wheel(1)
        node = ClusterNode(
            outer, scale=1, inner=(("a", ClusterNode.leaf(wheel(7))),), tick_policy="union"
        )
        assert cycle_length(node).base_ticks == 7

    def test_non_coprime_sizes_counted_by_sieve(self):
        assert wheel_cluster_cycle(2, [4, 6]) == first_return_oracle(2, [4, 6])
        assert wheel_cluster_cycle(3, [6, 10, 15]) == first_return_oracle(3, [6, 10, 15])

    def test_random_clusters_match_the_oracle(self):
        rng = Random(99)
        checked = 0
        while checked < 12:
            outer = rng.randint(1, 12)
            inner = [rng.randint(2, 30) for _ in range(rng.randint(1, 3))]
            analytic = wheel_cluster_cycle(outer, inner)
            if analytic > 60_000:
                continue
            assert analytic == first_return_oracle(outer, inner), (outer, inner)
            checked += 1

    def test_non_wheel_component_rejected(self):
        node = ClusterNode(
            wheel(2),
            scale=1,
            inner=(("a", ClusterNode.leaf(wheel(3, loops=("a",)))),),
            tick_policy="union",
        )
        with pytest.raises(UnsupportedStructureError):
            cycle_length(node)

    def test_deeper_nesting_rejected(self):
        mid = ClusterNode(
            wheel(2), scale=1, inner=(("a", ClusterNode.leaf(wheel(3))),), tick_policy="union"
        )
        top = ClusterNode(wheel(2), scale=2, inner=(("a", mid),), tick_policy="union")
        with pytest.raises(UnsupportedStructureError):
            cycle_length(top)

    def test_prime_power_construction_is_astronomical(self):
        sizes = max_prime_power_sizes(10_000)
        assert len(sizes) == 1229
        for expected in (8192, 6561, 3125, 2401, 1331, 2197):
            assert expected in sizes
        value = wheel_cluster_cycle(len(sizes), sizes)
        assert digit_count(value) > 4348

    def test_budget_error_for_huge_non_coprime_windows(self):
        with pytest.raises(BudgetError):
            wheel_cluster_cycle(2, [2 * p for p in (3, 5, 7, 11, 13, 17, 19, 23)], count_budget=10_000)


class TestClassify:
    def test_wheels_are_cyclic(self):
        for k in (1, 2, 7, 60):
            assert classify(wheel(k)) == TemporalClass("C", k)

    def test_chains_are_limited(self):
        for k in (1, 2, 5, 60):
            assert classify(chain(k)) == TemporalClass("L", k)

    def test_chain_with_absorbing_end_stays_limited(self):
        end = state_names(4)[-1]
        assert classify(chain(4, loops=(end,))) == TemporalClass("L", 4)

    def test_product_of_cycle_and_chain(self):
        assert classify(product(wheel(3), chain(4))).family == "L"
        looped_end = chain(4, loops=(state_names(4)[-1],))
        assert classify(product(wheel(3), looped_end)).family == "C"

    def test_small_products(self):
        assert classify(product(wheel(1), wheel(1))) == TemporalClass("C", 2)
        assert classify(product(chain(2), chain(2))) == TemporalClass("L", 2)

    def test_horizon_turns_large_cycles_effectively_infinite(self):
        result = classify(wheel(9), horizon=5)
        assert result == TemporalClass("Z", effective=True)
        chain_result = classify(chain(9), horizon=5)
        assert chain_result == TemporalClass("N", effective=True)

    def test_declared_openness(self):
        assert classify(wheel(3), open_start=True) == TemporalClass("P")
        assert classify(wheel(3), open_end=True) == TemporalClass("N")
        assert classify(wheel(3), open_start=True, open_end=True) == TemporalClass("Z")

    def test_nondeterministic_machines_rejected(self):
        with pytest.raises(UnsupportedStructureError):
            classify(wheel(3, loops=("a",)))

    def test_str_forms(self):
        assert str(TemporalClass("C", 7)) == "C(7)"
        assert str(TemporalClass("L", 5)) == "L(5)"
        assert str(TemporalClass("Z")) == "Z"


class TestBisimilar:
    def test_four_wheel_does_not_bisimulate_two_wheel(self):
        assert not bisimilar(wheel(4), wheel(2)).equivalent

    def test_isomorphic_relabeling_is_bisimilar(self):
        m = wheel(3)
        renamed = Automaton.make(
            "renamed",
            ["p", "q", "r"],
            ["t"],
            "p",
            {"r": "1"},
            [("p", "t", "q"), ("q", "t", "r"), ("r", "t", "p")],
        )
        assert bisimilar(m, renamed).equivalent

    def test_one_state_loop_equals_its_canonical_cycle(self):
        assert bisimilar(wheel(1), canonical_machine(TemporalClass("C", 1))).equivalent

    def test_classified_machines_match_their_canonical_representatives(self):
        for k in (1, 2, 5, 17):
            assert bisimilar(wheel(k), canonical_machine(classify(wheel(k)))).equivalent
            assert bisimilar(chain(k), canonical_machine(classify(chain(k)))).equivalent

    def test_is_an_equivalence_on_a_menagerie_sample(self):
        sample = [wheel(1), wheel(2), wheel(3), wheel(4), chain(2), chain(3), chain(4)]
        sample += [wheel(2, loops=("a",)), chain(2, loops=("a",)), wheel(6), chain(6)]
        for m in sample:
            assert bisimilar(m, m).equivalent  # reflexive
        for m in sample:
            for n in sample:
                assert bisimilar(m, n).equivalent == bisimilar(n, m).equivalent  # symmetric
        for m in sample:
            for n in sample:
                for o in sample:
                    if bisimilar(m, n).equivalent and bisimilar(n, o).equivalent:
                        assert bisimilar(m, o).equivalent  # transitive

    def test_witness_partition_covers_both_machines(self):
        result = bisimilar(wheel(2), wheel(2))
        nodes = {member for block in result.partition for member in block}
        assert nodes == {("left", "a"), ("left", "b"), ("right", "a"), ("right", "b")}

    def test_needs_unary_machines(self):
        with pytest.raises(UnsupportedStructureError):
            bisimilar(synapse(), wheel(4))


class TestUnfoldAndSerialization:
    def test_unfold_of_a_product_is_deterministic_unary(self):
        machine = unfold(product(wheel(3), wheel(5)))
        assert machine.inputs == ("e",)
        assert machine.deterministic
        assert len(machine.states) == 30  # full configuration cycle

    def test_unfold_budget(self):
        with pytest.raises(BudgetError):
            unfold(product(wheel(7), wheel(11)), budget=10)

    def test_cluster_json_round_trip(self):
        node = wheels_within_wheels()
        text = node_to_json(node)
        again = node_from_json(text)
        assert node_to_json(again) == text
        assert again == node

    def test_product_scale_bounds(self):
        with pytest.raises(InputDomainError):
            product(wheel(2), wheel(2), scale=18)
