"""Clustered machines: recursive nesting across timescales.

A cluster node wraps a Moore machine at some timescale; its states may hold
inner nodes running strictly faster.  One elementary tick always enters at
the leaves, and a node consumes a tick of its own whenever its driving inner
machinery emits a non-silent output (several simultaneous emissions coalesce
into one tick).  Inner machines never reset when the outer machine moves.

The module also houses composite cycle lengths (the lcm-based analysis with
a brute-force cross-check), the temporal-structure classifier, and output
bisimulation via partition refinement.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

from . import menagerie
from .errors import BudgetError, InputDomainError, UnsupportedStructureError
from .machine import SILENT, Automaton, Constraints, from_doc, to_doc, validate
from .machine import Violation

TICK_POLICIES = ("external", "union", "current-state")
DEFAULT_HORIZON = 2**64
TEMPORAL_FAMILIES = ("Z", "N", "P", "L", "C")


@dataclass(frozen=True)
class ScaleSystem:
    """Indexed timescales between global bounds, with per-scale branching.

    ``branching(i)`` is how many scale-(i-1) units one scale-i unit contains.
    The modern preset is decimal across the board; the naive preset runs from
    perceptible instants up to aeons with uneven, culturally motivated
    factors (the ones above the day are defaults, not doctrine).
    """

    min_scale: int = -18
    max_scale: int = 18
    default_factor: int = 10
    factors: tuple[tuple[int, int], ...] = ()
    labels: tuple[tuple[int, str], ...] = ()
    name: str = "modern"

    def __post_init__(self):
        if self.min_scale >= self.max_scale:
            raise ValueError("min_scale must be below max_scale")
        for scale, factor in self.factors:
            if not self.min_scale < scale <= self.max_scale:
                raise ValueError(f"branching factor at scale {scale} is out of bounds")
            if not 2 <= factor <= 10_000:
                raise ValueError(f"branching factor {factor} must lie in [2, 10000]")
        if not 2 <= self.default_factor <= 10_000:
            raise ValueError("default branching factor must lie in [2, 10000]")

    @classmethod
    def modern(cls, min_scale: int = -18, max_scale: int = 18) -> "ScaleSystem":
        return cls(min_scale=min_scale, max_scale=max_scale)

    @classmethod
    def naive(
        cls,
        instants_per_heartbeat: int = 100,
        heartbeats_per_quarter_hour: int = 900,
        quarter_hours_per_day: int = 96,
        days_per_season: int = 96,
        seasons_per_generation: int = 120,
        generations_per_aeon: int = 100,
    ) -> "ScaleSystem":
        return cls(
            min_scale=-1,
            max_scale=5,
            factors=(
                (0, instants_per_heartbeat),
                (1, heartbeats_per_quarter_hour),
                (2, quarter_hours_per_day),
                (3, days_per_season),
                (4, seasons_per_generation),
                (5, generations_per_aeon),
            ),
            labels=(
                (-1, "instant"),
                (0, "heartbeat"),
                (1, "quarter-hour"),
                (2, "day"),
                (3, "season"),
                (4, "generation"),
                (5, "aeon"),
            ),
            name="naive",
        )

    def branching(self, scale: int) -> int:
        if not self.min_scale < scale <= self.max_scale:
            raise InputDomainError(
                f"scale {scale} has no branching factor in [{self.min_scale + 1}, {self.max_scale}]"
            )
        return dict(self.factors).get(scale, self.default_factor)

    def units(self, outer_scale: int, inner_scale: int) -> int:
        """Scale-``inner_scale`` units inside one scale-``outer_scale`` unit."""
        if inner_scale > outer_scale:
            raise InputDomainError("inner scale must not exceed outer scale")
        product = 1
        for scale in range(inner_scale + 1, outer_scale + 1):
            product *= self.branching(scale)
        return product

    def label(self, scale: int) -> str:
        return dict(self.labels).get(scale, f"scale {scale}")


@dataclass(frozen=True)
class ClusterNode:
    """A machine at a timescale whose states may contain faster nodes."""

    machine: Automaton
    scale: int = 0
    inner: tuple[tuple[str, "ClusterNode"], ...] = ()
    tick_policy: str = "union"

    def __post_init__(self):
        if self.tick_policy not in TICK_POLICIES:
            raise ValueError(f"tick_policy must be one of {TICK_POLICIES}")
        known = set(self.machine.states)
        for state, node in self.inner:
            if state not in known:
                raise ValueError(f"inner node attached to unknown state {state!r}")
            if node.scale >= self.scale:
                raise ValueError(
                    f"inner node at scale {node.scale} must run strictly faster than {self.scale}"
                )
        if len({state for state, _ in self.inner}) != len(self.inner):
            raise ValueError("at most one inner node per state")
        if self.tick_policy != "external" and not self.inner:
            raise ValueError(f"tick_policy {self.tick_policy!r} needs at least one inner node")

    @property
    def inner_map(self) -> dict[str, "ClusterNode"]:
        return dict(self.inner)

    @classmethod
    def leaf(cls, machine: Automaton, scale: int = 0) -> "ClusterNode":
        return cls(machine, scale=scale, tick_policy="external")


@dataclass(frozen=True)
class ClusterState:
    """Current state per node, recursively, plus how often this node ticked."""

    current: str
    ticks: int = 0
    children: tuple[tuple[str, "ClusterState"], ...] = ()

    def child(self, state: str) -> "ClusterState":
        return dict(self.children)[state]

    def shape_key(self):
        """Configuration identity: tick counters excluded."""
        return (self.current, tuple((s, c.shape_key()) for s, c in self.children))

    def render(self) -> str:
        if not self.children:
            return self.current
        inside = ",".join(f"{s}={c.render()}" for s, c in self.children)
        return f"{self.current}[{inside}]"


@dataclass(frozen=True)
class TickResult:
    emission: str
    advanced: bool
    halted: bool


def initial_state(node: ClusterNode) -> ClusterState:
    return ClusterState(
        node.machine.initial,
        0,
        tuple((state, initial_state(child)) for state, child in node.inner),
    )


def validate_cluster(
    node: ClusterNode,
    scales: ScaleSystem | None = None,
    constraints: Constraints | None = None,
) -> list[Violation]:
    """Layerwise structural report: per-machine budgets, strict scale
    decrease, and the global scale bounds."""
    scales = scales or ScaleSystem.modern()
    report: list[Violation] = []
    seen: set[int] = set()

    def walk(current: ClusterNode, path: str):
        if id(current) in seen:
            report.append(Violation("scale-strict", path, "cyclic nesting detected"))
            return
        seen.add(id(current))
        for violation in validate(current.machine, constraints):
            report.append(
                Violation(violation.rule, f"{path}:{violation.subject}", violation.detail)
            )
        if not scales.min_scale <= current.scale <= scales.max_scale:
            report.append(
                Violation(
                    "scale-bounds",
                    path,
                    f"scale {current.scale} outside [{scales.min_scale}, {scales.max_scale}]",
                )
            )
        for state, child in current.inner:
            if child.scale >= current.scale:
                report.append(
                    Violation(
                        "scale-strict",
                        f"{path}/{state}",
                        f"inner scale {child.scale} not below {current.scale}",
                    )
                )
            walk(child, f"{path}/{state}")
        seen.discard(id(current))

    walk(node, node.machine.name)
    return report


def _advance(state: ClusterState, node: ClusterNode) -> tuple[ClusterState, TickResult]:
    machine = node.machine
    if len(machine.inputs) != 1:
        raise UnsupportedStructureError(
            f"{machine.name}: cluster simulation drives unary machines only"
        )
    successors = machine.successors(state.current, machine.inputs[0])
    if not successors:
        return state, TickResult(SILENT, False, True)
    if len(successors) > 1:
        raise UnsupportedStructureError(
            f"{machine.name}: nondeterministic at {state.current!r}; cluster ticks need determinism"
        )
    nxt = successors[0]
    new = replace(state, current=nxt, ticks=state.ticks + 1)
    return new, TickResult(machine.output_of(nxt), True, False)


def tick(state: ClusterState, node: ClusterNode) -> tuple[ClusterState, TickResult]:
    """One elementary tick at the fastest driven scale, propagated upward.

    Under the union policy every inner machine advances and the node consumes
    a tick of its own when any of them emits; under current-state only the
    inner machine of the occupied state advances.  A halted component halts
    the whole node (flagged, no further advance on this tick).
    """
    if node.tick_policy == "external" or not node.inner:
        return _advance(state, node)
    child_states = dict(state.children)
    if node.tick_policy == "union":
        fired = False
        halted = False
        new_children = []
        for st, child in node.inner:
            advanced_child, result = tick(child_states[st], child)
            new_children.append((st, advanced_child))
            fired = fired or result.emission != SILENT
            halted = halted or result.halted
        mid = replace(state, children=tuple(new_children))
        if halted:
            return mid, TickResult(SILENT, False, True)
        if not fired:
            return mid, TickResult(SILENT, False, False)
        return _advance(mid, node)
    # current-state: only the occupied state's inner machine is driven.
    driver = node.inner_map.get(state.current)
    if driver is None:
        return state, TickResult(SILENT, False, False)
    advanced_child, result = tick(child_states[state.current], driver)
    new_children = tuple(
        (st, advanced_child if st == state.current else child_states[st])
        for st, _ in node.inner
    )
    mid = replace(state, children=new_children)
    if result.halted:
        return mid, TickResult(SILENT, False, True)
    if result.emission == SILENT:
        return mid, TickResult(SILENT, False, False)
    return _advance(mid, node)


@dataclass(frozen=True)
class SimulationReport:
    ticks_requested: int
    ticks_run: int
    state_counts: tuple[tuple[str, int], ...]
    emissions: int
    halted: bool

    def occupancy(self) -> dict[str, float]:
        if self.ticks_run == 0:
            return {state: 0.0 for state, _ in self.state_counts}
        return {state: count / self.ticks_run for state, count in self.state_counts}


def simulate(node: ClusterNode, ticks: int) -> SimulationReport:
    """Drive a cluster for ``ticks`` base ticks, tallying where the outermost
    machine spends them."""
    if ticks < 0:
        raise InputDomainError(f"ticks must be >= 0, got {ticks}")
    counts = {state: 0 for state in node.machine.states}
    state = initial_state(node)
    emissions = 0
    halted = False
    ran = 0
    for _ in range(ticks):
        state, result = tick(state, node)
        if result.halted:
            halted = True
            break
        ran += 1
        counts[state.current] += 1
        if result.emission != SILENT:
            emissions += 1
    return SimulationReport(
        ticks, ran, tuple(counts.items()), emissions, halted
    )


def _pure_wheel_size(machine: Automaton) -> int | None:
    """Size of the machine if it is one deterministic cycle through all
    states, else None."""
    if len(machine.inputs) != 1:
        return None
    symbol = machine.inputs[0]
    seen = []
    current = machine.initial
    for _ in range(len(machine.states)):
        seen.append(current)
        successors = machine.successors(current, symbol)
        if len(successors) != 1:
            return None
        current = successors[0]
    if current != machine.initial or len(set(seen)) != len(machine.states):
        return None
    return len(machine.states)


def digit_count(value: int) -> int:
    """Exact decimal digit count, safe past the interpreter's int-to-str
    limit."""
    if value < 0:
        raise InputDomainError("digit count is defined for non-negative integers")
    if value == 0:
        return 1
    digits = max(1, int(value.bit_length() * 0.3010299956639812))
    while 10**digits <= value:
        digits += 1
    while digits > 1 and 10 ** (digits - 1) > value:
        digits -= 1
    return digits


def leading_digits(value: int, count: int = 12) -> str:
    total = digit_count(value)
    if total <= count:
        return str(value)
    return str(value // 10 ** (total - count))


@dataclass(frozen=True)
class CycleLength:
    """Exact first-return time of an all-wheel cluster, in base ticks.

    ``digit_count`` carries the magnitude even when the value itself is far
    past anything simulatable; ``verified`` marks values small enough to have
    been cross-checked by direct unfolding.
    """

    base_ticks: int
    digit_count: int
    verified: bool

    def __str__(self):
        if self.digit_count <= 24:
            return str(self.base_ticks)
        return (
            f"{leading_digits(self.base_ticks)}...e{self.digit_count - 1} "
            f"({self.digit_count} digits)"
        )


def wheel_cluster_cycle(
    outer_size: int, inner_sizes: Sequence[int], count_budget: int = 1_000_000
) -> int:
    """Base ticks until an outer wheel with union-driven inner wheels returns
    to its initial configuration.

    The inner configuration recurs every lcm of the inner sizes; within one
    such window the outer wheel advances once per tick on which some inner
    wheel signals, so the first joint return multiplies the window by
    ``outer_size / gcd(advances_per_window, outer_size)``.  For pairwise
    coprime sizes the advance count has a closed form; otherwise it is
    counted by sieve, which requires the window to fit the counting budget.
    """
    if outer_size < 1 or any(size < 1 for size in inner_sizes):
        raise InputDomainError("wheel sizes must be >= 1")
    if not inner_sizes:
        return outer_size
    window = math.lcm(*inner_sizes)
    product = math.prod(inner_sizes)
    if window == product:  # pairwise coprime
        advances = product - math.prod(size - 1 for size in inner_sizes)
    elif window <= count_budget:
        events = bytearray(window)
        for size in inner_sizes:
            if size == 1:
                events = bytearray([1]) * window
                break
            for t in range(size - 1, window + 1, size):
                events[t - 1] = 1
        advances = sum(events)
    else:
        raise BudgetError(
            "inner sizes are not pairwise coprime and their lcm "
            f"{window} exceeds the counting budget {count_budget}"
        )
    return window * (outer_size // math.gcd(advances, outer_size))


def _first_return_by_unfolding(outer_size: int, inner_sizes: Sequence[int]) -> int:
    positions = [0] * len(inner_sizes)
    outer = 0
    t = 0
    while True:
        t += 1
        fired = False
        for i, size in enumerate(inner_sizes):
            p = positions[i] + 1
            if p == size:
                p = 0
            positions[i] = p
            if p == size - 1:
                fired = True
        if fired:
            outer = (outer + 1) % outer_size
        if outer == 0 and not any(positions):
            return t


def cycle_length(node: ClusterNode, verify_budget: int = 1_000_000) -> CycleLength:
    """Exact return time of an all-wheel cluster (analytic, cross-checked).

    Supported shapes: a single wheel, or one outer wheel whose states hold
    leaf wheels under the union policy.  Deeper nesting has no closed-form
    emission pattern here and is rejected.
    """
    outer_size = _pure_wheel_size(node.machine)
    if outer_size is None:
        raise UnsupportedStructureError(
            f"{node.machine.name}: cycle length is defined for pure wheels only"
        )
    if not node.inner:
        return CycleLength(outer_size, digit_count(outer_size), True)
    if node.tick_policy != "union":
        raise UnsupportedStructureError("cycle length assumes the union tick policy")
    inner_sizes = []
    for state, child in node.inner:
        if child.inner:
            raise UnsupportedStructureError(
                "cycle length supports two-level clusters (outer wheel over leaf wheels)"
            )
        size = _pure_wheel_size(child.machine)
        if size is None:
            raise UnsupportedStructureError(
                f"{child.machine.name} (inside {state!r}) is not a pure wheel"
            )
        inner_sizes.append(size)
    value = wheel_cluster_cycle(outer_size, inner_sizes)
    verified = False
    if value <= verify_budget:
        simulated = _first_return_by_unfolding(outer_size, inner_sizes)
        if simulated != value:
            raise AssertionError(
                f"analytic cycle {value} disagrees with simulation {simulated}"
            )
        verified = True
    return CycleLength(value, digit_count(value), verified)


def max_prime_power_sizes(limit: int = 10_000) -> list[int]:
    """For each prime below ``limit``, the largest prime power below it."""
    if limit < 3:
        raise InputDomainError("limit must be at least 3")
    sieve = bytearray([1]) * limit
    sieve[0:2] = b"\x00\x00"
    for p in range(2, int(limit**0.5) + 1):
        if sieve[p]:
            sieve[p * p :: p] = b"\x00" * len(sieve[p * p :: p])
    sizes = []
    for p in range(2, limit):
        if sieve[p]:
            power = p
            while power * p < limit:
                power *= p
            sizes.append(power)
    return sizes


@dataclass(frozen=True)
class TemporalClass:
    """One of the five discrete temporal families.

    ``size`` is the cycle or chain length for the finite families C and L;
    ``effective`` marks finite structures so large (past the horizon) that
    they are reported as their infinite lookalikes.
    """

    family: str
    size: int | None = None
    effective: bool = False

    def __post_init__(self):
        if self.family not in TEMPORAL_FAMILIES:
            raise ValueError(f"family must be one of {TEMPORAL_FAMILIES}")
        if (self.size is not None) != (self.family in ("C", "L")):
            raise ValueError("size is present exactly for the C and L families")

    def __str__(self):
        if self.size is not None:
            return f"{self.family}({self.size})"
        return self.family


def classify(
    target: Automaton | ClusterNode,
    horizon: int = DEFAULT_HORIZON,
    open_start: bool = False,
    open_end: bool = False,
) -> TemporalClass:
    """Classify the temporal structure a machine (or cluster) carries.

    The reachable unary graph must be a chain, possibly ending in a cycle: a
    cycle from the start is C, a halting chain is L, a chain into a terminal
    self-loop is L with an absorbing end, and a chain into a longer cycle is
    eventually cyclic, reported C.  Finite structures beyond the horizon are
    indistinguishable from the infinite families and flagged as effective Z
    (cycles) or N (chains).  Openness at either end cannot be observed by
    finite unfolding, so it is declared: an open start yields P, an open end
    yields N, both give Z.
    """
    if open_start and open_end:
        return TemporalClass("Z")
    if open_start:
        return TemporalClass("P")
    if open_end:
        return TemporalClass("N")
    automaton = unfold(target) if isinstance(target, ClusterNode) else target
    if len(automaton.inputs) != 1:
        raise UnsupportedStructureError(
            f"{automaton.name}: classification needs a unary machine"
        )
    symbol = automaton.inputs[0]
    seen: dict[str, int] = {}
    order: list[str] = []
    current = automaton.initial
    while current not in seen:
        seen[current] = len(order)
        order.append(current)
        successors = automaton.successors(current, symbol)
        if not successors:
            size = len(order)
            if size > horizon:
                return TemporalClass("N", effective=True)
            return TemporalClass("L", size)
        if len(successors) > 1:
            raise UnsupportedStructureError(
                f"{automaton.name}: nondeterministic at {current!r}; classification needs determinism"
            )
        current = successors[0]
    stem = seen[current]
    cycle = len(order) - stem
    if stem > 0 and cycle == 1:
        # A chain that parks in a terminal self-loop stays bounded.
        return TemporalClass("L", len(order))
    if cycle > horizon:
        return TemporalClass("Z", effective=True)
    return TemporalClass("C", cycle)


def canonical_machine(temporal: TemporalClass) -> Automaton:
    """The canonical finite representative: a wheel for C, a chain for L."""
    if temporal.family == "C":
        return menagerie.wheel(temporal.size)
    if temporal.family == "L":
        return menagerie.chain(temporal.size)
    raise InputDomainError(f"{temporal} has no finite canonical representative")


@dataclass(frozen=True)
class BisimulationResult:
    equivalent: bool
    partition: tuple[tuple[tuple[str, str], ...], ...]

    def __bool__(self):
        return self.equivalent


def bisimilar(left: Automaton, right: Automaton) -> BisimulationResult:
    """Output bisimulation between two unary machines.

    Partition refinement runs on the disjoint union, starting from output
    equality and splitting by the set of successor blocks until stable; the
    machines are bisimilar when their initial states share a block.  The
    returned partition is the coarsest one.
    """
    for machine in (left, right):
        if len(machine.inputs) != 1:
            raise UnsupportedStructureError(
                f"{machine.name}: bisimulation needs unary machines"
            )
    nodes = [("left", q) for q in left.states] + [("right", q) for q in right.states]
    machines = {"left": left, "right": right}

    def successors(node):
        side, q = node
        m = machines[side]
        return tuple((side, s) for s in m.successors(q, m.inputs[0]))

    block = {node: machines[node[0]].output_of(node[1]) for node in nodes}
    while True:
        signature = {
            node: (block[node], frozenset(block[s] for s in successors(node)))
            for node in nodes
        }
        relabel: dict = {}
        new_block = {}
        for node in nodes:
            key = signature[node]
            if key not in relabel:
                relabel[key] = len(relabel)
            new_block[node] = relabel[key]
        if len(set(new_block.values())) == len(set(block.values())):
            break
        block = new_block
    groups: dict = {}
    for node in nodes:
        groups.setdefault(block[node], []).append(node)
    partition = tuple(tuple(members) for _, members in sorted(groups.items(), key=str))
    equivalent = block[("left", left.initial)] == block[("right", right.initial)]
    return BisimulationResult(equivalent, partition)


def product(
    left: Automaton,
    right: Automaton,
    scale: int = 0,
    scales: ScaleSystem | None = None,
) -> ClusterNode:
    """Run two machines side by side inside a two-state outer wheel one scale
    up, under the union policy."""
    scales = scales or ScaleSystem.modern()
    if scale + 1 > scales.max_scale or scale < scales.min_scale:
        raise InputDomainError(
            f"product needs scales {scale} and {scale + 1} inside "
            f"[{scales.min_scale}, {scales.max_scale}]"
        )
    outer = menagerie.wheel(2, name=f"product({left.name},{right.name})")
    return ClusterNode(
        outer,
        scale=scale + 1,
        inner=(
            ("a", ClusterNode.leaf(left, scale)),
            ("b", ClusterNode.leaf(right, scale)),
        ),
        tick_policy="union",
    )


def unfold(node: ClusterNode, budget: int = 100_000, name: str | None = None) -> Automaton:
    """Expand a cluster's reachable configurations into a unary machine.

    Each configuration becomes a state (named by its nested rendering) whose
    Moore output is the outer machine's output there; a halted configuration
    simply has no outgoing edge.
    """
    start = initial_state(node)
    names: dict = {start.shape_key(): start.render()}
    order = [start.render()]
    outputs = {start.render(): node.machine.output_of(start.current)}
    edges = []
    frontier = [start]
    while frontier:
        state = frontier.pop()
        successor, result = tick(state, node)
        if result.halted:
            continue
        key = successor.shape_key()
        label = names.get(key)
        if label is None:
            label = successor.render()
            names[key] = label
            order.append(label)
            outputs[label] = node.machine.output_of(successor.current)
            frontier.append(successor)
            if len(names) > budget:
                raise BudgetError(f"unfolding exceeded {budget} configurations")
        edges.append((names[state.shape_key()], "e", label))
    return Automaton.make(
        name or f"unfold({node.machine.name})",
        order,
        ("e",),
        start.render(),
        {label: out for label, out in outputs.items() if out != SILENT},
        edges,
    )


def node_to_doc(node: ClusterNode) -> dict:
    doc = {
        "machine": to_doc(node.machine),
        "scale": node.scale,
        "tick_policy": node.tick_policy,
    }
    if node.inner:
        doc["inner"] = {state: node_to_doc(child) for state, child in node.inner}
    return doc


def node_from_doc(doc: Mapping) -> ClusterNode:
    try:
        inner = tuple(
            (state, node_from_doc(sub)) for state, sub in doc.get("inner", {}).items()
        )
        return ClusterNode(
            machine=from_doc(doc["machine"]),
            scale=doc.get("scale", 0),
            inner=inner,
            tick_policy=doc.get("tick_policy", "external" if not inner else "union"),
        )
    except KeyError as exc:
        raise ValueError(f"malformed cluster document: {exc}") from exc


def node_to_json(node: ClusterNode) -> str:
    return json.dumps(node_to_doc(node), indent=2, ensure_ascii=False) + "\n"


def node_from_json(text: str) -> ClusterNode:
    return node_from_doc(json.loads(text))
