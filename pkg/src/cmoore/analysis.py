"""Occupancy statistics, stationary behavior, distribution approximation,
and synchronizing-word search.

Two distinct occupancy notions live here and are deliberately kept apart:

* path-count occupancy treats nondeterminism as free choice and reports, for
  each state, the fraction of equal-length input paths that end there;
* stationary occupancy treats nondeterminism probabilistically (uniform
  choice among successors) and reports the long-run distribution of the
  induced Markov chain.

For the looped 2-wheel the two disagree (golden-ratio 0.618... versus 2/3),
and that contrast is part of the contract.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from random import Random
from typing import Sequence

from .errors import (
    AmbiguousChainError,
    BudgetError,
    HaltedError,
    InfeasibleError,
    InputDomainError,
    UnsupportedStructureError,
)
from .machine import Automaton, Constraints
from .menagerie import annotate_outputs, wheel

EXACT_PATH_LIMIT = 200
SUBSET_SEARCH_LIMIT = 20
PAIR_GRAPH_LIMIT = 500


@dataclass(frozen=True)
class OccupancyVector:
    """Per-state occupancy fractions; exact rationals or floats summing to 1."""

    entries: tuple[tuple[str, Fraction | float], ...]
    horizon: int | None
    exact: bool

    def __post_init__(self):
        total = sum(value for _, value in self.entries)
        if self.exact:
            if total != 1:
                raise ValueError(f"exact occupancy must sum to 1, got {total}")
        elif abs(total - 1.0) > 1e-12:
            raise ValueError(f"occupancy must sum to 1 within 1e-12, got {total!r}")

    def as_dict(self) -> dict[str, Fraction | float]:
        return dict(self.entries)

    def __getitem__(self, state: str) -> Fraction | float:
        return self.as_dict()[state]


def signal_occupancy(vector: OccupancyVector, automaton: Automaton) -> dict[str, Fraction | float]:
    """Aggregate state occupancy by output signal; silence keys as ""."""
    totals: dict[str, Fraction | float] = {}
    for state, value in vector.entries:
        signal = automaton.output_of(state)
        totals[signal] = totals.get(signal, 0) + value
    return totals


def _unary_symbol(automaton: Automaton) -> str:
    if len(automaton.inputs) != 1:
        raise UnsupportedStructureError(
            f"{automaton.name}: a unary input alphabet is required, got {len(automaton.inputs)} symbols"
        )
    return automaton.inputs[0]


def _successor_indices(automaton: Automaton, symbol: str) -> list[list[int]]:
    index = {q: i for i, q in enumerate(automaton.states)}
    table: list[list[int]] = [[] for _ in automaton.states]
    for q in automaton.states:
        table[index[q]] = [index[s] for s in automaton.successors(q, symbol)]
    return table


def path_count_occupancy(automaton: Automaton, steps: int) -> OccupancyVector:
    """Fraction of length-``steps`` paths from the initial state ending in
    each state.

    Counts are exact big integers up to ``EXACT_PATH_LIMIT`` steps, where the
    result is a vector of exact rationals; beyond that the count vector is
    renormalized each step in floating point to dodge overflow of the
    (typically exponential) path totals.
    """
    if steps < 0:
        raise InputDomainError(f"steps must be >= 0, got {steps}")
    symbol = _unary_symbol(automaton)
    succ = _successor_indices(automaton, symbol)
    n = len(automaton.states)
    start = automaton.states.index(automaton.initial)
    exact = steps <= EXACT_PATH_LIMIT
    counts: list = [0] * n
    counts[start] = 1 if exact else 1.0
    for t in range(steps):
        new: list = [0] * n if exact else [0.0] * n
        for p, c in enumerate(counts):
            if c:
                for q in succ[p]:
                    new[q] += c
        if exact:
            counts = new
            if not any(counts):
                raise HaltedError(f"{automaton.name}: no paths survive past tick {t + 1}")
        else:
            total = math.fsum(new)
            if total == 0.0:
                raise HaltedError(f"{automaton.name}: no paths survive past tick {t + 1}")
            counts = [c / total for c in new]
    if exact:
        total = sum(counts)
        entries = tuple(
            (q, Fraction(counts[i], total)) for i, q in enumerate(automaton.states)
        )
    else:
        total = math.fsum(counts)
        entries = tuple((q, counts[i] / total) for i, q in enumerate(automaton.states))
    return OccupancyVector(entries, horizon=steps, exact=exact)


def _reachable(succ: list[list[int]], start: int) -> set[int]:
    seen = {start}
    queue = deque([start])
    while queue:
        p = queue.popleft()
        for q in succ[p]:
            if q not in seen:
                seen.add(q)
                queue.append(q)
    return seen


def _strong_components(nodes: Sequence[int], succ: list[list[int]]) -> list[list[int]]:
    """Kosaraju's algorithm, iterative so myriad-state cycles don't blow the
    recursion limit."""
    node_set = set(nodes)
    order: list[int] = []
    seen: set[int] = set()
    for root in nodes:
        if root in seen:
            continue
        stack: list[tuple[int, int]] = [(root, 0)]
        seen.add(root)
        while stack:
            node, i = stack.pop()
            if i < len(succ[node]):
                stack.append((node, i + 1))
                nxt = succ[node][i]
                if nxt in node_set and nxt not in seen:
                    seen.add(nxt)
                    stack.append((nxt, 0))
            else:
                order.append(node)
    reverse: dict[int, list[int]] = {n: [] for n in nodes}
    for p in nodes:
        for q in succ[p]:
            if q in node_set:
                reverse[q].append(p)
    assigned: set[int] = set()
    components: list[list[int]] = []
    for root in reversed(order):
        if root in assigned:
            continue
        component = [root]
        assigned.add(root)
        queue = deque([root])
        while queue:
            node = queue.popleft()
            for prev in reverse[node]:
                if prev not in assigned:
                    assigned.add(prev)
                    component.append(prev)
                    queue.append(prev)
        components.append(component)
    return components


def _period(nodes: set[int], succ: list[list[int]]) -> int:
    start = min(nodes)
    level = {start: 0}
    queue = deque([start])
    period = 0
    while queue:
        p = queue.popleft()
        for q in succ[p]:
            if q not in nodes:
                continue
            if q not in level:
                level[q] = level[p] + 1
                queue.append(q)
            else:
                period = math.gcd(period, level[p] + 1 - level[q])
    return abs(period) or 1


def stationary_distribution(
    automaton: Automaton, residual: float = 1e-12, max_rounds: int = 500_000
) -> OccupancyVector:
    """Long-run occupancy under uniform choice among successors.

    The chain is restricted to the states reachable from the initial state;
    a unique closed class must exist there, otherwise the stationary vector
    is ambiguous and the closed classes are reported.  Deterministic cycles
    get an exact uniform answer (the running-average limit); everything else
    is solved by power iteration, averaging over the chain's period so
    periodic classes still converge below the residual.
    """
    symbol = _unary_symbol(automaton)
    succ = _successor_indices(automaton, symbol)
    start = automaton.states.index(automaton.initial)
    reachable = _reachable(succ, start)
    missing = [automaton.states[i] for i in sorted(reachable) if not succ[i]]
    if missing:
        raise InputDomainError(
            f"{automaton.name}: not complete, no successor at {missing[:3]!r}"
        )
    components = _strong_components(sorted(reachable), succ)
    closed = []
    for comp in components:
        comp_set = set(comp)
        if all(q in comp_set for p in comp for q in succ[p]):
            closed.append(comp)
    if len(closed) > 1:
        names = sorted(tuple(automaton.states[i] for i in sorted(comp)) for comp in closed)
        raise AmbiguousChainError(
            f"{automaton.name}: {len(closed)} closed classes: {names}", classes=names
        )
    closed_set = set(closed[0])
    if all(len(succ[p]) == 1 for p in closed_set):
        share = Fraction(1, len(closed_set))
        entries = tuple(
            (q, share if i in closed_set else Fraction(0))
            for i, q in enumerate(automaton.states)
        )
        return OccupancyVector(entries, horizon=None, exact=True)
    members = sorted(closed_set)
    position = {p: k for k, p in enumerate(members)}
    local_succ = [[position[q] for q in succ[p]] for p in members]
    size = len(members)
    period = _period(set(range(size)), local_succ)

    def push(vec: list[float]) -> list[float]:
        out = [0.0] * size
        for p, mass in enumerate(vec):
            if mass:
                share = mass / len(local_succ[p])
                for q in local_succ[p]:
                    out[q] += share
        return out

    v = [1.0 / size] * size
    for _ in range(max_rounds):
        window = [v]
        for _ in range(period):
            window.append(push(window[-1]))
        averaged = [math.fsum(col) / period for col in zip(*window[:period])]
        drift = push(averaged)
        if math.fsum(abs(a - b) for a, b in zip(drift, averaged)) < residual:
            total = math.fsum(averaged)
            entries = tuple(
                (q, averaged[position[i]] / total if i in closed_set else 0.0)
                for i, q in enumerate(automaton.states)
            )
            return OccupancyVector(entries, horizon=None, exact=False)
        v = window[-1]
    raise BudgetError(
        f"{automaton.name}: power iteration did not reach residual {residual} in {max_rounds} rounds"
    )


def monte_carlo_occupancy(automaton: Automaton, steps: int, seed: int) -> OccupancyVector:
    """Visit fractions of a single seeded random run of ``steps`` ticks.

    The initial state counts as an observation, so fractions are over
    ``steps + 1`` instants.  Identical seeds give identical vectors.
    """
    if steps < 1:
        raise InputDomainError(f"steps must be >= 1, got {steps}")
    symbol = _unary_symbol(automaton)
    succ = _successor_indices(automaton, symbol)
    rng = Random(seed)
    counts = [0] * len(automaton.states)
    current = automaton.states.index(automaton.initial)
    counts[current] = 1
    for t in range(steps):
        options = succ[current]
        if not options:
            seen = t + 1
            partial = OccupancyVector(
                tuple((q, counts[i] / seen) for i, q in enumerate(automaton.states)),
                horizon=t,
                exact=False,
            )
            raise HaltedError(
                f"{automaton.name}: halted after {t} of {steps} ticks", partial=partial
            )
        current = options[0] if len(options) == 1 else options[rng.randrange(len(options))]
        counts[current] += 1
    total = steps + 1
    entries = tuple((q, counts[i] / total) for i, q in enumerate(automaton.states))
    return OccupancyVector(entries, horizon=steps, exact=False)


@dataclass(frozen=True)
class FiniteDistribution:
    """A finite probability distribution over named outcomes."""

    outcomes: tuple[str, ...]
    probabilities: tuple[Fraction, ...]

    def __post_init__(self):
        if not self.outcomes:
            raise ValueError("a distribution needs at least one outcome")
        if len(set(self.outcomes)) != len(self.outcomes):
            raise ValueError("outcome labels must be distinct")
        if any(not label for label in self.outcomes):
            raise ValueError("outcome labels must be non-empty")
        if len(self.outcomes) != len(self.probabilities):
            raise ValueError("one probability per outcome")
        if any(p < 0 for p in self.probabilities):
            raise ValueError("probabilities must be non-negative")
        if sum(self.probabilities) != 1:
            raise ValueError(f"probabilities must sum to 1, got {sum(self.probabilities)}")

    @classmethod
    def make(cls, pairs) -> "FiniteDistribution":
        outcomes = tuple(label for label, _ in pairs)
        probabilities = tuple(Fraction(p) for _, p in pairs)
        return cls(outcomes, probabilities)

    @classmethod
    def parse(cls, text: str, outcomes: Sequence[str] | None = None) -> "FiniteDistribution":
        """Parse "0.5,0.3,0.2" into exact rationals; labels default to 1..r."""
        probabilities = tuple(Fraction(part.strip()) for part in text.split(","))
        labels = tuple(outcomes) if outcomes else tuple(str(i + 1) for i in range(len(probabilities)))
        return cls(labels, probabilities)


def approximate_distribution(
    distribution: FiniteDistribution,
    epsilon: Fraction | float,
    constraints: Constraints | None = None,
) -> Automaton:
    """Smallest labeled wheel whose per-signal cycle occupancy matches the
    distribution within ``epsilon`` componentwise.

    Scans wheel sizes upward, apportioning states by largest remainder; if
    no size within the state budget reaches ``epsilon`` the error reports the
    best achievable value.
    """
    eps = Fraction(epsilon)
    if eps <= 0:
        raise InputDomainError(f"epsilon must be > 0, got {epsilon}")
    c = constraints or Constraints()
    probs = distribution.probabilities
    r = len(probs)
    best_err: Fraction | None = None
    best_size = 0
    for k in range(max(r, 1), c.max_states + 1):
        counts = _largest_remainder(probs, k)
        err = max(abs(Fraction(counts[i], k) - probs[i]) for i in range(r))
        if err <= eps:
            machine = wheel(k, name=f"dist-wheel-{k}")
            labels = {}
            cursor = 0
            for i, count in enumerate(counts):
                for state in machine.states[cursor : cursor + count]:
                    labels[state] = distribution.outcomes[i]
                cursor += count
            return annotate_outputs(machine, labels)
        if best_err is None or err < best_err:
            best_err, best_size = err, k
    raise InfeasibleError(
        f"no wheel of size <= {c.max_states} reaches epsilon {eps}; "
        f"best achievable is {float(best_err):.3e} at size {best_size}",
        best_epsilon=best_err,
        best_size=best_size,
    )


def _largest_remainder(probs: tuple[Fraction, ...], k: int) -> list[int]:
    scaled = [p * k for p in probs]
    counts = [int(s) for s in scaled]  # floors; probabilities are non-negative
    leftovers = k - sum(counts)
    order = sorted(range(len(probs)), key=lambda i: (counts[i] - scaled[i], i))
    for i in order[:leftovers]:
        counts[i] += 1
    return counts


@dataclass(frozen=True)
class SyncResult:
    """A synchronizing word plus where it funnels the machine."""

    word: tuple[str, ...]
    sink: str
    sink_is_initial: bool
    shortest: bool


def synchronizing_word(
    automaton: Automaton,
    subset_limit: int = SUBSET_SEARCH_LIMIT,
    budget: int = 1_000_000,
) -> SyncResult | None:
    """Find a word driving every state to one common state, or None.

    Machines up to ``subset_limit`` states get a breadth-first search over
    state subsets and therefore a shortest word; larger machines fall back to
    greedy pair merging, flagged as not necessarily shortest.  Note the
    reached sink need not be the initial state; the result records whether
    it is.
    """
    if not automaton.deterministic or not automaton.complete:
        raise InputDomainError(
            f"{automaton.name}: synchronizing-word search needs a deterministic complete machine"
        )
    n = len(automaton.states)
    if n == 1:
        return SyncResult((), automaton.initial, True, True)
    if n > PAIR_GRAPH_LIMIT:
        raise BudgetError(
            f"{automaton.name}: {n} states exceed the pair-graph budget {PAIR_GRAPH_LIMIT}"
        )
    states = automaton.states
    move = {
        (q, sym): automaton.successors(q, sym)[0] for q in states for sym in automaton.inputs
    }
    merge_step = _pair_merge_table(automaton, move)
    if merge_step is None:
        return None
    if n <= subset_limit:
        word = _subset_search(automaton, move, budget)
        shortest = True
    else:
        word = _greedy_merge(automaton, move, merge_step)
        shortest = False
    image = set(states)
    for sym in word:
        image = {move[(q, sym)] for q in image}
    (sink,) = image
    return SyncResult(tuple(word), sink, sink == automaton.initial, shortest)


def _pair_merge_table(automaton, move):
    """Per unordered state pair, the first symbol of a shortest merging word.

    Built by backward breadth-first search from already-merged pairs; returns
    None when some pair can never merge (the machine is not synchronizing).
    Pairs are normalized by state index, never by name order.
    """
    states = automaton.states
    symbols = automaton.inputs
    index = {q: i for i, q in enumerate(states)}

    def norm(a, b):
        return (a, b) if index[a] < index[b] else (b, a)

    pairs = [(p, q) for i, p in enumerate(states) for q in states[i + 1 :]]
    incoming: dict[tuple[str, str], list[tuple[tuple[str, str], str]]] = {}
    merged_sources: list[tuple[tuple[str, str], str]] = []
    for pair in pairs:
        p, q = pair
        for sym in symbols:
            a, b = move[(p, sym)], move[(q, sym)]
            if a == b:
                merged_sources.append((pair, sym))
            else:
                incoming.setdefault(norm(a, b), []).append((pair, sym))
    step: dict[tuple[str, str], str] = {}
    queue = deque()
    for pair, sym in merged_sources:
        if pair not in step:
            step[pair] = sym
            queue.append(pair)
    while queue:
        target = queue.popleft()
        for pair, sym in incoming.get(target, ()):
            if pair not in step:
                step[pair] = sym
                queue.append(pair)
    if len(step) != len(pairs):
        return None
    return step


def _subset_search(automaton, move, budget):
    full = frozenset(automaton.states)
    parents: dict[frozenset, tuple[frozenset | None, str | None]] = {full: (None, None)}
    queue = deque([full])
    while queue:
        subset = queue.popleft()
        if len(subset) == 1:
            word: list[str] = []
            node = subset
            while True:
                prev, sym = parents[node]
                if prev is None:
                    break
                word.append(sym)
                node = prev
            return list(reversed(word))
        for sym in automaton.inputs:
            image = frozenset(move[(q, sym)] for q in subset)
            if image not in parents:
                parents[image] = (subset, sym)
                queue.append(image)
                if len(parents) > budget:
                    raise BudgetError(
                        f"{automaton.name}: subset search exceeded {budget} subsets"
                    )
    raise BudgetError(f"{automaton.name}: subset search exhausted unexpectedly")


def _greedy_merge(automaton, move, merge_step):
    index = {q: i for i, q in enumerate(automaton.states)}
    current = set(automaton.states)
    word: list[str] = []
    while len(current) > 1:
        p, q = sorted(current, key=index.__getitem__)[:2]
        while p != q:
            sym = merge_step[(p, q) if index[p] < index[q] else (q, p)]
            word.append(sym)
            current = {move[(s, sym)] for s in current}
            p, q = move[(p, sym)], move[(q, sym)]
    return word
