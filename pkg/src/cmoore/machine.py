"""Moore machine substrate: representation, structural limits, execution.

Every machine in this package is a Moore transducer.  States carry output
strings (the empty string is the silent output, conventionally printed as the
blank symbol "0"), transitions are set-valued so partial and nondeterministic
machines are first-class values, and execution reads the output of a state on
entry.  Machines are immutable after construction; every operation here is a
pure function.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from random import Random
from typing import Iterable, Mapping

from .errors import InputDomainError

TICK = "e"
IMPULSE = "1"
SILENT = ""
BLANK_GLYPH = "0"


@dataclass(frozen=True)
class Constraints:
    """Structural budgets applied per machine layer.

    The degree bounds are exclusive: a state is legal while its out-degree
    stays strictly below ``max_out_degree`` (counting each (symbol, successor)
    edge) and its in-degree strictly below ``max_in_degree``.
    """

    max_states: int = 10_000
    max_alphabet: int = 256
    max_out_degree: int = 8
    max_in_degree: int = 10_000

    def __post_init__(self):
        for field in ("max_states", "max_alphabet", "max_out_degree", "max_in_degree"):
            value = getattr(self, field)
            if not isinstance(value, int) or value < 1:
                raise ValueError(f"{field} must be a positive integer, got {value!r}")


@dataclass(frozen=True)
class Violation:
    rule: str  # one of ss, io, od, id
    subject: str
    detail: str


@dataclass(frozen=True)
class Automaton:
    """A Moore machine over string-valued states, symbols, and outputs.

    ``outputs`` stores only non-silent states, in state order; ``edges`` keep
    their construction order, which makes serialization round-trips stable.
    """

    name: str
    states: tuple[str, ...]
    inputs: tuple[str, ...]
    initial: str
    outputs: tuple[tuple[str, str], ...] = ()
    edges: tuple[tuple[str, str, str], ...] = ()

    def __post_init__(self):
        if not self.states:
            raise ValueError("a machine needs at least one state")
        if len(set(self.states)) != len(self.states):
            raise ValueError("duplicate state identifiers")
        if not self.inputs:
            raise ValueError("the input alphabet needs at least one symbol")
        if len(set(self.inputs)) != len(self.inputs):
            raise ValueError("duplicate input symbols")
        known = set(self.states)
        symbols = set(self.inputs)
        if self.initial not in known:
            raise ValueError(f"initial state {self.initial!r} is not a state")
        for state, _ in self.outputs:
            if state not in known:
                raise ValueError(f"output attached to unknown state {state!r}")
        if len(set(self.edges)) != len(self.edges):
            raise ValueError("duplicate edges")
        for src, sym, dst in self.edges:
            if src not in known or dst not in known:
                raise ValueError(f"edge {(src, sym, dst)!r} touches an unknown state")
            if sym not in symbols:
                raise ValueError(f"edge {(src, sym, dst)!r} uses an unknown symbol")

    @classmethod
    def make(
        cls,
        name: str,
        states: Iterable[str],
        inputs: Iterable[str],
        initial: str,
        outputs: Mapping[str, str] | None = None,
        edges: Iterable[tuple[str, str, str]] = (),
    ) -> "Automaton":
        """Build a machine, normalizing outputs into state order."""
        states = tuple(states)
        order = {q: i for i, q in enumerate(states)}
        out_map = dict(outputs or {})
        for state in out_map:
            if state not in order:
                raise ValueError(f"output attached to unknown state {state!r}")
        normalized = tuple(
            (q, out_map[q]) for q in states if out_map.get(q, SILENT) != SILENT
        )
        return cls(
            name=name,
            states=states,
            inputs=tuple(inputs),
            initial=initial,
            outputs=normalized,
            edges=tuple((src, sym, dst) for src, sym, dst in edges),
        )

    def __repr__(self):
        return (
            f"Automaton({self.name!r}, states={len(self.states)}, "
            f"inputs={len(self.inputs)}, edges={len(self.edges)})"
        )

    @cached_property
    def _state_index(self) -> dict[str, int]:
        return {q: i for i, q in enumerate(self.states)}

    @cached_property
    def _delta(self) -> dict[tuple[str, str], tuple[str, ...]]:
        """Successors per (state, symbol), ordered by state index."""
        raw: dict[tuple[str, str], list[str]] = {}
        for src, sym, dst in self.edges:
            raw.setdefault((src, sym), []).append(dst)
        index = self._state_index
        return {key: tuple(sorted(dsts, key=index.__getitem__)) for key, dsts in raw.items()}

    @cached_property
    def output_map(self) -> dict[str, str]:
        mapping = {q: SILENT for q in self.states}
        mapping.update(dict(self.outputs))
        return mapping

    def output_of(self, state: str) -> str:
        if state not in self._state_index:
            raise InputDomainError(f"{self.name}: unknown state {state!r}")
        return self.output_map[state]

    @cached_property
    def output_alphabet(self) -> frozenset[str]:
        """Distinct output strings in use; the silent output counts as blank."""
        return frozenset(self.output_map.values())

    def successors(self, state: str, symbol: str) -> tuple[str, ...]:
        if state not in self._state_index:
            raise InputDomainError(f"{self.name}: unknown state {state!r}")
        if symbol not in self.inputs:
            raise InputDomainError(f"{self.name}: unknown symbol {symbol!r}")
        return self._delta.get((state, symbol), ())

    @cached_property
    def deterministic(self) -> bool:
        return all(len(dsts) <= 1 for dsts in self._delta.values())

    @cached_property
    def complete(self) -> bool:
        return all(
            self._delta.get((q, sym)) for q in self.states for sym in self.inputs
        )

    def out_degree(self, state: str) -> int:
        return sum(1 for src, _, _ in self.edges if src == state)

    def in_degree(self, state: str) -> int:
        return sum(1 for _, _, dst in self.edges if dst == state)


@dataclass(frozen=True)
class RunTrace:
    """States and outputs seen over a run; outputs are read on state entry."""

    visited: tuple[str, ...]
    emitted: tuple[str, ...]
    steps: int
    halted: bool = False


class FirstChooser:
    """Deterministic policy: always take the lowest-indexed successor."""

    def choose(self, successors: tuple[str, ...]) -> str:
        return successors[0]


class RandomChooser:
    """Uniform choice among successors, reproducible from a 64-bit seed."""

    def __init__(self, seed: int):
        self.seed = seed
        self._rng = Random(seed)

    def choose(self, successors: tuple[str, ...]) -> str:
        if len(successors) == 1:
            return successors[0]
        return successors[self._rng.randrange(len(successors))]


def validate(automaton: Automaton, constraints: Constraints | None = None) -> list[Violation]:
    """Check a machine against the per-layer structural budgets.

    Returns an empty report when the machine fits; each violation names the
    rule it breaks (ss: state count, io: alphabet sizes, od: out-degree,
    id: in-degree) and the offending state or alphabet.
    """
    c = constraints or Constraints()
    report: list[Violation] = []
    if len(automaton.states) > c.max_states:
        report.append(
            Violation("ss", automaton.name, f"{len(automaton.states)} states exceed {c.max_states}")
        )
    if len(automaton.inputs) > c.max_alphabet:
        report.append(
            Violation("io", "input-alphabet", f"{len(automaton.inputs)} symbols exceed {c.max_alphabet}")
        )
    if len(automaton.output_alphabet) > c.max_alphabet:
        report.append(
            Violation(
                "io",
                "output-alphabet",
                f"{len(automaton.output_alphabet)} symbols exceed {c.max_alphabet}",
            )
        )
    out_deg = Counter(src for src, _, _ in automaton.edges)
    in_deg = Counter(dst for _, _, dst in automaton.edges)
    for q in automaton.states:
        if out_deg[q] >= c.max_out_degree:
            report.append(Violation("od", q, f"out-degree {out_deg[q]} >= {c.max_out_degree}"))
    for q in automaton.states:
        if in_deg[q] >= c.max_in_degree:
            report.append(Violation("id", q, f"in-degree {in_deg[q]} >= {c.max_in_degree}"))
    return report


def step(automaton: Automaton, state: str, symbol: str) -> tuple[tuple[str, str], ...]:
    """One elementary move: (successor, output emitted on entering it) pairs.

    An empty result means the partial machine halts at this configuration.
    """
    return tuple(
        (nxt, automaton.output_of(nxt)) for nxt in automaton.successors(state, symbol)
    )


def run(automaton: Automaton, symbols: Iterable[str], chooser=None) -> RunTrace:
    """Feed a symbol sequence from the initial state and record the trace.

    Nondeterministic branch points need a chooser; halting (an empty
    successor set) truncates the trace and sets the halt flag.
    """
    current = automaton.initial
    visited = [current]
    emitted = [automaton.output_of(current)]
    steps = 0
    halted = False
    for symbol in symbols:
        successors = automaton.successors(current, symbol)
        if not successors:
            halted = True
            break
        if len(successors) == 1:
            current = successors[0]
        elif chooser is None:
            raise InputDomainError(
                f"{automaton.name}: nondeterministic choice at {current!r} requires a chooser"
            )
        else:
            current = chooser.choose(successors)
        steps += 1
        visited.append(current)
        emitted.append(automaton.output_of(current))
    return RunTrace(tuple(visited), tuple(emitted), steps, halted)


def transition_matrix(automaton: Automaton, symbol: str) -> list[list[int]]:
    """Edge-count matrix for one symbol; entry (p, q) counts edges p -> q."""
    if symbol not in automaton.inputs:
        raise InputDomainError(f"{automaton.name}: unknown symbol {symbol!r}")
    index = automaton._state_index
    n = len(automaton.states)
    matrix = [[0] * n for _ in range(n)]
    for src, sym, dst in automaton.edges:
        if sym == symbol:
            matrix[index[src]][index[dst]] += 1
    return matrix


def to_dot(automaton: Automaton) -> str:
    """Render the machine as a DOT digraph.

    Parallel edges between the same pair of states collapse into a single
    arrow labeled with all of their symbols; signaling states are annotated
    with their output and drawn as double circles.
    """
    lines = [f'digraph "{automaton.name}" {{', "  rankdir=LR;"]
    for q in automaton.states:
        out = automaton.output_map[q]
        label = q if out == SILENT else f"{q} / {out}"
        shape = "doublecircle" if out != SILENT else "circle"
        style = ", style=bold" if q == automaton.initial else ""
        lines.append(f'  "{q}" [label="{label}", shape={shape}{style}];')
    grouped: dict[tuple[str, str], list[str]] = {}
    for src, sym, dst in automaton.edges:
        grouped.setdefault((src, dst), []).append(sym)
    symbol_order = {sym: i for i, sym in enumerate(automaton.inputs)}
    for (src, dst), syms in grouped.items():
        label = ",".join(sorted(syms, key=symbol_order.__getitem__))
        lines.append(f'  "{src}" -> "{dst}" [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_doc(automaton: Automaton) -> dict:
    """The CMA-JSON document form of a machine."""
    return {
        "name": automaton.name,
        "states": list(automaton.states),
        "initial": automaton.initial,
        "inputs": list(automaton.inputs),
        "outputs": {q: out for q, out in automaton.outputs},
        "edges": [list(edge) for edge in automaton.edges],
    }


def from_doc(doc: Mapping) -> Automaton:
    try:
        return Automaton.make(
            name=doc["name"],
            states=doc["states"],
            inputs=doc["inputs"],
            initial=doc["initial"],
            outputs=doc.get("outputs", {}),
            edges=[tuple(edge) for edge in doc.get("edges", [])],
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed machine document: {exc}") from exc


def to_json(automaton: Automaton) -> str:
    return json.dumps(to_doc(automaton), indent=2, ensure_ascii=False) + "\n"


def from_json(text: str) -> Automaton:
    return from_doc(json.loads(text))
