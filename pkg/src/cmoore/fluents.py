"""Two-index instants and fluent truth across timescales.

A fluent is assigned at one base scale and queried upward.  Three semantics
are supported: universal (every base unit in the window is true), existential
(some unit is), and preponderance (a single contiguous run of one truth
value fills at least a supermajority share theta of the window).  Windows
where neither value preponderates are transition units and evaluate to
Undefined; that is the only source of Undefined.  Cyclic fluents (day/night
and friends) are assignments by congruence and never run out of domain.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Mapping, Sequence

from .cluster import ScaleSystem
from .errors import InputDomainError, UnassignedWindowError

DEFAULT_THETA = Fraction(2, 3)


class Truth(Enum):
    TRUE = "true"
    FALSE = "false"
    UNDEFINED = "undefined"

    @classmethod
    def of(cls, flag: bool) -> "Truth":
        return cls.TRUE if flag else cls.FALSE


@dataclass(frozen=True)
class TimePoint:
    """Unit ``index`` on timescale ``scale``; negative indices are the past,
    zero is now."""

    scale: int
    index: int

    def __str__(self):
        return f"{self.scale}.{self.index}"

    @classmethod
    def parse(cls, text: str) -> "TimePoint":
        scale_part, _, index_part = text.partition(".")
        try:
            return cls(int(scale_part), int(index_part))
        except ValueError:
            raise InputDomainError(f"bad time point {text!r}; expected scale.index") from None


def contains(outer: TimePoint, inner: TimePoint, scales: ScaleSystem) -> bool:
    """Whether the inner instant falls inside the outer unit's window.

    Unit (i, k) covers the half-open block of scale-j indices
    [k*B, (k+1)*B) where B multiplies the branching factors between the two
    scales; blocks at one scale partition every finer scale.
    """
    if inner.scale >= outer.scale:
        raise InputDomainError(
            f"containment needs inner.scale < outer.scale, got {inner.scale} >= {outer.scale}"
        )
    for point in (outer, inner):
        if not scales.min_scale <= point.scale <= scales.max_scale:
            raise InputDomainError(f"scale {point.scale} outside the scale system")
    width = scales.units(outer.scale, inner.scale)
    return inner.index // width == outer.index


class FluentStore:
    """Truth assignments of named fluents at one base scale.

    Explicit fluents are total over a declared domain of base indices;
    cyclic fluents are true exactly on a congruence class of indices.
    Queries above the base scale are always derived, never stored.
    Installation must be serialized externally; evaluation is pure.
    """

    def __init__(self, scales: ScaleSystem | None = None, base_scale: int | None = None):
        self.scales = scales or ScaleSystem.modern()
        self.base_scale = self.scales.min_scale if base_scale is None else base_scale
        if not self.scales.min_scale <= self.base_scale <= self.scales.max_scale:
            raise InputDomainError(f"base scale {self.base_scale} outside the scale system")
        self._explicit: dict[str, tuple[int, int, set[int]]] = {}
        self._cyclic: dict[str, tuple[int, int, int]] = {}

    def names(self) -> tuple[str, ...]:
        return tuple(sorted(set(self._explicit) | set(self._cyclic)))

    def assign(self, name: str, domain: tuple[int, int], true_ranges: Sequence[tuple[int, int]]):
        """Install an explicit fluent, total over [domain), true on the given
        half-open ranges."""
        if name in self._explicit or name in self._cyclic:
            raise InputDomainError(f"fluent {name!r} is already defined")
        start, stop = domain
        if start >= stop:
            raise InputDomainError(f"empty domain {domain!r}")
        true_set: set[int] = set()
        for lo, hi in true_ranges:
            if lo < start or hi > stop:
                raise InputDomainError(f"true range [{lo}, {hi}) escapes the domain {domain!r}")
            true_set.update(range(lo, hi))
        self._explicit[name] = (start, stop, true_set)

    def cyclic_fluent(self, name: str, period: int, phase_true: tuple[int, int]):
        """Install a fluent true exactly on indices congruent to the phase
        range mod the period.

        The range is half-open and may wrap (e.g. night as the complement of
        a daytime phase); it must be non-empty and shorter than the period.
        """
        if name in self._explicit or name in self._cyclic:
            raise InputDomainError(f"fluent {name!r} is already defined")
        if period < 2:
            raise InputDomainError(f"period must be >= 2, got {period}")
        lo, hi = phase_true
        span = hi - lo
        if not 0 < span < period:
            raise InputDomainError(
                f"phase range [{lo}, {hi}) must be non-empty and shorter than the period {period}"
            )
        self._cyclic[name] = (period, lo % period, span)

    def value_at(self, name: str, base_index: int) -> bool:
        if name in self._cyclic:
            period, lo, span = self._cyclic[name]
            return (base_index - lo) % period < span
        if name in self._explicit:
            start, stop, true_set = self._explicit[name]
            if not start <= base_index < stop:
                raise UnassignedWindowError(
                    f"{name!r} is unassigned at base index {base_index} "
                    f"(domain [{start}, {stop}))"
                )
            return base_index in true_set
        raise InputDomainError(f"unknown fluent {name!r}")

    def window_values(self, name: str, start: int, stop: int) -> list[bool]:
        return [self.value_at(name, i) for i in range(start, stop)]


def _longest_run(values: Sequence[bool], wanted: bool) -> int:
    best = run = 0
    for value in values:
        if value == wanted:
            run += 1
            best = max(best, run)
        else:
            run = 0
    return best


def evaluate(
    store: FluentStore,
    name: str,
    at: TimePoint,
    mode: str = "preponderant",
    theta: Fraction = DEFAULT_THETA,
) -> Truth:
    """Truth of a fluent at an instant, derived from its base-scale window.

    forall and exists are two-valued.  preponderant is True when some
    contiguous run of true base units reaches theta times the window size,
    False when a false run does, and Undefined otherwise; theta must exceed
    one half, which is what makes True for both a fluent and its complement
    impossible on the same window.  At the base scale all modes agree with
    the stored value.
    """
    if mode not in ("forall", "exists", "preponderant"):
        raise InputDomainError(f"unknown mode {mode!r}")
    theta = Fraction(theta)
    if not Fraction(1, 2) < theta <= 1:
        raise InputDomainError(f"theta must lie in (1/2, 1], got {theta}")
    if at.scale < store.base_scale:
        raise InputDomainError(
            f"cannot evaluate below the base scale {store.base_scale}"
        )
    if at.scale > store.scales.max_scale:
        raise InputDomainError(f"scale {at.scale} outside the scale system")
    width = store.scales.units(at.scale, store.base_scale)
    start = at.index * width
    values = store.window_values(name, start, start + width)
    if mode == "forall":
        return Truth.of(all(values))
    if mode == "exists":
        return Truth.of(any(values))
    threshold = theta * len(values)
    if _longest_run(values, True) >= threshold:
        return Truth.TRUE
    if _longest_run(values, False) >= threshold:
        return Truth.FALSE
    return Truth.UNDEFINED


# Schema machines carry their participant facts as fluent annotations rather
# than Moore outputs; the truth tables below are what those machines assert
# at each of their states.  Possession is underspecified mid-exchange.
_T, _F, _U = Truth.TRUE, Truth.FALSE, Truth.UNDEFINED

SCHEMA_FLUENTS: dict[str, dict[str, dict[str, Truth]]] = {
    "exchange": {
        "b": {
            "has(seller,goods)": _T,
            "has(buyer,money)": _T,
            "has(seller,money)": _F,
            "has(buyer,goods)": _F,
        },
        "mid": {
            "has(seller,goods)": _U,
            "has(buyer,money)": _U,
            "has(seller,money)": _U,
            "has(buyer,goods)": _U,
        },
        "a": {
            "has(seller,goods)": _F,
            "has(buyer,money)": _F,
            "has(seller,money)": _T,
            "has(buyer,goods)": _T,
        },
    },
    "gravity": {
        "rest": {"supported": _T, "falling": _F},
        "falling": {"supported": _F, "falling": _T},
    },
}


def evaluate_schema(schema: str) -> dict[str, dict[str, Truth]]:
    """Per-state fluent report for a schema machine."""
    try:
        return SCHEMA_FLUENTS[schema]
    except KeyError:
        raise InputDomainError(
            f"unknown schema {schema!r}; expected one of {tuple(SCHEMA_FLUENTS)}"
        ) from None


def load_store(doc: Mapping | str, scales: ScaleSystem | None = None) -> FluentStore:
    """Build a store from its JSON document form.

    The document maps explicit fluents to a domain plus true ranges, and
    cyclic fluents to a period plus phase range::

        {"base_scale": 0,
         "fluents": {"rain": {"domain": [0, 1000], "true": [[0, 501]]}},
         "cyclic": {"day": {"period": 96, "phase": [24, 72]}}}
    """
    if isinstance(doc, str):
        doc = json.loads(doc)
    scales = scales or (
        ScaleSystem.naive() if doc.get("scale_system") == "naive" else ScaleSystem.modern()
    )
    store = FluentStore(scales, doc.get("base_scale"))
    for name, spec in doc.get("fluents", {}).items():
        store.assign(
            name,
            tuple(spec["domain"]),
            [tuple(r) for r in spec.get("true", [])],
        )
    for name, spec in doc.get("cyclic", {}).items():
        store.cyclic_fluent(name, spec["period"], tuple(spec["phase"]))
    return store
