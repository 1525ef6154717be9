"""Finite test spaces and their event combinatorics.

A test space is a finite antichain of nonempty outcome sets (tests); its
outcome space is the union of the tests.  Events are subsets of tests.  Two
events are orthogonal when they are disjoint and their union is still an
event, complementary when they partition a test, and perspective when they
share a complement (an "axis").  On top of these relations sit the
structural predicates (algebraic, coherent, regular, projective), supports,
the core, and the ortho-closure lattice.

Outcomes are interned to dense integer ids; events are plain frozensets of
ids.  All objects are immutable after construction and every operation is a
pure function, so concurrent use is safe.  Witness-producing predicates
break ties lexicographically on sorted id sequences so results are
reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator, Sequence

from .errors import (
    CapCounter,
    EmptyTest,
    LabelCollision,
    RedundantTests,
    UncoveredOutcome,
    UnknownLabel,
)

Event = frozenset  # events are frozensets of outcome ids


def event_key(a: Iterable[int]) -> tuple[int, ...]:
    """Deterministic sort key for events: the sorted id sequence."""
    return tuple(sorted(a))


@dataclass(frozen=True)
class PredicateResult:
    """Boolean verdict plus a counterexample witness when it fails."""

    holds: bool
    witness: tuple | None = None

    def __bool__(self) -> bool:
        return self.holds


def _is_antichain(sets: Iterable[frozenset]) -> tuple[frozenset, frozenset] | None:
    """Return a violating (small, large) pair, or None if an antichain.

    Works on bitmasks so large families stay cheap; only strictly smaller
    sets can be proper subsets, so equal-size pairs are never compared.
    """
    family = sorted(set(sets), key=lambda s: (len(s), event_key(s)))
    masks = []
    for s in family:
        m = 0
        for i in s:
            m |= 1 << i
        masks.append(m)
    for i, small in enumerate(masks):
        for j in range(i + 1, len(masks)):
            large = masks[j]
            if small != large and small & large == small:
                return family[i], family[j]
    return None


class TestSpace:
    """Immutable interned test space.

    Use :func:`build_test_space` to construct one from labels; the raw
    constructor takes already-interned id sets.
    """

    __slots__ = (
        "labels",
        "tests",
        "label_id",
        "test_set",
        "orth",
        "_comp_cache",
        "_perp_cache",
        "_events_cache",
    )

    def __init__(self, labels: Sequence[str], tests: Sequence[frozenset]):
        labels = tuple(labels)
        if len(set(labels)) != len(labels):
            raise LabelCollision("duplicate outcome labels")
        tests = tuple(sorted({frozenset(t) for t in tests}, key=event_key))
        for t in tests:
            if not t:
                raise EmptyTest("tests must be nonempty")
        bad = _is_antichain(tests)
        if bad is not None:
            raise RedundantTests(f"test {sorted(bad[0])} is contained in {sorted(bad[1])}")
        covered = frozenset().union(*tests) if tests else frozenset()
        if covered != frozenset(range(len(labels))):
            missing = sorted(set(range(len(labels))) - covered)
            raise UncoveredOutcome(f"outcomes {missing} appear in no test")
        self.labels = labels
        self.tests = tests
        self.label_id = {lab: i for i, lab in enumerate(labels)}
        self.test_set = frozenset(tests)
        orth = [set() for _ in labels]
        for t in tests:
            for x in t:
                orth[x] |= t
        for x, s in enumerate(orth):
            s.discard(x)
        self.orth = tuple(frozenset(s) for s in orth)
        self._comp_cache: dict[frozenset, tuple] = {}
        self._perp_cache: dict[frozenset, frozenset] = {}
        self._events_cache: list[frozenset] | None = None

    # -- basics ---------------------------------------------------------------

    @property
    def n_outcomes(self) -> int:
        return len(self.labels)

    def __repr__(self) -> str:
        shown = [sorted(self.labels[x] for x in t) for t in self.tests]
        return f"TestSpace({shown})"

    def outcome(self, label: str) -> int:
        try:
            return self.label_id[label]
        except KeyError:
            raise UnknownLabel(f"no outcome labelled {label!r}") from None

    def event_of(self, labels: Iterable[str]) -> frozenset:
        return frozenset(self.outcome(lab) for lab in labels)

    def labels_of(self, event: Iterable[int]) -> tuple[str, ...]:
        return tuple(self.labels[x] for x in sorted(event))

    def orthogonal(self, x: int, y: int) -> bool:
        return y in self.orth[x]

    def is_event(self, a: Iterable[int]) -> bool:
        a = frozenset(a)
        return any(a <= t for t in self.tests)

    # -- event enumeration ------------------------------------------------------

    def events(self, cap: int | None = None) -> Iterator[frozenset]:
        """All events, each exactly once, the empty event included."""
        counter = CapCounter("events", cap)
        if self.tests and 2 ** max(len(t) for t in self.tests) > counter.cap:
            # The largest single test already yields more distinct subsets
            # than the cap allows; fail before enumerating.
            counter.tick(counter.cap + 1)
        seen: set[frozenset] = set()
        for t in self.tests:
            members = sorted(t)
            for r in range(len(members) + 1):
                for combo in combinations(members, r):
                    a = frozenset(combo)
                    if a in seen:
                        continue
                    counter.tick()
                    seen.add(a)
                    yield a

    def events_list(self, cap: int | None = None) -> list[frozenset]:
        if cap is None and self._events_cache is not None:
            return self._events_cache
        out = list(self.events(cap))
        if cap is None:
            self._events_cache = out
        return out

    # -- orthogonality, complements, perspectivity -------------------------------

    def events_orthogonal(self, a: Iterable[int], b: Iterable[int]) -> bool:
        a, b = frozenset(a), frozenset(b)
        return not (a & b) and self.is_event(a | b)

    def complementary(self, a: Iterable[int], b: Iterable[int]) -> bool:
        a, b = frozenset(a), frozenset(b)
        return not (a & b) and (a | b) in self.test_set

    def complements(self, a: Iterable[int]) -> tuple[frozenset, ...]:
        """All complements of an event: the test remainders over tests containing it."""
        a = frozenset(a)
        got = self._comp_cache.get(a)
        if got is None:
            got = tuple(sorted((t - a for t in self.tests if a <= t), key=event_key))
            self._comp_cache[a] = got
        return got

    def perspective(self, a: Iterable[int], b: Iterable[int]) -> frozenset | None:
        """Lexicographically least common complement of a and b, or None."""
        ca = set(self.complements(a))
        common = [c for c in self.complements(b) if c in ca]
        if not common:
            return None
        return min(common, key=event_key)

    def is_perspective(self, a: Iterable[int], b: Iterable[int]) -> bool:
        return self.perspective(a, b) is not None

    def orthocomplement(self, a: Iterable[int]) -> frozenset:
        """Outcomes orthogonal to every outcome of ``a`` (all of X for the empty set)."""
        a = frozenset(a)
        got = self._perp_cache.get(a)
        if got is None:
            got = frozenset(range(self.n_outcomes))
            for x in a:
                got &= self.orth[x]
            self._perp_cache[a] = got
        return got

    def _complement_buckets(self, cap: int | None = None) -> dict[frozenset, list[frozenset]]:
        """Map each complement event to the list of events it complements."""
        counter = CapCounter("complement buckets", cap)
        total = sum(2 ** len(t) for t in self.tests)
        if total > counter.cap:
            counter.tick(total)
        buckets: dict[frozenset, list[frozenset]] = {}
        for t in self.tests:
            members = sorted(t)
            for r in range(len(members) + 1):
                for combo in combinations(members, r):
                    counter.tick()
                    a = frozenset(combo)
                    buckets.setdefault(t - a, []).append(a)
        return buckets

    # -- structural predicates ----------------------------------------------------

    def algebraic(self, cap: int | None = None) -> PredicateResult:
        """Perspectivity transfers complements: a ~ b oc c implies a oc c.

        Equivalent to: any two events sharing a complement have identical
        complement sets.  Witness on failure is a triple (a, b, c) with
        a ~ b, b oc c but not a oc c.
        """
        for evs in self._complement_buckets(cap).values():
            key0 = None
            for b in evs:
                kb = frozenset(self.complements(b))
                if key0 is None:
                    key0 = kb
                    first = b
                elif kb != key0:
                    if kb - key0:
                        a, bb, extra = first, b, kb - key0
                    else:
                        a, bb, extra = b, first, key0 - kb
                    return PredicateResult(False, (a, bb, min(extra, key=event_key)))
        return PredicateResult(True)

    def coherent(self, cap: int | None = None) -> PredicateResult:
        """Events inside an event's orthocomplement are orthogonal to it."""
        evs = self.events_list(cap)
        counter = CapCounter("coherence pairs", cap)
        counter.tick(len(evs) * len(evs))
        for b in sorted(evs, key=event_key):
            if not b:
                continue
            perp = self.orthocomplement(b)
            for a in sorted(evs, key=event_key):
                if a and a <= perp and not self.events_orthogonal(a, b):
                    return PredicateResult(False, (a, b))
        return PredicateResult(True)

    def regular(self, cap: int | None = None) -> PredicateResult:
        """Perspective events have equal orthocomplements."""
        for evs in self._complement_buckets(cap).values():
            p0 = None
            for b in evs:
                pb = self.orthocomplement(b)
                if p0 is None:
                    p0, first = pb, b
                elif pb != p0:
                    return PredicateResult(False, (first, b))
        return PredicateResult(True)

    def projective(self) -> PredicateResult:
        """Perspective outcomes are equal."""
        for x in range(self.n_outcomes):
            for y in range(x + 1, self.n_outcomes):
                if self.is_perspective(frozenset([x]), frozenset([y])):
                    return PredicateResult(False, (x, y))
        return PredicateResult(True)

    # -- supports, core, adjunctions -----------------------------------------------

    def is_support(self, s: Iterable[int]) -> bool:
        """True when the test traces {E & S} stay an antichain."""
        s = frozenset(s)
        if not s <= frozenset(range(self.n_outcomes)):
            raise UnknownLabel("support candidates must be outcome subsets")
        traces = {t & s for t in self.tests}
        direct = _is_antichain(traces) is None
        if __debug__:
            alt = self._support_by_perspectivity(s)
            if alt is not None:
                assert alt == direct, "support criteria disagree"
        return direct

    def _support_by_perspectivity(self, s: frozenset, work_cap: int = 50_000) -> bool | None:
        """Alternate criterion: a ~ b and a disjoint from S force b disjoint from S.

        Returns None when the event enumeration would exceed the debug work
        cap; used only as a cross-check.
        """
        if sum(2 ** len(t) for t in self.tests) > work_cap:
            return None
        for evs in self._complement_buckets(cap=work_cap).values():
            hit = [bool(a & s) for a in evs]
            if any(hit) and not all(hit):
                return False
        return True

    def core(self) -> frozenset:
        """Intersection of all tests."""
        out = self.tests[0]
        for t in self.tests[1:]:
            out &= t
        return out

    def adjoin_unit_test(self, label: str) -> "TestSpace":
        """Add a fresh outcome carrying its own singleton test."""
        if label in self.label_id:
            raise LabelCollision(f"label {label!r} already present")
        new_id = self.n_outcomes
        return TestSpace(self.labels + (label,), self.tests + (frozenset([new_id]),))

    def restrict_to_support(self, s: Iterable[int]) -> tuple["TestSpace", dict[int, int]]:
        """The trace space on a support, with the old-id to new-id map."""
        s = frozenset(s)
        if not self.is_support(s):
            raise RedundantTests("restriction target is not a support")
        traces = sorted({t & s for t in self.tests} - {frozenset()}, key=event_key)
        if not traces:
            raise EmptyTest("support meets no test")
        kept = sorted(frozenset().union(*traces))
        old_to_new = {x: i for i, x in enumerate(kept)}
        labels = [self.labels[x] for x in kept]
        tests = [frozenset(old_to_new[x] for x in t) for t in traces]
        return TestSpace(labels, tests), old_to_new

    # -- ortho-closure lattice --------------------------------------------------------

    def closed_set_lattice(self, cap: int | None = None) -> "ClosedSetLattice":
        """All ortho-closed outcome sets, as a complete ortholattice."""
        counter = CapCounter("closed sets", cap)
        full = frozenset(range(self.n_outcomes))
        gens = {self.orthocomplement(frozenset([x])) for x in range(self.n_outcomes)}
        closed: set[frozenset] = {full} | gens
        frontier = list(closed)
        while frontier:
            s = frontier.pop()
            for g in gens:
                t = s & g
                if t not in closed:
                    counter.tick()
                    closed.add(t)
                    frontier.append(t)
        return ClosedSetLattice(self, tuple(sorted(closed, key=event_key)))


class ClosedSetLattice:
    """Ortho-closed subsets ordered by inclusion.

    Meet is intersection, join is the double-orthocomplement of the union,
    and the orthocomplement operation is the lattice complement.
    """

    def __init__(self, space: TestSpace, elements: tuple[frozenset, ...]):
        self.space = space
        self.elements = elements
        self.index = {e: i for i, e in enumerate(elements)}

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, s) -> bool:
        return frozenset(s) in self.index

    def closure(self, s: Iterable[int]) -> frozenset:
        return self.space.orthocomplement(self.space.orthocomplement(s))

    def meet(self, a: frozenset, b: frozenset) -> frozenset:
        return a & b

    def join(self, a: frozenset, b: frozenset) -> frozenset:
        return self.closure(a | b)

    def ortho(self, a: frozenset) -> frozenset:
        return self.space.orthocomplement(a)

    def leq(self, a: frozenset, b: frozenset) -> bool:
        return a <= b

    @property
    def bottom(self) -> frozenset:
        return self.closure(frozenset())

    @property
    def top(self) -> frozenset:
        return frozenset(range(self.space.n_outcomes))


def build_test_space(
    tests: Iterable[Iterable[str]], labels: Sequence[str] | None = None
) -> TestSpace:
    """Construct a test space from label-level test descriptions.

    When ``labels`` is omitted the outcome universe is the sorted union of
    the test members, which makes outcome ids canonical for a given set of
    labels.
    """
    tests = [list(t) for t in tests]
    if not tests:
        raise EmptyTest("need at least one test")
    if labels is None:
        labels = sorted({lab for t in tests for lab in t})
    label_id = {}
    for i, lab in enumerate(labels):
        if lab in label_id:
            raise LabelCollision(f"duplicate label {lab!r}")
        label_id[lab] = i
    id_tests = []
    for t in tests:
        for lab in t:
            if lab not in label_id:
                raise UnknownLabel(f"test member {lab!r} not among outcome labels")
        id_tests.append(frozenset(label_id[lab] for lab in t))
    return TestSpace(tuple(labels), id_tests)
