"""Orthoalgebra logics of algebraic test spaces.

For an algebraic test space the perspectivity classes of events carry a
partial sum ([a] + [b] = [a u b] for orthogonal a, b), a unique
complementation, and an induced order.  This module builds that quotient,
validates the orthoalgebra laws exhaustively, classifies the result
(orthomodular poset? Boolean?), builds the orthopartition test space of an
abstract orthoalgebra, and transports logics along morphisms.

Algebraicity makes the class structure cheap: two events are perspective
exactly when their complement sets are equal, so classes are fibers of the
complement-set map and no transitive closure is ever taken.  On inputs that
fail algebraicity, construction refuses rather than quotienting anyway.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from .errors import CapCounter, LawViolation, NotAlgebraic, UsageError
from .morphisms import Morphism
from .states import Model
from .testspace import PredicateResult, TestSpace, event_key


class Orthoalgebra:
    """Finite orthoalgebra with canonical representative events.

    Elements are dense ids; ``reps[p]`` is the lexicographically least event
    in class p when the algebra arose as a logic (synthetic algebras carry
    opaque reps).  ``oplus`` is the partial sum table, ``comp`` the
    complementation, ``zero``/``one`` the bounds.
    """

    def __init__(self, reps, class_of, oplus, zero, one, labels=None):
        self.reps: tuple = tuple(reps)
        self.class_of: dict = dict(class_of)
        self.oplus: dict[tuple[int, int], int] = dict(oplus)
        self.zero = zero
        self.one = one
        self.labels = tuple(labels) if labels else tuple(str(sorted(r)) for r in self.reps)
        self.comp = self._complements()
        self.le = self._order()
        self._validate_laws()

    def __len__(self) -> int:
        return len(self.reps)

    # -- structure ------------------------------------------------------------

    def orthogonal(self, p: int, q: int) -> bool:
        return (p, q) in self.oplus

    def add(self, p: int, q: int) -> int:
        try:
            return self.oplus[(p, q)]
        except KeyError:
            raise UsageError(f"{self.labels[p]} + {self.labels[q]} undefined") from None

    def _complements(self) -> tuple[int, ...]:
        comp = []
        for p in range(len(self.reps)):
            mates = sorted(
                q for q in range(len(self.reps)) if self.oplus.get((p, q)) == self.one
            )
            if len(mates) != 1:
                raise LawViolation(
                    f"element {self.labels[p]} has {len(mates)} complements"
                )
            comp.append(mates[0])
        return tuple(comp)

    def _order(self) -> frozenset:
        le = {(p, p) for p in range(len(self.reps))}
        for (p, c), s in self.oplus.items():
            le.add((p, s))
        return frozenset(le)

    def leq(self, p: int, q: int) -> bool:
        return (p, q) in self.le

    def _validate_laws(self) -> None:
        n = len(self.reps)
        op = self.oplus
        # commutativity (built in by construction, asserted for synthetic input)
        for (p, q), s in op.items():
            if op.get((q, p)) != s:
                raise LawViolation("partial sum is not commutative")
        # associativity in the orthoalgebra sense
        for p in range(n):
            for q in range(n):
                s = op.get((p, q))
                if s is None:
                    continue
                for r in range(n):
                    sr = op.get((s, r))
                    if sr is None:
                        continue
                    qr = op.get((q, r))
                    if qr is None or op.get((p, qr)) != sr:
                        raise LawViolation(
                            f"associativity fails at {self.labels[p]},"
                            f"{self.labels[q]},{self.labels[r]}"
                        )
        # consistency
        for p in range(n):
            if (p, p) in op and p != self.zero:
                raise LawViolation(f"{self.labels[p]} is orthogonal to itself")
        if op.get((self.zero, self.zero)) != self.zero:
            raise LawViolation("zero must satisfy 0 + 0 = 0")
        # order sanity
        for p in range(n):
            if not self.leq(self.zero, p) or not self.leq(p, self.one):
                raise LawViolation("order is not bounded by 0 and 1")

    # -- classification ----------------------------------------------------------

    def upper_bounds(self, p: int, q: int) -> list[int]:
        return [u for u in range(len(self.reps)) if self.leq(p, u) and self.leq(q, u)]

    def lower_bounds(self, p: int, q: int) -> list[int]:
        return [v for v in range(len(self.reps)) if self.leq(v, p) and self.leq(v, q)]

    def join(self, p: int, q: int) -> int | None:
        ubs = self.upper_bounds(p, q)
        least = [u for u in ubs if all(self.leq(u, v) for v in ubs)]
        return least[0] if least else None

    def meet(self, p: int, q: int) -> int | None:
        lbs = self.lower_bounds(p, q)
        greatest = [v for v in lbs if all(self.leq(u, v) for u in lbs)]
        return greatest[0] if greatest else None

    def is_omp(self) -> PredicateResult:
        """Orthogonal sums are joins (so the order is an orthomodular poset)."""
        for (p, q), s in self.oplus.items():
            for u in self.upper_bounds(p, q):
                if not self.leq(s, u):
                    return PredicateResult(False, (p, q, u))
        return PredicateResult(True)

    def is_boolean(self) -> PredicateResult:
        omp = self.is_omp()
        if not omp:
            return omp
        n = len(self.reps)
        joins = {}
        meets = {}
        for p in range(n):
            for q in range(n):
                j, m = self.join(p, q), self.meet(p, q)
                if j is None or m is None:
                    return PredicateResult(False, (p, q))
                joins[(p, q)] = j
                meets[(p, q)] = m
        for p, q, r in product(range(n), repeat=3):
            lhs = meets[(p, joins[(q, r)])]
            rhs = joins[(meets[(p, q)], meets[(p, r)])]
            if lhs != rhs:
                return PredicateResult(False, (p, q, r))
        return PredicateResult(True)

    def atoms(self) -> list[int]:
        out = []
        for p in range(len(self.reps)):
            if p == self.zero:
                continue
            below = [q for q in range(len(self.reps)) if self.leq(q, p) and q not in (p, self.zero)]
            if not below:
                out.append(p)
        return out


def build_logic(space_or_model, cap: int | None = None) -> Orthoalgebra:
    """Quotient the events of an algebraic test space by perspectivity."""
    space = space_or_model.space if isinstance(space_or_model, Model) else space_or_model
    verdict = space.algebraic(cap)
    if not verdict:
        a, b, c = verdict.witness
        raise NotAlgebraic(
            f"not algebraic: {space.labels_of(a)} ~ {space.labels_of(b)} oc "
            f"{space.labels_of(c)} but the transfer fails"
        )
    events = space.events_list(cap)
    # Classes are fibers of the complement-set map (valid because algebraic).
    key_to_class: dict[frozenset, int] = {}
    class_events: list[list[frozenset]] = []
    class_of: dict[frozenset, int] = {}
    for a in sorted(events, key=event_key):
        key = frozenset(space.complements(a))
        cls = key_to_class.get(key)
        if cls is None:
            cls = len(class_events)
            key_to_class[key] = cls
            class_events.append([])
        class_events[cls].append(a)
        class_of[a] = cls
    reps = [min(evs, key=event_key) for evs in class_events]
    zero = class_of[frozenset()]
    one = class_of[space.tests[0]]
    # Partial sum: enumerate ordered disjoint event pairs inside each test.
    # Every orthogonal pair appears under the test containing its union, so
    # recording sums this way both builds the table and verifies that the sum
    # depends only on the classes.
    counter = CapCounter("logic sum table", cap)
    oplus: dict[tuple[int, int], int] = {}
    for t in space.tests:
        members = sorted(t)
        for split in product((0, 1, 2), repeat=len(members)):
            counter.tick()
            a = frozenset(x for x, side in zip(members, split) if side == 1)
            b = frozenset(x for x, side in zip(members, split) if side == 2)
            pq = (class_of[a], class_of[b])
            s = class_of[a | b]
            prior = oplus.get(pq)
            if prior is None:
                oplus[pq] = s
            elif prior != s:
                raise LawViolation(
                    f"sum of classes {pq} is ambiguous: {prior} vs {s}"
                )
    labels = ["[" + ",".join(space.labels_of(r)) + "]" for r in reps]
    algebra = Orthoalgebra(reps, class_of, oplus, zero, one, labels=labels)
    return algebra


# -- outcome-level atomicity ----------------------------------------------------


def atomic_outcomes(space: TestSpace, cap: int | None = None) -> list[int]:
    """Outcomes perspective only to singleton events."""
    out = []
    for x in range(space.n_outcomes):
        if outcome_is_atomic(space, x, cap):
            out.append(x)
    return out


def outcome_is_atomic(space: TestSpace, x: int, cap: int | None = None) -> bool:
    singleton = frozenset([x])
    for c in space.complements(singleton):
        for t in space.tests:
            if c <= t and len(t - c) != 1:
                # t - c is an event complementary to c, hence perspective to {x}.
                return False
    return True


def is_atomic_space(space: TestSpace, cap: int | None = None) -> bool:
    return len(atomic_outcomes(space, cap)) == space.n_outcomes


def is_totally_nonatomic(space: TestSpace, cap: int | None = None) -> bool:
    return not atomic_outcomes(space, cap)


# -- orthopartition test space of an abstract orthoalgebra -------------------------


def orthopartition_space(algebra: Orthoalgebra, cap: int | None = None) -> TestSpace:
    """Tests are the finite orthopartitions of the unit (sums equal to one)."""
    counter = CapCounter("orthopartitions", cap)
    n = len(algebra)
    nonzero = [p for p in range(n) if p != algebra.zero]
    tests: list[frozenset] = []

    def extend(start: int, chosen: tuple, total: int):
        counter.tick()
        if total == algebra.one and chosen:
            tests.append(frozenset(chosen))
        for q in range(start, n):
            if q == algebra.zero:
                continue
            s = algebra.oplus.get((total, q)) if chosen else q
            if s is not None:
                extend(q + 1, chosen + (q,), s)

    extend(0, (), algebra.zero)
    labels = [f"e{p}" for p in range(n)]
    used = sorted({p for t in tests for p in t})
    if set(used) != set(nonzero):
        raise LawViolation("some nonzero element lies in no orthopartition")
    remap = {p: i for i, p in enumerate(used)}
    return TestSpace(
        tuple(labels[p] for p in used),
        [frozenset(remap[p] for p in t) for t in tests],
    )


def orthopartition_round_trip(algebra: Orthoalgebra, cap: int | None = None):
    """Rebuild the logic of the orthopartition space and the canonical map.

    Returns (space, logic, mapping) where mapping[p] is the class of the
    singleton {p}; raises LawViolation if it is not an isomorphism.
    """
    space = orthopartition_space(algebra, cap)
    logic = build_logic(space, cap)
    nonzero = sorted(p for p in range(len(algebra)) if p != algebra.zero)
    mapping = {algebra.zero: logic.zero}
    for i, p in enumerate(nonzero):
        mapping[p] = logic.class_of[frozenset([i])]
    if len(set(mapping.values())) != len(mapping) or len(mapping) != len(logic):
        raise LawViolation("orthopartition round trip is not a bijection")
    for (p, q), s in algebra.oplus.items():
        ms = logic.oplus.get((mapping[p], mapping[q]))
        if ms != mapping[s]:
            raise LawViolation("orthopartition round trip does not preserve sums")
    for (p, q) in product(range(len(algebra)), repeat=2):
        if (mapping[p], mapping[q]) in logic.oplus and (p, q) not in algebra.oplus:
            raise LawViolation("orthopartition round trip adds spurious sums")
    return space, logic, mapping


# -- transport along morphisms ---------------------------------------------------


@dataclass(frozen=True)
class OrthoMap:
    """Class-level map induced by a morphism between algebraic models."""

    source: Orthoalgebra
    target: Orthoalgebra
    table: tuple[int, ...]

    def __call__(self, p: int) -> int:
        return self.table[p]


def induced_logic_map(
    phi: Morphism,
    source_logic: Orthoalgebra | None = None,
    target_logic: Orthoalgebra | None = None,
    cap: int | None = None,
) -> OrthoMap:
    """Transport classes along a morphism: [a] goes to [image of a].

    Both models must be algebraic.  Well-definedness is checked on every
    event, and preservation of orthogonality and partial sums on every
    defined pair.
    """
    src = source_logic if source_logic is not None else build_logic(phi.source.space, cap)
    dst = target_logic if target_logic is not None else build_logic(phi.target.space, cap)
    table: list[int | None] = [None] * len(src)
    for a, cls in src.class_of.items():
        img_cls = dst.class_of.get(phi.image(a))
        if img_cls is None:
            raise LawViolation("event image is not an event of the target")
        if table[cls] is None:
            table[cls] = img_cls
        elif table[cls] != img_cls:
            raise LawViolation(
                f"induced class map ill-defined on class {src.labels[cls]}"
            )
    for (p, q), s in src.oplus.items():
        fp, fq = table[p], table[q]
        if (fp, fq) not in dst.oplus:
            raise LawViolation("induced map does not preserve orthogonality")
        if dst.oplus[(fp, fq)] != table[s]:
            raise LawViolation("induced map does not preserve partial sums")
    return OrthoMap(src, dst, tuple(table))
