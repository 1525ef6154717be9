"""Interaction of coarse-graining with sequential compounding.

Strings of events map to string-sets by taking setwise concatenation
products; that map intertwines the two constructions and satisfies the four
distributive-law diagrams, checked here pointwise on depth windows.  Models
carrying both a coherence and a sequential product, with the coherence
multiplicative over the product, are the algebras of the combined
construction; such structures provably show no interference.  Interference
itself is witnessed numerically: a state, an event, and a follow-up outcome
where conditioning on the collapsed event disagrees with summing over its
members.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as iproduct
from typing import Callable, Iterable, Mapping, Sequence

from .coarsening import CheckedCoherence, Coarsening, coarsen, validate_coherence
from .compounding import (
    IMPOSSIBLE,
    OUT_OF_WINDOW,
    CheckedSequential,
    SequentialProduct,
    TruncatedCompound,
    truncated_compound,
    validate_sequential,
)
from .errors import (
    CapCounter,
    HypothesisUnmet,
    LawViolation,
    NotGAlgebra,
    UsageError,
)
from .logic import build_logic
from .morphisms import Morphism, validate_morphism
from .states import Model, Weight
from .testspace import PredicateResult, event_key

BaseString = tuple  # strings over base outcome ids


def concat_product(events: Sequence[frozenset]) -> frozenset:
    """Setwise concatenation product of outcome sets, as a set of strings."""
    out = [()]
    for ev in events:
        out = [s + (x,) for s in out for x in sorted(ev)]
    return frozenset(out)


def concat_string_sets(sets: Sequence[frozenset]) -> frozenset:
    """Concatenation product of sets of strings."""
    out = [()]
    for block in sets:
        out = [s + t for s in out for t in sorted(block)]
    return frozenset(out)


@dataclass(frozen=True)
class DiagramReport:
    multiplication_outer: int
    multiplication_inner: int
    unit_coarse: int
    unit_compound: int


def check_distributive_diagrams(
    model: Model, depth: int, cap: int | None = None
) -> DiagramReport:
    """Pointwise commutation of the four interchange diagrams at a depth.

    All four are pure string-set computations over windows: the two
    multiplication squares (collapsing a double coarsening before or after
    taking products; flattening strings of strings before or after) and the
    two unit triangles.  Raises LawViolation on any mismatch.
    """
    counter = CapCounter("distributive diagrams", cap)
    coarse = coarsen(model, cap)
    double = coarsen(coarse.model, cap)
    double_outcomes = [
        frozenset(coarse.to_event(i) for i in ev) for ev in double.outcome_event
    ]

    # Square 1: strings of double-coarse outcomes; collapse inner unions
    # before or after distributing.
    sq1 = 0
    for k in range(depth + 1):
        for word in iproduct(double_outcomes, repeat=k):
            counter.tick()
            via_member = frozenset()
            for choice in iproduct(*[sorted(fam, key=event_key) for fam in word]):
                via_member |= concat_product(choice)
            unions = [frozenset().union(*fam) for fam in word]
            if via_member != concat_product(unions):
                raise LawViolation("distributive square over coarsening fails")
            sq1 += 1

    # Square 2: strings of strings of events; flatten before or after.
    events = sorted((ev for ev in coarse.outcome_event), key=event_key)
    sq2 = 0
    for total in range(depth + 1):
        for word in iproduct(events, repeat=total):
            for split in _compositions(total):
                counter.tick()
                chunks = []
                start = 0
                for part in split:
                    chunks.append(word[start : start + part])
                    start += part
                nested = concat_string_sets([concat_product(c) for c in chunks])
                flat = concat_product(word)
                if nested != flat:
                    raise LawViolation("distributive square over flattening fails")
                sq2 += 1

    # Triangle 1: an event, viewed as a one-letter string, distributes to
    # its set of one-letter strings.
    tri1 = 0
    for ev in events:
        counter.tick()
        if concat_product([ev]) != frozenset((x,) for x in ev):
            raise LawViolation("coarse unit triangle fails")
        tri1 += 1

    # Triangle 2: a string of singletons distributes to the singleton of
    # the string.
    tri2 = 0
    n = model.space.n_outcomes
    for k in range(depth + 1):
        for s in iproduct(range(n), repeat=k):
            counter.tick()
            if concat_product([frozenset([x]) for x in s]) != frozenset([s]):
                raise LawViolation("compound unit triangle fails")
            tri2 += 1
    return DiagramReport(sq1, sq2, tri1, tri2)


def _compositions(total: int):
    """Ordered splits of ``total`` into positive parts (one empty split for 0)."""
    if total == 0:
        yield ()
        return
    for first in range(1, total + 1):
        for rest in _compositions(total - first):
            yield (first,) + rest


@dataclass(frozen=True)
class DistributiveCell:
    """Materialized interchange morphism at a depth, with its interning."""

    model: Model
    depth: int
    source: TruncatedCompound  # compounds of the coarsening
    target: Coarsening  # coarsening of the compound
    morphism: Morphism


def distributive_ell(model: Model, depth: int, cap: int | None = None) -> DistributiveCell:
    """The interchange map as a validated embedding between materializations."""
    coarse = coarsen(model, cap)
    source = truncated_compound(coarse.model, depth, cap)
    compound = truncated_compound(model, depth, cap)
    target = coarsen(compound.model, cap)
    mapping = []
    for s in source.strings:
        events = [coarse.to_event(i) for i in s]
        block = frozenset(compound.id_of(w) for w in concat_product(events))
        mapping.append(target.to_coarse(block))
    phi = validate_morphism(source.model, target.model, tuple(mapping), cap)
    if not phi.embedding:
        raise LawViolation("the interchange map must be an embedding")
    return DistributiveCell(model, depth, source, target, phi)


def check_ell_naturality(phi: Morphism, depth: int, cap: int | None = None) -> int:
    """Naturality of the interchange map along a test-preserving morphism.

    Pointwise and purely combinatorial: pushing a string of events forward
    and then distributing agrees with distributing first and pushing the
    string set.  Returns the number of points checked.
    """
    if not phi.test_preserving:
        raise HypothesisUnmet("naturality window needs a test-preserving morphism")
    src_events = sorted((a for a in phi.source.space.events_list(cap) if a), key=event_key)
    counter = CapCounter("naturality points", cap)
    points = 0
    for k in range(depth + 1):
        for word in iproduct(src_events, repeat=k):
            counter.tick()
            pushed = [phi.image(ev) for ev in word]
            lhs = concat_product(pushed)
            rhs = frozenset(tuple(phi.mapping[x] for x in s) for s in concat_product(word))
            if lhs != rhs:
                raise LawViolation("interchange naturality fails")
            points += 1
    return points


# -- combined algebras -----------------------------------------------------------------


@dataclass(frozen=True)
class GAlgebra:
    """A model with a coherence multiplicative over its sequential product."""

    model: Model
    coherence: CheckedCoherence
    sequential: CheckedSequential
    commutative: bool
    strings_checked: int
    strings_skipped: int

    @property
    def sigma(self) -> Mapping[frozenset, int]:
        return self.coherence.table

    @property
    def product(self) -> SequentialProduct:
        return self.sequential.product


def validate_g_algebra(
    model: Model,
    sigma: CheckedCoherence | Mapping[frozenset, int],
    sp: CheckedSequential | SequentialProduct,
    probe_depth: int = 2,
    cap: int | None = None,
    states=None,
) -> GAlgebra:
    """Validate the compatibility law: collapse distributes over products.

    For every string of events in the window, collapsing the setwise product
    must agree with the product of the collapses; the same value is also
    recomputed along the interchange route (distribute to a string set,
    evaluate each string, collapse the set) as an independent path.
    """
    checked_sigma = (
        sigma if isinstance(sigma, CheckedCoherence) else validate_coherence(model, sigma, cap)
    )
    checked_sp = (
        sp
        if isinstance(sp, CheckedSequential)
        else validate_sequential(model, sp, probe_depth, cap, states=states)
    )
    prod = checked_sp.product
    table = checked_sigma.table
    events = sorted(table.keys(), key=event_key)
    counter = CapCounter("event strings", cap)
    checked = skipped = 0
    for k in range(1, probe_depth + 1):
        for word in iproduct(events, repeat=k):
            counter.tick()
            ev_prod = word[0]
            for nxt in word[1:]:
                ev_prod = prod.event_product(ev_prod, nxt)
                if ev_prod is None:
                    break
            out_prod = prod.prod_string([table[ev] for ev in word])
            if ev_prod is None:
                skipped += 1
                continue
            if not ev_prod:
                if out_prod is not None and prod.undefined_means == IMPOSSIBLE:
                    raise NotGAlgebra(
                        "collapsed product defined on an impossible event string",
                        witness=word,
                    )
                skipped += 1
                continue
            if out_prod is None:
                if prod.undefined_means == OUT_OF_WINDOW:
                    skipped += 1
                    continue
                raise NotGAlgebra(
                    "product of collapses undefined on a possible event string",
                    witness=word,
                )
            lhs = table.get(ev_prod)
            if lhs is None:
                raise NotGAlgebra(
                    "setwise product of events is not an event", witness=word
                )
            if lhs != out_prod:
                raise NotGAlgebra(
                    "collapse is not multiplicative over the product", witness=word
                )
            # Interchange route: distribute, evaluate strings, collapse.
            strings = concat_product(word)
            evaluated = frozenset(prod.prod_string(s) for s in strings)
            if None not in evaluated:
                via_ell = table.get(frozenset(evaluated))
                if via_ell is None and len(evaluated) > 1:
                    raise NotGAlgebra(
                        "evaluated string set is not an event", witness=word
                    )
                via_ell = (
                    next(iter(evaluated)) if len(evaluated) == 1 else via_ell
                )
                if via_ell != lhs:
                    raise NotGAlgebra(
                        "interchange route disagrees with direct collapse",
                        witness=word,
                    )
            checked += 1
    commutative = _is_commutative(model, prod)
    return GAlgebra(model, checked_sigma, checked_sp, commutative, checked, skipped)


def _is_commutative(model: Model, prod: SequentialProduct) -> bool:
    n = model.space.n_outcomes
    for x in range(n):
        for y in range(x + 1, n):
            if prod.prod(x, y) != prod.prod(y, x):
                return False
    return True


def check_commutative_boolean(g: GAlgebra, cap: int | None = None):
    """Commutative algebras of the combined construction have Boolean logics.

    The product of two tests is their common refinement; with algebraicity
    this forces distributivity of the logic.  Raises HypothesisUnmet when
    the model is not algebraic or the product is not commutative.
    """
    space = g.model.space
    if not g.commutative:
        raise HypothesisUnmet("product is not commutative")
    if not space.algebraic(cap):
        raise HypothesisUnmet("model is not algebraic")
    prod = g.product
    for e in space.tests:
        for f in space.tests:
            refined = prod.event_product(e, f)
            if refined is None:
                raise LawViolation("test product fell outside the window")
            if refined not in space.test_set:
                raise LawViolation("test product is not a common refinement test")
            for y in sorted(f):
                fiber = prod.event_product(e, frozenset([y]))
                if fiber is None or not space.is_perspective(frozenset([y]), fiber):
                    raise LawViolation("refinement fiber is not perspective to its outcome")
    logic = build_logic(space, cap)
    verdict = logic.is_boolean()
    if not verdict:
        raise LawViolation("commutative combined algebra with non-Boolean logic")
    return logic


# -- interference ---------------------------------------------------------------------


@dataclass(frozen=True)
class InterferenceWitness:
    state_index: int
    event: frozenset
    outcome: int
    coherent: object
    incoherent: object

    @property
    def gap(self):
        return self.coherent - self.incoherent


def find_interference(
    model: Model,
    sigma: Mapping[frozenset, int] | CheckedCoherence,
    prod: SequentialProduct | Callable[[int, int], int | None],
    states: Sequence[Weight] | None = None,
    tol: float | None = None,
    events: Iterable[frozenset] | None = None,
    witnesses_from: Iterable[int] | None = None,
) -> list[InterferenceWitness]:
    """Scan for states where collapsing an event changes follow-up statistics.

    For each state, event in the collapse table, and follow-up outcome, the
    mass of (collapsed event, then outcome) is compared with the member-wise
    sum.  Pairs whose compound outcomes are missing from the model are
    skipped: the scan only evaluates what the model can express.  Undefined
    compounds of the impossible kind count as zero mass.
    """
    table = sigma.table if isinstance(sigma, CheckedCoherence) else dict(sigma)
    if isinstance(prod, SequentialProduct):
        kind = prod.undefined_means
        pr = prod.prod
    else:
        kind = OUT_OF_WINDOW
        pr = prod
    if states is None:
        if model.states.is_full:
            states = model.state_vertices()
        else:
            states = list(model.states.generators)
    if tol is None:
        tol = 0.0 if model.exact else model.tol
    scan_events = sorted(
        (frozenset(e) for e in (events if events is not None else table.keys())),
        key=event_key,
    )
    witness_pool = (
        sorted(witnesses_from)
        if witnesses_from is not None
        else range(model.space.n_outcomes)
    )
    out: list[InterferenceWitness] = []
    for si, w in enumerate(states):
        for a in scan_events:
            if a not in table:
                continue
            collapsed = table[a]
            for y in witness_pool:
                cy = pr(collapsed, y)
                if cy is None and kind == OUT_OF_WINDOW:
                    continue
                coherent = 0 if cy is None else w[cy]
                incoherent = 0
                missing = False
                for x in sorted(a):
                    xy = pr(x, y)
                    if xy is None:
                        if kind == OUT_OF_WINDOW:
                            missing = True
                            break
                        continue
                    incoherent = incoherent + w[xy]
                if missing:
                    continue
                gap = coherent - incoherent
                if (model.exact and gap != 0) or (not model.exact and abs(gap) > tol):
                    out.append(InterferenceWitness(si, a, y, coherent, incoherent))
    return out


def check_collapse_perspectivity(g: GAlgebra, cap: int | None = None) -> int:
    """Direct identity behind no-interference: ay is perspective to sigma(a)y.

    Returns the number of (event, outcome) pairs verified.
    """
    space = g.model.space
    prod = g.product
    table = g.sigma
    points = 0
    for a in sorted(table, key=event_key):
        for y in range(space.n_outcomes):
            ay = prod.event_product(a, frozenset([y]))
            cy = prod.prod(table[a], y)
            if ay is None or cy is None:
                continue
            if not ay:
                continue
            if not space.is_perspective(ay, frozenset([cy])):
                raise LawViolation(
                    "event-then-outcome is not perspective to collapse-then-outcome"
                )
            points += 1
    return points


def check_left_equivariance(
    model: Model,
    sigma: Mapping[frozenset, int] | CheckedCoherence,
    prod: SequentialProduct,
    cap: int | None = None,
) -> PredicateResult:
    """Weaker compatibility: left translation commutes with collapsing."""
    table = sigma.table if isinstance(sigma, CheckedCoherence) else dict(sigma)
    for a in sorted(table, key=event_key):
        for x in range(model.space.n_outcomes):
            xa = prod.event_product(frozenset([x]), a)
            lhs = prod.prod(x, table[a])
            if xa is None or lhs is None:
                continue
            if not xa:
                continue
            rhs = table.get(xa) if len(xa) > 1 else next(iter(xa))
            if rhs is None or lhs != rhs:
                return PredicateResult(False, (x, a))
    return PredicateResult(True)


def coarse_setwise_product(
    coarse: Coarsening, sp: SequentialProduct
) -> SequentialProduct:
    """Blockwise product on a coarsening of a sequential model."""
    unit_block = frozenset([sp.unit])
    if unit_block not in coarse.event_outcome:
        raise UsageError("the base unit must be an outcome of the coarsening")
    table = {}
    n = len(coarse.outcome_event)
    for i in range(n):
        for j in range(n):
            ev = sp.event_product(coarse.to_event(i), coarse.to_event(j))
            if ev is None or not ev:
                continue
            k = coarse.event_outcome.get(ev)
            if k is not None:
                table[(i, j)] = k
    return SequentialProduct(
        coarse.to_coarse(unit_block), table, undefined_means=sp.undefined_means
    )
