"""Coarse-graining of models and its algebras.

The coarsening of a test space has the nonempty events as outcomes and the
set partitions of tests as tests; states lift along event weight.  The
construction is functorial, carries a unit (singleton) and multiplication
(union) making it a monad, and its algebras are the coherence maps:
event-to-outcome maps fixing singletons and compatible with grouped
refinement.  Coherences satisfying the stronger substitution property
(cohesions) force orthomodular logics on regular models.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from .errors import (
    CapCounter,
    HypothesisUnmet,
    LawViolation,
    MorphismError,
    NotCoherence,
    UsageError,
)
from .logic import Orthoalgebra, OrthoMap, build_logic
from .morphisms import Morphism, validate_morphism
from .states import Model, StateSpace, Weight, constructed_model
from .testspace import PredicateResult, TestSpace, event_key


def set_partitions(members: list) -> Iterable[list[list]]:
    """All set partitions, via restricted-growth block assignment."""
    if not members:
        yield []
        return
    first, rest = members[0], members[1:]
    for sub in set_partitions(rest):
        for i in range(len(sub)):
            yield sub[:i] + [[first] + sub[i]] + sub[i + 1 :]
        yield [[first]] + sub


@dataclass(frozen=True)
class Coarsening:
    """A coarsened model plus the interning between outcomes and base events."""

    base: Model
    model: Model
    outcome_event: tuple[frozenset, ...]
    event_outcome: Mapping[frozenset, int]

    def to_coarse(self, event: frozenset) -> int:
        try:
            return self.event_outcome[frozenset(event)]
        except KeyError:
            raise UsageError(f"{sorted(event)} is not a nonempty event of the base") from None

    def to_event(self, outcome: int) -> frozenset:
        return self.outcome_event[outcome]


def coarse_label(space: TestSpace, event: frozenset) -> str:
    return "{" + ",".join(space.labels_of(event)) + "}"


def lift_weight(coarse: "Coarsening", w: Weight) -> Weight:
    return Weight(tuple(w.of(ev) for ev in coarse.outcome_event))


def coarsen(model: Model, cap: int | None = None) -> Coarsening:
    """The coarsened model: outcomes are nonempty events, tests are partitions."""
    space = model.space
    events = sorted((a for a in space.events_list(cap) if a), key=event_key)
    event_outcome = {a: i for i, a in enumerate(events)}
    labels = [coarse_label(space, a) for a in events]
    counter = CapCounter("coarsened tests", cap)
    tests = set()
    for t in space.tests:
        for blocks in set_partitions(sorted(t)):
            counter.tick()
            tests.add(frozenset(event_outcome[frozenset(b)] for b in blocks))
    coarse_space = TestSpace(tuple(labels), sorted(tests, key=event_key))
    if model.states.is_full:
        states = StateSpace.full()
    else:
        lifted = [
            Weight(tuple(g.of(ev) for ev in events)) for g in model.states.generators
        ]
        states = StateSpace.hull(lifted)
    coarse_model = constructed_model(coarse_space, states, model)
    return Coarsening(model, coarse_model, tuple(events), event_outcome)


def functor_sharp(
    phi: Morphism,
    source_coarse: Coarsening | None = None,
    target_coarse: Coarsening | None = None,
    cap: int | None = None,
) -> Morphism:
    """Lift a morphism to the coarsenings by direct image of events."""
    sc = source_coarse if source_coarse is not None else coarsen(phi.source, cap)
    tc = target_coarse if target_coarse is not None else coarsen(phi.target, cap)
    mapping = tuple(tc.to_coarse(phi.image(ev)) for ev in sc.outcome_event)
    return validate_morphism(sc.model, tc.model, mapping, cap)


def unit_eta(coarse: Coarsening, cap: int | None = None) -> Morphism:
    """Singleton inclusion of a model into its coarsening; an embedding."""
    base = coarse.base
    mapping = tuple(
        coarse.to_coarse(frozenset([x])) for x in range(base.space.n_outcomes)
    )
    eta = validate_morphism(base, coarse.model, mapping, cap)
    if not eta.embedding:
        raise LawViolation("the singleton unit must be an embedding")
    return eta


def mult_mu(
    coarse: Coarsening, double: Coarsening, cap: int | None = None
) -> Morphism:
    """Union collapse of the double coarsening onto the single one."""
    if double.base is not coarse.model:
        raise UsageError("second argument must be the coarsening of the first's model")
    mapping = []
    for ev in double.outcome_event:  # an event of the coarse model: a set of blocks
        union = frozenset().union(*(coarse.to_event(i) for i in ev))
        mapping.append(coarse.to_coarse(union))
    mu = validate_morphism(double.model, coarse.model, tuple(mapping), cap)
    if not mu.test_preserving:
        raise LawViolation("the union collapse must be test-preserving")
    return mu


@dataclass(frozen=True)
class MonadLawReport:
    associativity_points: int
    unit_points: int

    @property
    def holds(self) -> bool:
        return True  # construction raises on any failure


def check_monad_laws_sharp(model: Model, cap: int | None = None) -> MonadLawReport:
    """Pointwise commutation of the associativity square and unit triangles.

    The square is checked on every outcome of the triple coarsening, i.e.
    on every nonempty event of the double coarsening's test space, streamed
    rather than materialized as a model.
    """
    coarse = coarsen(model, cap)
    double = coarsen(coarse.model, cap)
    # mu at the two levels, as outcome tables.
    mu1 = [coarse.to_coarse(frozenset().union(*(coarse.to_event(i) for i in ev)))
           for ev in double.outcome_event]
    counter = CapCounter("triple-coarsening outcomes", cap)
    points = 0
    for t in double.model.space.tests:
        members = sorted(t)
        for sub in _nonempty_subsets(members):
            counter.tick()
            points += 1
            # sharp(mu): apply mu to each member, then collapse; vs collapse twice.
            via_functor = frozenset(mu1[b] for b in sub)
            union1 = frozenset().union(*(coarse.to_event(i) for i in via_functor))
            left = coarse.to_coarse(union1)
            merged = frozenset().union(*(double.to_event(b) for b in sub))
            union2 = frozenset().union(*(coarse.to_event(i) for i in merged))
            right = coarse.to_coarse(union2)
            if left != right:
                raise LawViolation(f"associativity square fails at {sorted(sub)}")
    unit_points = 0
    for i, ev in enumerate(coarse.outcome_event):
        # mu after sharp(eta): split into singletons, then union.
        singletons = frozenset(coarse.to_coarse(frozenset([x])) for x in ev)
        union = frozenset().union(*(coarse.to_event(j) for j in singletons))
        if coarse.to_coarse(union) != i:
            raise LawViolation("left unit triangle fails")
        # mu after eta of the coarsening: wrap as one block, then union.
        if coarse.to_coarse(frozenset(ev)) != i:
            raise LawViolation("right unit triangle fails")
        unit_points += 1
    return MonadLawReport(points, unit_points)


def _nonempty_subsets(members: list):
    n = len(members)
    for mask in range(1, 1 << n):
        yield frozenset(members[i] for i in range(n) if mask >> i & 1)


# -- coherences and cohesions ---------------------------------------------------


class CoherenceMap:
    """Total map from nonempty events to outcomes of the same model."""

    def __init__(self, fn: Callable[[frozenset], int] | Mapping[frozenset, int]):
        if callable(fn):
            self._fn = fn
        else:
            table = {frozenset(k): v for k, v in fn.items()}
            self._fn = table.__getitem__

    def __call__(self, event: Iterable[int]) -> int:
        return self._fn(frozenset(event))


@dataclass(frozen=True)
class CheckedCoherence:
    """A validated coarsening-algebra structure on a model."""

    model: Model
    coarse: Coarsening
    morphism: Morphism  # the structure map from the coarsening back to the model
    table: Mapping[frozenset, int]

    def __call__(self, event: Iterable[int]) -> int:
        return self.table[frozenset(event)]


def validate_coherence(
    model: Model,
    sigma: CoherenceMap | Mapping[frozenset, int],
    cap: int | None = None,
    coarse: Coarsening | None = None,
) -> CheckedCoherence:
    """Validate a structure map for the coarsening construction.

    Checks: the map is a morphism from the coarsening to the model; it fixes
    singletons; it satisfies the grouped-refinement identity on jointly
    orthogonal families; and the derived substitution facts (image tests,
    perspectivity of an event with its collapse) hold.
    """
    if not isinstance(sigma, CoherenceMap):
        sigma = CoherenceMap(sigma)
    coarse = coarse if coarse is not None else coarsen(model, cap)
    space = model.space
    table = {ev: sigma(ev) for ev in coarse.outcome_event}
    for x in range(space.n_outcomes):
        if table[frozenset([x])] != x:
            raise NotCoherence(
                f"singleton {space.labels[x]} is not fixed", witness=x
            )
    try:
        phi = validate_morphism(
            coarse.model, model, tuple(table[ev] for ev in coarse.outcome_event), cap
        )
    except MorphismError as exc:
        raise NotCoherence(f"structure map is not a morphism: {exc}", witness=exc.witness)
    # Grouped refinement: collapsing a jointly orthogonal family member-wise
    # and then collapsing the result agrees with collapsing the union.
    counter = CapCounter("coherence families", cap)
    for t in coarse.model.space.tests:
        for fam in _nonempty_subsets(sorted(t)):
            counter.tick()
            blocks = [coarse.to_event(i) for i in fam]
            union = frozenset().union(*blocks)
            inner = frozenset(table[b] for b in blocks)
            if inner not in coarse.event_outcome and len(inner) > 1:
                raise NotCoherence(
                    "member-wise collapse of a jointly orthogonal family is not an event",
                    witness=fam,
                )
            rhs = table[inner] if len(inner) > 1 else next(iter(inner))
            if table[union] != rhs:
                raise NotCoherence(
                    "grouped refinement identity fails", witness=(union, inner)
                )
    if not phi.test_preserving:
        raise LawViolation("a coherence must be test-preserving")
    for t in space.tests:
        for sub in _nonempty_subsets(sorted(t)):
            patched = (t - sub) | {table[sub]}
            if patched not in space.test_set:
                raise LawViolation(
                    "substituting the collapse into its test must give a test"
                )
            if not space.is_perspective(frozenset([table[sub]]), sub):
                raise LawViolation("an event must be perspective to its collapse")
    return CheckedCoherence(model, coarse, phi, table)


def is_cohesion(checked: CheckedCoherence, cap: int | None = None) -> PredicateResult:
    """Substitution the other way: an event may replace its collapse in any test."""
    space = checked.model.space
    counter = CapCounter("cohesion pairs", cap)
    for ev, cx in checked.table.items():
        for t in space.tests:
            if cx not in t:
                continue
            counter.tick()
            if (t - {cx}) | ev not in space.test_set:
                return PredicateResult(False, (t, ev))
    return PredicateResult(True)


@dataclass(frozen=True)
class ProjectivityClassification:
    cohesive_and_projective: bool
    cohesive_and_collapse_constant: bool
    algebraic_and_projective: bool

    @property
    def all_equal(self) -> bool:
        return (
            self.cohesive_and_projective
            == self.cohesive_and_collapse_constant
            == self.algebraic_and_projective
        )


def classify_projectivity(
    checked: CheckedCoherence, cap: int | None = None
) -> ProjectivityClassification:
    """Three equivalent descriptions of projective coarsening algebras.

    Evaluates each side independently and raises if they ever disagree.
    """
    space = checked.model.space
    cohesive = bool(is_cohesion(checked, cap))
    projective = bool(space.projective())
    algebraic = bool(space.algebraic(cap))
    constant = True
    for evs in space._complement_buckets(cap).values():
        vals = {checked.table[a] for a in evs if a}
        if len(vals) > 1:
            constant = False
            break
    out = ProjectivityClassification(
        cohesive_and_projective=cohesive and projective,
        cohesive_and_collapse_constant=cohesive and constant,
        algebraic_and_projective=algebraic and projective,
    )
    if not out.all_equal:
        raise LawViolation(f"projectivity classifications disagree: {out}")
    return out


def check_regular_cohesive_logic(
    checked: CheckedCoherence, cap: int | None = None
) -> Orthoalgebra:
    """A regular model with a cohesion is coherent and algebraic with an OMP logic.

    Raises HypothesisUnmet unless the model is regular and the structure map
    is a cohesion; raises LawViolation if the guaranteed conclusions fail.
    """
    space = checked.model.space
    if not space.regular(cap):
        raise HypothesisUnmet("model is not regular")
    if not is_cohesion(checked, cap):
        raise HypothesisUnmet("structure map is not a cohesion")
    if not space.coherent(cap):
        raise LawViolation("regular cohesive model failed to be coherent")
    if not space.algebraic(cap):
        raise LawViolation("regular cohesive model failed to be algebraic")
    logic = build_logic(space, cap)
    if not logic.is_omp():
        raise LawViolation("regular cohesive model has a non-orthomodular logic")
    return logic


def check_sharp_algebra_laws(checked: CheckedCoherence, cap: int | None = None) -> int:
    """Pointwise unit and associativity laws for a coarsening algebra.

    The unit law is singleton fixing; the associativity law compares
    member-wise collapse with union collapse on every outcome of the double
    coarsening.  Returns the number of points checked.
    """
    coarse = checked.coarse
    double = coarsen(coarse.model, cap)
    points = 0
    for ev in double.outcome_event:
        blocks = [coarse.to_event(i) for i in ev]
        union = frozenset().union(*blocks)
        inner = frozenset(checked.table[b] for b in blocks)
        via_member = (
            checked.table[inner] if len(inner) > 1 else next(iter(inner))
        )
        if checked.table[union] != via_member:
            raise LawViolation("coarsening-algebra associativity fails")
        points += 1
    return points


def sharp_logic_iso(
    model: Model,
    coarse: Coarsening | None = None,
    cap: int | None = None,
) -> OrthoMap:
    """The logic of a model and of its coarsening agree, class by class.

    Builds both logics and the canonical singleton map, verifying it is a
    sum-preserving bijection.
    """
    coarse = coarse if coarse is not None else coarsen(model, cap)
    src_logic = build_logic(model.space, cap)
    dst_logic = build_logic(coarse.model.space, cap)
    table: list[int | None] = [None] * len(src_logic)
    for a, cls in src_logic.class_of.items():
        if not a:
            image_cls = dst_logic.zero
        else:
            image_cls = dst_logic.class_of[frozenset([coarse.to_coarse(a)])]
        if table[cls] is None:
            table[cls] = image_cls
        elif table[cls] != image_cls:
            raise LawViolation("singleton logic map is ill-defined")
    if len(set(table)) != len(table) or len(src_logic) != len(dst_logic):
        raise LawViolation("logics of the model and its coarsening are not in bijection")
    for (p, q), s in src_logic.oplus.items():
        if dst_logic.oplus.get((table[p], table[q])) != table[s]:
            raise LawViolation("singleton logic map does not preserve sums")
    return OrthoMap(src_logic, dst_logic, tuple(table))
