"""Structure-respecting maps between probabilistic models.

A morphism is a total outcome map that preserves orthogonality, sends tests
to events, keeps test images mutually perspective, and pulls every target
state back to a multiple of a source state.  Test-preserving maps get a
fast path: for those, the event and perspectivity conditions hold
automatically, as does the state condition whenever the source carries the
full weight polytope.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

from .errors import (
    DomainMismatch,
    EnumerationCapExceeded,
    HypothesisUnmet,
    ImageNotEvent,
    ImagesNotPerspective,
    LawViolation,
    NotLocallyInjective,
    PullbackNotState,
    UsageError,
)
from .states import GENERATORS, Model, Weight, sample_polytope_vertices, transversal_weights

VERTEX_CAP = 10_000
SAMPLE_POINTS = 256

D_IMPLIED = "implied"  # full source: pullbacks are multiples of states by perspectivity
D_EXACT = "exact"  # checked against generators or enumerated vertices
D_SAMPLED = "sampled"  # vertex enumeration intractable; randomized spot-check only


@dataclass(frozen=True)
class Morphism:
    source: Model
    target: Model
    mapping: tuple[int, ...]
    test_preserving: bool
    embedding: bool
    d_status: str

    def __call__(self, x: int) -> int:
        return self.mapping[x]

    def image(self, event) -> frozenset:
        return frozenset(self.mapping[x] for x in event)

    def pullback(self, beta: Weight) -> Weight:
        return Weight(tuple(beta[self.mapping[x]] for x in range(len(self.mapping))))

    def __repr__(self) -> str:
        pairs = ", ".join(
            f"{self.source.space.labels[x]}->{self.target.space.labels[self.mapping[x]]}"
            for x in range(len(self.mapping))
        )
        return f"Morphism({pairs})"


def validate_morphism(
    source: Model,
    target: Model,
    mapping: Sequence[int] | Callable[[int], int] | dict,
    cap: int | None = None,
    sample_seed: int = 0,
) -> Morphism:
    """Check the four morphism conditions and compute the derived flags.

    Raises a :class:`MorphismError` subclass with a witness on the first
    violated condition.
    """
    src, dst = source.space, target.space
    if callable(mapping):
        mapping = tuple(mapping(x) for x in range(src.n_outcomes))
    elif isinstance(mapping, dict):
        mapping = tuple(mapping[x] for x in range(src.n_outcomes))
    else:
        mapping = tuple(mapping)
    if len(mapping) != src.n_outcomes:
        raise UsageError("mapping must be total on the source outcomes")
    for fx in mapping:
        if not 0 <= fx < dst.n_outcomes:
            raise UsageError(f"image id {fx} outside the target outcome range")

    # (a) orthogonality preservation; implies injectivity on each test.
    for t in src.tests:
        members = sorted(t)
        for i, x in enumerate(members):
            for y in members[i + 1 :]:
                if not dst.orthogonal(mapping[x], mapping[y]):
                    raise NotLocallyInjective(
                        f"{src.labels[x]},{src.labels[y]} are orthogonal but their "
                        "images are not",
                        witness=(x, y),
                    )

    # (b) tests land on events.
    images = [frozenset(mapping[x] for x in t) for t in src.tests]
    for t, img in zip(src.tests, images):
        if not dst.is_event(img):
            raise ImageNotEvent(
                f"image of test {src.labels_of(t)} is not an event", witness=t
            )

    test_preserving = all(img in dst.test_set for img in images)

    # (c) images of tests are mutually perspective (automatic when each image
    # is itself a test: any two tests share the empty complement).
    if not test_preserving:
        for i in range(len(images)):
            for j in range(i + 1, len(images)):
                if not dst.is_perspective(images[i], images[j]):
                    raise ImagesNotPerspective(
                        "test images are not perspective",
                        witness=(src.tests[i], src.tests[j]),
                    )

    # (d) state pullbacks are multiples of source states.
    d_status = _check_state_condition(source, target, mapping, cap, sample_seed)

    injective = len(set(mapping)) == len(mapping)
    return Morphism(
        source=source,
        target=target,
        mapping=mapping,
        test_preserving=test_preserving,
        embedding=test_preserving and injective,
        d_status=d_status,
    )


def _check_state_condition(source, target, mapping, cap, sample_seed) -> str:
    def pull(beta: Weight) -> Weight:
        return Weight(tuple(beta[mapping[x]] for x in range(source.space.n_outcomes)))

    if source.states.is_full:
        # Perspective events get equal weight under every probability weight,
        # so pullbacks have constant test sums and normalize into the full
        # polytope; nothing to solve.
        return D_IMPLIED
    if target.states.kind == GENERATORS:
        for beta in target.states.generators:
            w = pull(beta)
            if not source.contains_ray(w):
                raise PullbackNotState(
                    "a generator state pulls back outside the source state cone",
                    witness=beta,
                )
        return D_EXACT
    # Generators source, full target: conic membership is convex in the
    # target state, so checking the polytope's vertices decides the
    # universal statement; fall back to a seeded sample when vertex
    # enumeration would blow the cap, and say so in the flag.
    try:
        candidates = target.state_vertices(cap=VERTEX_CAP if cap is None else cap)
        status = D_EXACT
    except EnumerationCapExceeded:
        candidates = sample_polytope_vertices(target, SAMPLE_POINTS, seed=sample_seed)
        candidates.extend(transversal_weights(target.space, cap=VERTEX_CAP))
        status = D_SAMPLED
    for beta in candidates:
        w = pull(beta)
        if not source.contains_ray(w):
            raise PullbackNotState(
                "a target state pulls back outside the source state cone",
                witness=beta,
            )
    return status


def identity_morphism(model: Model) -> Morphism:
    return validate_morphism(model, model, tuple(range(model.space.n_outcomes)))


def compose(psi: Morphism, phi: Morphism) -> Morphism:
    """psi after phi; revalidates the composite in debug mode."""
    if phi.target is not psi.source:
        raise DomainMismatch("codomain of the first factor must be the domain of the second")
    mapping = tuple(psi.mapping[fx] for fx in phi.mapping)
    composite = Morphism(
        source=phi.source,
        target=psi.target,
        mapping=mapping,
        test_preserving=phi.test_preserving and psi.test_preserving,
        embedding=phi.embedding and psi.embedding,
        d_status=min(phi.d_status, psi.d_status, key=_d_rank),
    )
    if __debug__:
        revalidated = validate_morphism(phi.source, psi.target, mapping)
        assert revalidated.mapping == composite.mapping
        composite = replace(
            composite,
            test_preserving=revalidated.test_preserving,
            embedding=revalidated.embedding,
        )
    return composite


def _d_rank(status: str) -> int:
    return {D_SAMPLED: 0, D_EXACT: 1, D_IMPLIED: 2}[status]


def morphisms_equal(f: Morphism, g: Morphism) -> bool:
    return f.source is g.source and f.target is g.target and f.mapping == g.mapping


def check_preserves_perspectivity(phi: Morphism, cap: int | None = None):
    """Exhaustive check that perspective source events have perspective images.

    Holds for every validated morphism; exposed so corrupted maps can be
    probed.  Returns a PredicateResult-style (ok, witness) pair.
    """
    src, dst = phi.source.space, phi.target.space
    events = src.events_list(cap)
    for i, a in enumerate(events):
        for b in events[i + 1 :]:
            if src.is_perspective(a, b) and not dst.is_perspective(
                phi.image(a), phi.image(b)
            ):
                return False, (a, b)
    return True, None


def check_retraction_test_preserving(phi: Morphism, psi: Morphism) -> bool:
    """A left inverse of an embedding must be test-preserving.

    Raises HypothesisUnmet unless phi is an embedding with psi after phi the
    identity; raises LawViolation if the conclusion somehow fails (it never
    should for validated morphisms).
    """
    if not phi.embedding:
        raise HypothesisUnmet("first argument must be an embedding")
    if phi.source is not psi.target or phi.target is not psi.source:
        raise HypothesisUnmet("need psi : B -> A against phi : A -> B")
    if any(psi.mapping[phi.mapping[x]] != x for x in range(len(phi.mapping))):
        raise HypothesisUnmet("psi does not invert phi on outcomes")
    if not psi.test_preserving:
        raise LawViolation("left inverse of an embedding failed to preserve tests")
    return True


def image_core(phi: Morphism) -> frozenset:
    """Core of the image test family: outcomes common to every test image."""
    images = [phi.image(t) for t in phi.source.space.tests]
    out = images[0]
    for img in images[1:]:
        out &= img
    return out


def corrupt_mapping(phi: Morphism, x: int, new_target: int) -> tuple[int, ...]:
    """A deliberately corrupted copy of the outcome map, for negative tests."""
    mapping = list(phi.mapping)
    mapping[x] = new_target
    return tuple(mapping)
