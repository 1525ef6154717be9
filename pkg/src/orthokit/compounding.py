"""Two-stage forward products and depth-truncated sequential compounding.

A forward product runs one test, then a pre-selected follow-up test per
outcome; its states are pairs of an initial state and a conditional-state
family.  Closing a model under such branching (with stopping) over the free
monoid of outcome strings gives the sequential compounding; the full
closure is infinite, so everything here is depth-truncated and every law is
checked on the window that fits the truncation.

Models carrying their own associative product (sequential models) are the
algebras of that construction; products are allowed to be partial, either
because a compound outcome is impossible (a classical product with empty
intersection) or because it falls outside the truncation window.  The two
readings differ in event arithmetic and are tracked explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iproduct
from typing import Callable, Iterable, Mapping, Sequence

import random

from .errors import (
    CapCounter,
    EnumerationCapExceeded,
    HypothesisUnmet,
    LawViolation,
    NotAMorphism,
    NotSequential,
    UsageError,
    ZeroMarginal,
)
from .morphisms import Morphism, validate_morphism
from .states import (
    Model,
    StateSpace,
    Weight,
    constructed_model,
    sample_polytope_vertices,
)
from .testspace import PredicateResult, TestSpace, event_key

EPSILON_LABEL = "ε"
JOIN = "·"

IMPOSSIBLE = "impossible"  # undefined products carry zero probability mass
OUT_OF_WINDOW = "out_of_window"  # undefined products fall outside a truncation


# -- forward products ----------------------------------------------------------


@dataclass(frozen=True)
class ForwardProduct:
    """Two-stage compound of two models, with pair interning."""

    left: Model
    right: Model
    model: Model
    outcome_pair: tuple[tuple[int, int], ...]
    pair_id: Mapping[tuple[int, int], int]

    def pair(self, x: int, y: int) -> int:
        return self.pair_id[(x, y)]

    def decompose(self, event: Iterable[int]):
        """Split a product event into its first-stage event and fibers."""
        first: dict[int, set[int]] = {}
        for i in event:
            x, y = self.outcome_pair[i]
            first.setdefault(x, set()).add(y)
        return frozenset(first), {x: frozenset(ys) for x, ys in first.items()}

    def state(self, alpha: Weight, beta: Callable[[int], Weight] | Weight) -> Weight:
        """The state running ``alpha`` first and the ``beta`` family after."""
        if isinstance(beta, Weight):
            fixed = beta
            beta = lambda _x: fixed  # noqa: E731
        vals = []
        for (x, y) in self.outcome_pair:
            vals.append(alpha[x] * beta(x)[y])
        return Weight(vals)


def forward_product(left: Model, right: Model, cap: int | None = None) -> ForwardProduct:
    """All two-stage tests: a first test, then a chosen follow-up per outcome."""
    ls, rs = left.space, right.space
    pairs = [(x, y) for x in range(ls.n_outcomes) for y in range(rs.n_outcomes)]
    pair_id = {p: i for i, p in enumerate(pairs)}
    labels = [f"{ls.labels[x]}{JOIN}{rs.labels[y]}" for x, y in pairs]
    counter = CapCounter("forward-product tests", cap)
    tests = []
    for e in ls.tests:
        members = sorted(e)
        for choice in iproduct(range(len(rs.tests)), repeat=len(members)):
            counter.tick()
            t = frozenset(
                pair_id[(x, y)]
                for x, fi in zip(members, choice)
                for y in rs.tests[fi]
            )
            tests.append(t)
    space = TestSpace(tuple(labels), tests)
    if left.states.is_full and right.states.is_full:
        states = StateSpace.full()
    else:
        lgens = left.states.generators or tuple(left.state_vertices(cap))
        rgens = right.states.generators or tuple(right.state_vertices(cap))
        gens = []
        counter2 = CapCounter("forward-product generators", cap)
        for alpha in lgens:
            for assign in iproduct(range(len(rgens)), repeat=ls.n_outcomes):
                counter2.tick()
                gens.append(
                    Weight(
                        tuple(alpha[x] * rgens[assign[x]][y] for x, y in pairs)
                    )
                )
        seen = set()
        uniq = []
        for g in gens:
            if g.values not in seen:
                seen.add(g.values)
                uniq.append(g)
        states = StateSpace.hull(uniq)
    model = constructed_model(space, states, left)
    return ForwardProduct(left, right, model, tuple(pairs), pair_id)


def fp_perspective_by_parts(fp: ForwardProduct, a, b) -> bool:
    """Perspectivity in a forward product, decided componentwise.

    Two product events are perspective exactly when their first-stage events
    are, their shared fibers are pairwise perspective, and every unshared
    fiber is a whole follow-up test.  In debug mode the verdict is checked
    against the direct common-complement search.
    """
    a, b = frozenset(a), frozenset(b)
    ao, afib = fp.decompose(a)
    bo, bfib = fp.decompose(b)
    ls, rs = fp.left.space, fp.right.space
    verdict = ls.is_perspective(ao, bo)
    if verdict:
        for z in ao & bo:
            if not rs.is_perspective(afib[z], bfib[z]):
                verdict = False
                break
    if verdict:
        for x in ao - bo:
            if afib[x] not in rs.test_set:
                verdict = False
                break
    if verdict:
        for y in bo - ao:
            if bfib[y] not in rs.test_set:
                verdict = False
                break
    if __debug__:
        assert verdict == fp.model.space.is_perspective(a, b), (
            "componentwise perspectivity disagrees with the complement search"
        )
    return verdict


def image_family_core(phi: Morphism) -> frozenset:
    images = [phi.image(t) for t in phi.source.space.tests]
    out = images[0]
    for img in images[1:]:
        out &= img
    return out


def pair_morphism(
    fp_src: ForwardProduct,
    fp_dst: ForwardProduct,
    phi: Morphism,
    psi: Mapping[int, Morphism] | Callable[[int], Morphism],
    cap: int | None = None,
) -> Morphism:
    """The stagewise map (x, y) to (phi(x), psi_x(y)) between forward products.

    This is a morphism exactly when psi_x preserves tests for every x whose
    image escapes the core of the image test family; the violating outcome
    is reported otherwise.
    """
    if phi.source is not fp_src.left or phi.target is not fp_dst.left:
        raise UsageError("first-stage morphism endpoints do not match the products")
    get_psi = psi if callable(psi) else psi.__getitem__
    core = image_family_core(phi)
    for x in range(fp_src.left.space.n_outcomes):
        if phi.mapping[x] not in core and not get_psi(x).test_preserving:
            raise NotAMorphism(
                "follow-up map must preserve tests off the image core",
                witness=x,
            )
    mapping = tuple(
        fp_dst.pair(phi.mapping[x], get_psi(x).mapping[y])
        for (x, y) in fp_src.outcome_pair
    )
    return validate_morphism(fp_src.model, fp_dst.model, mapping, cap)


def marginal_and_conditional(fp: ForwardProduct, w: Weight, x: int):
    """First-stage marginal and the conditional state after outcome x.

    The marginal at an outcome must not depend on which follow-up test is
    summed over; that independence is asserted across all tests.
    """
    model = fp.model
    rs = fp.right.space
    sums = [
        sum((w[fp.pair(x, y)] for y in t), start=0) for t in rs.tests
    ]
    for s in sums[1:]:
        if not model._eq(s, sums[0]):
            raise LawViolation("marginal depends on the follow-up test")
    marg = sums[0]
    if model._eq(marg, 0):
        raise ZeroMarginal(f"outcome {fp.left.space.labels[x]} has zero marginal")
    cond = Weight(tuple(w[fp.pair(x, y)] / marg for y in range(rs.n_outcomes)))
    return marg, cond


def marginal_weight(fp: ForwardProduct, w: Weight) -> Weight:
    vals = []
    t0 = fp.right.space.tests[0]
    for x in range(fp.left.space.n_outcomes):
        vals.append(sum((w[fp.pair(x, y)] for y in t0), start=0))
    return Weight(vals)


def retrodictive_marginal(fp: ForwardProduct, w: Weight, first_test: frozenset) -> Weight:
    """Second-stage marginal relative to a chosen first test (test-dependent)."""
    vals = []
    for y in range(fp.right.space.n_outcomes):
        vals.append(sum((w[fp.pair(x, y)] for x in first_test), start=0))
    return Weight(vals)


# -- unit adjunction at the model level -------------------------------------------


def adjoin_unit_model(model: Model, label: str = "e") -> tuple[Model, int]:
    """Add a one-outcome test; states extend uniquely with weight 1 there."""
    space = model.space.adjoin_unit_test(label)
    new_id = space.n_outcomes - 1
    if model.states.is_full:
        states = StateSpace.full()
    else:
        one = Fraction(1) if model.exact else 1.0
        states = StateSpace.hull(
            [Weight(tuple(g.values) + (one,)) for g in model.states.generators]
        )
    return constructed_model(space, states, model), new_id


# -- truncated compounding ----------------------------------------------------------


@dataclass(frozen=True)
class TruncatedCompound:
    """The depth-limited closure of a model under branching sequential tests."""

    base: Model
    depth: int
    model: Model
    strings: tuple[tuple[int, ...], ...]
    string_id: Mapping[tuple[int, ...], int]

    def id_of(self, string: Sequence[int]) -> int:
        return self.string_id[tuple(string)]

    def string_of(self, sid: int) -> tuple[int, ...]:
        return self.strings[sid]

    def tests_as_strings(self) -> set[frozenset]:
        return {
            frozenset(self.strings[i] for i in t) for t in self.model.space.tests
        }


def string_label(base: TestSpace, string: tuple[int, ...]) -> str:
    if not string:
        return EPSILON_LABEL
    parts = []
    for x in string:
        lab = base.labels[x]
        # Bracket letters that could make joined strings ambiguous.
        parts.append(f"({lab})" if (JOIN in lab or lab == EPSILON_LABEL) else lab)
    return JOIN.join(parts)


def truncated_compound(
    model: Model, depth: int, cap: int | None = None, generator_cap: int = 4096
) -> TruncatedCompound:
    """Close the one-stage tests under branch-and-stop up to the given depth.

    Tests are grown from the root: each outcome string of a test may either
    stop or branch into a one-stage test, and only tests whose strings all
    fit the depth survive.  States are the depth-limited transition states;
    for generator models the generators are all assignments of generator
    rows to proper prefixes, capped at ``generator_cap``.
    """
    if depth < 0:
        raise UsageError("depth must be nonnegative")
    base = model.space
    strings: list[tuple[int, ...]] = [()]
    frontier = [()]
    for _ in range(depth):
        nxt = []
        for s in frontier:
            for x in range(base.n_outcomes):
                nxt.append(s + (x,))
        strings.extend(nxt)
        frontier = nxt
    strings.sort(key=lambda s: (len(s), s))
    string_id = {s: i for i, s in enumerate(strings)}
    counter = CapCounter("compound tests", cap)
    root = frozenset([string_id[()]])
    tests = {root}
    work = [root]
    while work:
        t = work.pop()
        members = sorted(t)
        options = []
        for sid in members:
            s = strings[sid]
            opts = [None]
            if len(s) < depth:
                opts.extend(range(len(base.tests)))
            options.append(opts)
        for choice in iproduct(*options):
            if all(c is None for c in choice):
                continue
            counter.tick()
            new = set()
            for sid, c in zip(members, choice):
                if c is None:
                    new.add(sid)
                else:
                    s = strings[sid]
                    for x in base.tests[c]:
                        new.add(string_id[s + (x,)])
            ft = frozenset(new)
            if ft not in tests:
                tests.add(ft)
                work.append(ft)
    labels = tuple(string_label(base, s) for s in strings)
    space = TestSpace(labels, sorted(tests, key=event_key))
    if model.states.is_full:
        states = StateSpace.full()
    else:
        gens = model.states.generators
        prefixes = [s for s in strings if len(s) < depth]
        total = len(gens) ** len(prefixes) if prefixes else 1
        if total > generator_cap:
            raise EnumerationCapExceeded("compound generators", generator_cap)
        out = []
        for assign in iproduct(range(len(gens)), repeat=len(prefixes)):
            row = {p: gens[g] for p, g in zip(prefixes, assign)}
            vals = []
            for s in strings:
                v = Fraction(1) if model.exact else 1.0
                for i in range(len(s)):
                    v = v * row[s[:i]][s[i]]
                vals.append(v)
            out.append(Weight(tuple(vals)))
        seen = set()
        uniq = [g for g in out if not (g.values in seen or seen.add(g.values))]
        states = StateSpace.hull(uniq)
    compound_model = constructed_model(space, states, model)
    return TruncatedCompound(model, depth, compound_model, tuple(strings), string_id)


def transition_state(
    tc: TruncatedCompound, rows: Mapping[tuple[int, ...], Weight] | Callable
) -> Weight:
    """The state of the compound induced by per-prefix transition rows."""
    get = rows if callable(rows) else rows.__getitem__
    vals = []
    for s in tc.strings:
        v = Fraction(1) if tc.base.exact else 1.0
        for i in range(len(s)):
            v = v * get(s[:i])[s[i]]
        vals.append(v)
    return Weight(vals)


def check_unit_level(model: Model, cap: int | None = None) -> None:
    """Depth-one compounding coincides with the unit-test adjunction.

    The bijection sends the empty string to the adjoined unit and length-one
    strings to their base outcomes; tests and generators must correspond.
    """
    tc = truncated_compound(model, 1, cap)
    prime, unit = adjoin_unit_model(model, label="@unit@")
    base_n = model.space.n_outcomes

    def translate(sid: int) -> int:
        s = tc.strings[sid]
        return unit if not s else s[0]

    tc_tests = {frozenset(translate(i) for i in t) for t in tc.model.space.tests}
    if tc_tests != set(prime.space.tests):
        raise LawViolation("depth-one compound tests differ from the unit adjunction")
    if not model.states.is_full:
        lhs = {
            tuple(g[tc.id_of((x,))] for x in range(base_n)) + (g[tc.id_of(())],)
            for g in tc.model.states.generators
        }
        rhs = {g.values for g in prime.states.generators}
        if lhs != rhs:
            raise LawViolation("depth-one compound states differ from the unit adjunction")


def check_tower_recursion(model: Model, depth: int, cap: int | None = None) -> int:
    """One more level of depth equals a forward product with the unit adjunction.

    The canonical collapse (unit, s) -> s and (x, s) -> x.s carries the
    two-stage tests of (unit-adjoined model, depth-d compound) onto exactly
    the tests of the depth-(d+1) compound.  Returns the number of tests
    matched.  The outcome collapse is 2-to-1 on short strings, so this is a
    test-family correspondence rather than an outcome bijection.
    """
    tc_n = truncated_compound(model, depth, cap)
    tc_n1 = truncated_compound(model, depth + 1, cap)
    prime, unit = adjoin_unit_model(model, label="@unit@")
    fp = forward_product(prime, tc_n.model, cap)
    image = set()
    for t in fp.model.space.tests:
        out = set()
        for i in t:
            x, sid = fp.outcome_pair[i]
            s = tc_n.strings[sid]
            out.add(s if x == unit else (x,) + s)
        image.add(frozenset(tc_n1.id_of(s) for s in out))
    actual = set(tc_n1.model.space.tests)
    if image != actual:
        raise LawViolation("tower recursion mismatch between depths")
    return len(actual)


def functor_compound(
    phi: Morphism, depth: int, cap: int | None = None
) -> Morphism:
    """Letterwise extension of a test-preserving morphism to the compounds."""
    if not phi.test_preserving:
        raise HypothesisUnmet("compound functor needs a test-preserving morphism")
    src = truncated_compound(phi.source, depth, cap)
    dst = truncated_compound(phi.target, depth, cap)
    mapping = tuple(
        dst.id_of(tuple(phi.mapping[x] for x in s)) for s in src.strings
    )
    out = validate_morphism(src.model, dst.model, mapping, cap)
    if not out.test_preserving:
        raise LawViolation("letterwise extension failed to preserve tests")
    return out


# -- sequential products --------------------------------------------------------------


@dataclass(frozen=True)
class SequentialProduct:
    """A (possibly partial) associative unital product on outcomes."""

    unit: int
    table: Mapping[tuple[int, int], int]
    undefined_means: str = IMPOSSIBLE

    def prod(self, x: int, y: int) -> int | None:
        if x == self.unit:
            return y
        if y == self.unit:
            return x
        return self.table.get((x, y))

    def prod_string(self, xs: Sequence[int]) -> int | None:
        acc = self.unit
        for x in xs:
            acc = self.prod(acc, x)
            if acc is None:
                return None
        return acc

    def event_product(self, a: Iterable[int], b: Iterable[int]) -> frozenset | None:
        """Setwise product of events; None when a needed pair is out of window."""
        out = set()
        for x in a:
            for y in b:
                p = self.prod(x, y)
                if p is None:
                    if self.undefined_means == OUT_OF_WINDOW:
                        return None
                    continue
                out.add(p)
        return frozenset(out)


def concatenation_product(tc: TruncatedCompound) -> SequentialProduct:
    """String concatenation on a truncated compound, defined inside the window."""
    table = {}
    for i, s in enumerate(tc.strings):
        for j, t in enumerate(tc.strings):
            if len(s) + len(t) <= tc.depth:
                table[(i, j)] = tc.id_of(s + t)
    return SequentialProduct(
        tc.id_of(()), table, undefined_means=OUT_OF_WINDOW
    )


@dataclass(frozen=True)
class SequentialReport:
    unit_points: int
    associativity_checked: int
    associativity_skipped: int
    orthogonality_checked: int
    inductivity_mode: str  # "exhaustive" | "sampled"
    inductivity_checked: int
    inductivity_skipped: int
    state_candidates: int
    states_exhaustive: bool
    conditional_rows_checked: int
    evaluation_depth: int
    evaluation_domain: int
    evaluation_total: int

    @property
    def partially_verified(self) -> bool:
        return self.inductivity_mode == "sampled" or not self.states_exhaustive


@dataclass(frozen=True)
class CheckedSequential:
    model: Model
    product: SequentialProduct
    report: SequentialReport


def validate_sequential(
    model: Model,
    sp: SequentialProduct,
    probe_depth: int = 2,
    cap: int | None = None,
    seed: int = 0,
    exhaustive_test_size: int = 6,
    exhaustive_family_size: int = 8,
    state_candidate_cap: int = 64,
    states: Sequence[Weight] | None = None,
) -> CheckedSequential:
    """Validate a sequential structure on a model, within its defined window.

    Checks the monoid laws, compatibility of the product with orthogonality,
    closure of the test family under branch assignments, the state
    conditions (marginal and conditional states stay states), presence of
    the unit test, and that evaluating strings of the probe-depth compound
    lands test-preservingly back in the model.
    """
    if probe_depth < 1:
        raise UsageError("probe depth must be at least 1")
    space = model.space
    n = space.n_outcomes
    e = sp.unit

    for x in range(n):
        if sp.prod(e, x) != x or sp.prod(x, e) != x:
            raise NotSequential("unit law fails", witness=x)
    unit_points = n

    assoc_checked = assoc_skipped = 0
    for x in range(n):
        for y in range(n):
            xy = sp.prod(x, y)
            for z in range(n):
                yz = sp.prod(y, z)
                lhs = sp.prod(xy, z) if xy is not None else None
                rhs = sp.prod(x, yz) if yz is not None else None
                if lhs is None or rhs is None:
                    assoc_skipped += 1
                    continue
                if lhs != rhs:
                    raise NotSequential("associativity fails", witness=(x, y, z))
                assoc_checked += 1

    orth_checked = 0
    for x in range(n):
        for y in space.orth[x]:
            for z in range(n):
                zx, zy = sp.prod(z, x), sp.prod(z, y)
                if zx is not None and zy is not None:
                    orth_checked += 1
                    if not space.orthogonal(zx, zy):
                        raise NotSequential(
                            "left translation breaks orthogonality", witness=(z, x, y)
                        )
            for z in range(n):
                for w in range(n):
                    xz, yw = sp.prod(x, z), sp.prod(y, w)
                    if xz is not None and yw is not None:
                        orth_checked += 1
                        if not space.orthogonal(xz, yw):
                            raise NotSequential(
                                "products of orthogonal heads are not orthogonal",
                                witness=(x, z, y, w),
                            )

    if frozenset([e]) not in space.test_set:
        raise NotSequential("the unit must carry its own test", witness=e)

    # Inductivity: branch assignments keep us inside the test family.
    rng = random.Random(seed)
    exhaustive = all(len(t) <= exhaustive_test_size for t in space.tests) and (
        len(space.tests) <= exhaustive_family_size
    )
    ind_checked = ind_skipped = 0
    for t in space.tests:
        members = sorted(t)
        if exhaustive:
            assignments = iproduct(range(len(space.tests)), repeat=len(members))
        else:
            assignments = (
                tuple(rng.randrange(len(space.tests)) for _ in members)
                for _ in range(64)
            )
        for choice in assignments:
            image = set()
            skip = False
            for x, fi in zip(members, choice):
                for y in space.tests[fi]:
                    p = sp.prod(x, y)
                    if p is None:
                        if sp.undefined_means == OUT_OF_WINDOW:
                            skip = True
                            break
                        continue
                    image.add(p)
                if skip:
                    break
            if skip:
                ind_skipped += 1
                continue
            ind_checked += 1
            if frozenset(image) not in space.test_set:
                raise NotSequential(
                    "branch assignment leaves the test family",
                    witness=(t, choice),
                )

    # States: marginals equal the state itself; conditionals stay states.
    if states is not None:
        candidates = list(states)
        states_exhaustive = True
    elif model.states.is_full:
        try:
            candidates = model.state_vertices(cap=50_000)
            states_exhaustive = True
        except EnumerationCapExceeded:
            candidates = sample_polytope_vertices(model, state_candidate_cap, seed)
            states_exhaustive = False
    else:
        candidates = list(model.states.generators)
        states_exhaustive = True
    rows_checked = 0
    for w in candidates:
        for t in space.tests:
            for x in range(n):
                total = _windowed_marginal(model, sp, w, x, t)
                if total is None:
                    continue
                if not model._eq(total, w[x]):
                    raise NotSequential(
                        "marginal over a follow-up test differs from the state",
                        witness=(x, t),
                    )
        for x in range(n):
            if model._eq(w[x], 0):
                continue
            cond_vals = []
            full_domain = True
            for y in range(n):
                p = sp.prod(x, y)
                if p is None:
                    if sp.undefined_means == OUT_OF_WINDOW:
                        full_domain = False
                    cond_vals.append(None)
                else:
                    cond_vals.append(w[p] / w[x])
            if full_domain:
                zero = Fraction(0) if model.exact else 0.0
                cond = Weight(tuple(zero if v is None else v for v in cond_vals))
                rows_checked += 1
                if not model.contains_state(cond):
                    raise NotSequential(
                        "conditional state escapes the state space", witness=x
                    )

    # Evaluation of short strings back into the model.
    tc = truncated_compound(model, probe_depth, cap)
    domain = []
    values = {}
    for sid, s in enumerate(tc.strings):
        v = sp.prod_string(s)
        if v is not None:
            domain.append(sid)
            values[sid] = v
    dom = frozenset(domain)
    for x in range(n):
        if values.get(tc.id_of((x,))) != x:
            raise NotSequential("string evaluation does not extend the identity", witness=x)
    cspace = tc.model.space
    for t in cspace.tests:
        live = sorted(t & dom)
        img = frozenset(values[i] for i in live)
        if len(img) != len(live):
            raise NotSequential("string evaluation collapses a test", witness=t)
        if sp.undefined_means == IMPOSSIBLE or len(live) == len(t):
            if img and img not in space.test_set:
                raise NotSequential(
                    "string evaluation does not preserve tests", witness=t
                )
    report = SequentialReport(
        unit_points=unit_points,
        associativity_checked=assoc_checked,
        associativity_skipped=assoc_skipped,
        orthogonality_checked=orth_checked,
        inductivity_mode="exhaustive" if exhaustive else "sampled",
        inductivity_checked=ind_checked,
        inductivity_skipped=ind_skipped,
        state_candidates=len(candidates),
        states_exhaustive=states_exhaustive,
        conditional_rows_checked=rows_checked,
        evaluation_depth=probe_depth,
        evaluation_domain=len(domain),
        evaluation_total=len(tc.strings),
    )
    return CheckedSequential(model, sp, report)


def _windowed_marginal(model: Model, sp: SequentialProduct, w: Weight, x: int, t):
    """Sum of w over x followed by a test, or None when outside the window.

    Impossible compound outcomes contribute zero mass; out-of-window ones
    invalidate the whole sum.
    """
    total = 0
    for y in t:
        p = sp.prod(x, y)
        if p is None:
            if sp.undefined_means == OUT_OF_WINDOW:
                return None
            continue
        total = total + w[p]
    return total


def check_chain_rule(
    model: Model, sp: SequentialProduct, w: Weight
) -> PredicateResult:
    """Compound probabilities factor as marginal times conditional.

    Concretely: the marginal of w over any in-window follow-up test equals w
    itself, which is exactly what makes w(xy) = w(x) * w_x(y) with the
    conditional w_x(y) = w(xy)/w(x).  Fails on weights that do not arise
    from transition data.
    """
    n = model.space.n_outcomes
    for x in range(n):
        for t in model.space.tests:
            total = _windowed_marginal(model, sp, w, x, t)
            if total is None:
                continue
            if not model._eq(total, w[x]):
                return PredicateResult(False, (x, t))
    return PredicateResult(True)


def nonatomicity_report(
    tc: TruncatedCompound, cap: int | None = None
) -> list[tuple[tuple[int, ...], frozenset, frozenset]]:
    """Perspectivity witnesses showing no short string is atomic.

    For every string one shy of the depth limit or shorter, exhibits an axis
    between the singleton and its extension by a base test with at least two
    outcomes.  Raises HypothesisUnmet when every base test is a singleton.
    """
    base = tc.base.space
    wide = [t for t in base.tests if len(t) >= 2]
    if not wide:
        raise HypothesisUnmet("nonatomicity needs a base test with two outcomes")
    target_test = min(wide, key=event_key)
    space = tc.model.space
    out = []
    for sid, s in enumerate(tc.strings):
        if len(s) > tc.depth - 1:
            continue
        extension = frozenset(tc.id_of(s + (x,)) for x in target_test)
        axis = space.perspective(frozenset([sid]), extension)
        if axis is None:
            raise LawViolation(
                f"string {string_label(base, s)} has no axis to its extension"
            )
        out.append((s, extension, axis))
    return out


# -- preservation suites ---------------------------------------------------------------


@dataclass(frozen=True)
class PreservationReport:
    construction: str
    properties: dict  # name -> (input_holds, output_holds or None when skipped)
    skipped: tuple[str, ...]

    def verified(self, name: str) -> bool:
        pair = self.properties.get(name)
        return bool(pair and pair[0] and pair[1])


_PROPERTY_ORDER = ("unital", "strongly_unital", "regular", "algebraic", "coherent")


def _model_properties(model: Model, cap: int | None, wit: "_BaseWitnesses | None" = None):
    wit = wit or _BaseWitnesses(model)
    out = {}
    out["unital"] = all(w is not None for w in wit.unital.values())
    out["strongly_unital"] = all(w is not None for w in wit.strong.values())
    out["regular"] = bool(model.space.regular(cap))
    out["algebraic"] = bool(model.space.algebraic(cap))
    out["coherent"] = bool(model.space.coherent(cap))
    return out


def _vertex_or_generator_pool(model: Model, pool_cap: int) -> list[Weight]:
    if model.states.is_full:
        return model.state_vertices(cap=pool_cap)
    return list(model.states.generators)


def transition_vertex_pool(
    tc: TruncatedCompound, pool_cap: int = 20_000
) -> list[Weight] | None:
    """Spanning weights of a compound's state space, via extreme rows.

    Every state is a transition state, mixtures of rows mix the induced
    states multilinearly, so assigning extreme base states to the proper
    prefixes spans the whole state space.  Returns None when the assignment
    count would exceed the cap.
    """
    base_pool = _vertex_or_generator_pool(tc.base, pool_cap)
    prefixes = [s for s in tc.strings if len(s) < tc.depth]
    if len(base_pool) ** max(len(prefixes), 1) > pool_cap:
        return None
    out = []
    for assign in iproduct(range(len(base_pool)), repeat=len(prefixes)):
        rows = {p: base_pool[g] for p, g in zip(prefixes, assign)}
        out.append(transition_state(tc, rows))
    return out


def forward_vertex_pool(fp: ForwardProduct, pool_cap: int = 20_000) -> list[Weight] | None:
    """Spanning weights of a forward product's state space."""
    left_pool = _vertex_or_generator_pool(fp.left, pool_cap)
    right_pool = _vertex_or_generator_pool(fp.right, pool_cap)
    n = fp.left.space.n_outcomes
    if len(left_pool) * len(right_pool) ** n > pool_cap:
        return None
    out = []
    for alpha in left_pool:
        for assign in iproduct(range(len(right_pool)), repeat=n):
            out.append(fp.state(alpha, lambda x: right_pool[assign[x]]))
    return out


def _pool_unital(model: Model, pool) -> bool:
    return all(
        any(model._eq(w[x], 1) for w in pool) for x in range(model.space.n_outcomes)
    )


def _pool_strongly_unital(model: Model, pool) -> bool:
    space = model.space
    for x in range(space.n_outcomes):
        ones = [w for w in pool if model._eq(w[x], 1)]
        for y in range(space.n_outcomes):
            if x != y and space.orthogonal(x, y):
                continue
            if not any(w[y] > 0 for w in ones):
                return False
    return True


class _BaseWitnesses:
    """Certainty and positivity witness states of a base model, by scan."""

    def __init__(self, model: Model, pool_cap: int = 20_000):
        self.model = model
        pool = _vertex_or_generator_pool(model, pool_cap)
        n = model.space.n_outcomes
        self.any_state = pool[0]
        self.unital = {}
        self.positive = {}
        self.strong = {}
        for x in range(n):
            self.unital[x] = next((w for w in pool if model._eq(w[x], 1)), None)
            self.positive[x] = next((w for w in pool if w[x] > 0), None)
        for x in range(n):
            for y in range(n):
                if x != y and model.space.orthogonal(x, y):
                    continue
                self.strong[(x, y)] = next(
                    (w for w in pool if model._eq(w[x], 1) and w[y] > 0), None
                )


def compound_unitality(tc: TruncatedCompound, wit: _BaseWitnesses | None = None):
    """Unitality and strong unitality of a truncated compound, by witness states.

    Transition rows are chosen independently per prefix, so a state certain
    of a string needs a certainty witness per letter, and a strong-unitality
    witness at the divergence point of a string pair; every verdict is
    re-verified by evaluating the constructed transition state.
    """
    base = tc.base
    wit = wit or _BaseWitnesses(base)
    space = tc.model.space

    def rows_for(pins: dict) -> dict:
        return pins

    def evaluate(rows: dict, s: tuple) -> object:
        v = 1
        for i in range(len(s)):
            row = rows.get(s[:i], wit.any_state)
            v = v * row[s[i]]
        return v

    unital_ok = True
    for s in tc.strings:
        pins = {}
        ok = True
        for i, letter in enumerate(s):
            w = wit.unital[letter]
            if w is None:
                ok = False
                break
            pins[s[:i]] = w
        if ok:
            assert base._eq(evaluate(pins, s), 1)
        else:
            unital_ok = False
    su_ok = True
    n = len(tc.strings)
    for i in range(n):
        s = tc.strings[i]
        for j in range(n):
            t = tc.strings[j]
            if i == j or space.orthogonal(i, j):
                continue
            k = 0
            while k < len(s) and k < len(t) and s[k] == t[k]:
                k += 1
            pins = {}
            ok = True
            if k == len(s) or k == len(t):
                # one string extends the other: certainty along the shorter
                # chain rides for free on the longer one
                for idx, letter in enumerate(s):
                    w = wit.unital[letter]
                    if w is None:
                        ok = False
                        break
                    pins[s[:idx]] = w
            else:
                for idx, letter in enumerate(s):
                    if idx == k:
                        w = wit.strong.get((s[k], t[k]))
                    else:
                        w = wit.unital[letter]
                    if w is None:
                        ok = False
                        break
                    pins[s[:idx]] = w
            if ok:
                for idx in range(k, len(t)):
                    if t[:idx] not in pins:
                        pins[t[:idx]] = wit.positive[t[idx]]
                assert base._eq(evaluate(pins, s), 1)
                assert evaluate(pins, t) > 0
            else:
                su_ok = False
    # with diagonal pairs included, strong unitality subsumes unitality
    return unital_ok, su_ok and unital_ok


def forward_unitality(fp: ForwardProduct, left_wit=None, right_wit=None):
    """Unitality predicates of a forward product, by explicit pair states."""
    lw = left_wit or _BaseWitnesses(fp.left)
    rw = right_wit or _BaseWitnesses(fp.right)
    space = fp.model.space
    unital_ok = all(
        lw.unital[x] is not None and rw.unital[y] is not None
        for (x, y) in fp.outcome_pair
    )
    su_ok = True
    for i, (x, y) in enumerate(fp.outcome_pair):
        for j, (u, v) in enumerate(fp.outcome_pair):
            if i == j or space.orthogonal(i, j):
                continue
            if x == u:
                alpha, beta = lw.unital[x], rw.strong.get((y, v))
                ok = alpha is not None and beta is not None
                if ok:
                    state = fp.state(alpha, beta)
            else:
                alpha, betas = lw.strong.get((x, u)), (rw.unital[y], rw.positive[v])
                ok = alpha is not None and all(b is not None for b in betas)
                if ok:
                    table = {x: betas[0], u: betas[1]}
                    state = fp.state(alpha, lambda z: table.get(z, rw.any_state))
            if not ok:
                su_ok = False
                continue
            assert fp.left._eq(state[i], 1) and state[j] > 0
    return unital_ok, su_ok and unital_ok


def _preservation(construction, inputs: list[Model], output: Model, cap, unitality):
    in_props = [_model_properties(m, cap) for m in inputs]
    unital_got, su_got = unitality
    props = {}
    skipped = []
    for name in _PROPERTY_ORDER:
        # Strong unitality includes its diagonal pairs (hence unitality),
        # which is exactly what survives adding a unit outcome in compounds.
        premise = all(p[name] for p in in_props)
        try:
            if name == "unital":
                got = unital_got
            elif name == "strongly_unital":
                got = su_got
            elif name == "regular":
                got = bool(output.space.regular(cap))
            elif name == "algebraic":
                got = bool(output.space.algebraic(cap))
            else:
                got = bool(output.space.coherent(cap))
        except EnumerationCapExceeded:
            skipped.append(name)
            props[name] = (premise, None)
            continue
        if premise and not got:
            raise LawViolation(f"{construction} failed to preserve {name}")
        props[name] = (premise, got)
    return PreservationReport(construction, props, tuple(skipped))


def preservation_forward(
    left: Model, right: Model, cap: int | None = None
) -> PreservationReport:
    fp = forward_product(left, right, cap)
    return _preservation(
        "forward product", [left, right], fp.model, cap, forward_unitality(fp)
    )


def preservation_compound(
    model: Model, depth: int, cap: int | None = None
) -> PreservationReport:
    tc = truncated_compound(model, depth, cap)
    return _preservation(
        f"compound depth {depth}", [model], tc.model, cap, compound_unitality(tc)
    )
