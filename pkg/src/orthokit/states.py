"""Probability weights, state spaces, and probabilistic models.

A model couples a test space with a state space: either the full polytope
of probability weights or the convex hull of finitely many generator
weights.  A model is exact (Fraction-valued weights) or float-valued with a
per-model tolerance; the two never mix inside one model.

Membership and optimization questions (is this weight a state? does some
state put weight 1 on x?) all route through the exact simplex in
``linprog``.  Float models are rationalized on the way in and re-validated
against the model tolerance on the way out, because predicates like
"alpha(x) = 1 exactly" are brittle under floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import (
    NotAState,
    NumericKindMismatch,
    PositivityViolation,
    UsageError,
)
from .linprog import ZERO, LPResult, enumerate_vertices, solve_lp
from .testspace import TestSpace

FULL = "full"
GENERATORS = "generators"

DEFAULT_FLOAT_TOL = 1e-9


class Weight:
    """A function outcome-id -> scalar, stored densely."""

    __slots__ = ("values",)

    def __init__(self, values: Sequence):
        self.values = tuple(values)

    def __getitem__(self, x: int):
        return self.values[x]

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other) -> bool:
        return isinstance(other, Weight) and self.values == other.values

    def __hash__(self) -> int:
        return hash(self.values)

    def __repr__(self) -> str:
        return f"Weight({list(self.values)})"

    def of(self, event: Iterable[int]):
        """Total weight of an event (0 for the empty event)."""
        return sum((self.values[x] for x in event), start=0)


def weight_from_labels(space: TestSpace, assignment: Mapping[str, object]) -> Weight:
    vals = [0] * space.n_outcomes
    for lab, v in assignment.items():
        vals[space.outcome(lab)] = v
    return Weight(vals)


@dataclass(frozen=True)
class StateSpace:
    """Full polytope of probability weights, or a finite generator hull."""

    kind: str
    generators: tuple[Weight, ...] = ()

    @staticmethod
    def full() -> "StateSpace":
        return StateSpace(FULL)

    @staticmethod
    def hull(weights: Iterable[Weight]) -> "StateSpace":
        gens = tuple(weights)
        if not gens:
            raise UsageError("generator state spaces need at least one weight")
        return StateSpace(GENERATORS, gens)

    @property
    def is_full(self) -> bool:
        return self.kind == FULL


@dataclass(frozen=True)
class StateReport:
    """Per-outcome (or per-pair) verdicts for a state-dependent predicate."""

    name: str
    holds: bool
    failures: tuple = ()


class Model:
    """A test space together with a designated state space.

    The standing positivity assumption (every outcome gets positive weight
    from some state) is checked at construction unless the model was built
    by a construction that preserves it, and cached.
    """

    __slots__ = ("space", "states", "exact", "tol", "_rows")

    def __init__(
        self,
        space: TestSpace,
        states: StateSpace,
        exact: bool = True,
        tol: float | None = None,
        _check_positivity: bool = True,
    ):
        self.space = space
        self.states = states
        self.exact = exact
        self.tol = DEFAULT_FLOAT_TOL if (tol is None and not exact) else (tol or 0.0)
        self._rows = None
        if states.kind == GENERATORS:
            for g in states.generators:
                self._validate_weight(g)
        if _check_positivity:
            dead = self.positivity_failures()
            if dead:
                labels = [space.labels[x] for x in dead]
                raise PositivityViolation(f"no state is positive at {labels}")

    # -- scalar plumbing -------------------------------------------------------

    def _validate_weight(self, w: Weight) -> None:
        if len(w) != self.space.n_outcomes:
            raise NotAState("weight length does not match outcome count")
        for v in w.values:
            if self.exact and not isinstance(v, (Fraction, int)):
                raise NumericKindMismatch(f"exact model got scalar {v!r}")
            if not self.exact and isinstance(v, Fraction):
                raise NumericKindMismatch("float model got a Fraction scalar")
            if not self._geq(v, 0) or not self._geq(1, v):
                raise NotAState(f"weight value {v} outside [0,1]")
        for t in self.space.tests:
            if not self._eq(w.of(t), 1):
                raise NotAState(
                    f"weight sums to {w.of(t)} on test {self.space.labels_of(t)}"
                )

    def _eq(self, a, b) -> bool:
        if self.exact:
            return a == b
        return abs(a - b) <= self.tol

    def _geq(self, a, b) -> bool:
        if self.exact:
            return a >= b
        return a >= b - self.tol

    def _rationalize(self, v) -> Fraction:
        return v if isinstance(v, Fraction) else Fraction(v)

    # -- LP scaffolding ----------------------------------------------------------

    def polytope_rows(self):
        """Equality rows (one per test) cutting out the probability-weight polytope."""
        if self._rows is None:
            n = self.space.n_outcomes
            rows = []
            for t in self.space.tests:
                row = [ZERO] * n
                for x in t:
                    row[x] = Fraction(1)
                rows.append(row)
            self._rows = (rows, [Fraction(1)] * len(rows))
        rows, rhs = self._rows
        return [r[:] for r in rows], rhs[:]

    def optimize_over_states(
        self, objective: Sequence, fix: Sequence[tuple[int, object]] = (), maximize=True
    ) -> LPResult:
        """Extremize a linear functional of the state over the state space.

        ``fix`` pins outcome weights to given values. For float models the
        pins are enforced up to the model tolerance.
        """
        obj = [self._rationalize(v) for v in objective]
        slack = Fraction(0) if self.exact else Fraction(self.tol)
        if self.states.is_full:
            rows, rhs = self.polytope_rows()
            base = self.space.n_outcomes
            var_obj = obj[:]

            def fix_row(x: int) -> list[Fraction]:
                r = [ZERO] * base
                r[x] = Fraction(1)
                return r

        else:
            gens = self.states.generators
            base = len(gens)
            rows = [[Fraction(1)] * base]
            rhs = [Fraction(1)]
            var_obj = [
                sum((obj[x] * self._rationalize(g[x]) for x in range(len(obj))), ZERO)
                for g in gens
            ]

            def fix_row(x: int) -> list[Fraction]:
                return [self._rationalize(g[x]) for g in gens]

        extra = 0
        for x, val in fix:
            target = self._rationalize(val)
            if slack == 0:
                rows.append(fix_row(x))
                rhs.append(target)
            else:
                # row . v + s+ - s- = target with s+ + s- <= slack
                row = fix_row(x) + [ZERO] * extra + [Fraction(1), Fraction(-1), ZERO]
                bound = [ZERO] * (base + extra) + [Fraction(1), Fraction(1), Fraction(1)]
                rows.append(row)
                rhs.append(target)
                rows.append(bound)
                rhs.append(slack)
                extra += 3
        width = base + extra
        rows = [r + [ZERO] * (width - len(r)) for r in rows]
        var_obj = var_obj + [ZERO] * (width - len(var_obj))
        return solve_lp(rows, rhs, var_obj, maximize=maximize)

    # -- membership --------------------------------------------------------------

    def is_probability_weight(self, w: Weight) -> bool:
        try:
            self._validate_weight(w)
        except (NotAState, NumericKindMismatch):
            return False
        return True

    def contains_state(self, w: Weight) -> bool:
        """Membership of a probability weight in the state space."""
        if not self.is_probability_weight(w):
            return False
        if self.states.is_full:
            return True
        return self._hull_membership(w, conic=False)

    def contains_ray(self, w: Weight) -> bool:
        """Is ``w`` a nonnegative multiple of a state (zero included)?"""
        if len(w) != self.space.n_outcomes:
            raise NotAState("weight length does not match outcome count")
        if any(not self._geq(v, 0) for v in w.values):
            return False
        if self.states.is_full:
            sums = [w.of(t) for t in self.space.tests]
            return all(self._eq(s, sums[0]) for s in sums)
        return self._hull_membership(w, conic=True)

    def _hull_membership(self, w: Weight, conic: bool) -> bool:
        gens = self.states.generators
        m = len(gens)
        n = self.space.n_outcomes
        target = [self._rationalize(w[x]) for x in range(n)]
        table = [[self._rationalize(g[x]) for g in gens] for x in range(n)]
        if self.exact:
            rows = [table[x][:] for x in range(n)]
            rhs = target[:]
            if not conic:
                rows.append([Fraction(1)] * m)
                rhs.append(Fraction(1))
            res = solve_lp(rows, rhs, [ZERO] * m)
            return res.optimal
        # Float model: minimize the total residual, then re-validate per
        # coordinate against the tolerance.
        cols = m + 2 * n
        rows = []
        rhs = []
        for x in range(n):
            row = table[x][:] + [ZERO] * (2 * n)
            row[m + 2 * x] = Fraction(1)
            row[m + 2 * x + 1] = Fraction(-1)
            rows.append(row)
            rhs.append(target[x])
        if not conic:
            rows.append([Fraction(1)] * m + [ZERO] * (2 * n))
            rhs.append(Fraction(1))
        obj = [ZERO] * m + [Fraction(-1)] * (2 * n)
        res = solve_lp(rows, rhs, obj)
        if not res.optimal:
            return False
        lam = res.x[:m]
        for x in range(n):
            approx = sum((table[x][j] * lam[j] for j in range(m)), ZERO)
            if abs(float(approx) - float(target[x])) > self.tol:
                return False
        return True

    # -- state-dependent predicates ---------------------------------------------------

    def positivity_failures(self) -> list[int]:
        dead = []
        for x in range(self.space.n_outcomes):
            if self.states.is_full:
                obj = [ZERO] * self.space.n_outcomes
                obj[x] = Fraction(1)
                res = self.optimize_over_states(obj)
                ok = res.optimal and res.value > 0
            else:
                ok = any(float(g[x]) > 0 for g in self.states.generators)
            if not ok:
                dead.append(x)
        return dead

    def check_positive(self) -> StateReport:
        dead = self.positivity_failures()
        return StateReport("positive", not dead, tuple(dead))

    def check_unital(self) -> StateReport:
        """Every outcome is certain under some state."""
        failures = []
        n = self.space.n_outcomes
        for x in range(n):
            if self.states.is_full:
                obj = [ZERO] * n
                obj[x] = Fraction(1)
                res = self.optimize_over_states(obj)
                ok = res.optimal and self._eq_float_ok(res.value, 1)
            else:
                ok = any(self._eq(g[x], 1) for g in self.states.generators)
            if not ok:
                failures.append(x)
        return StateReport("unital", not failures, tuple(failures))

    def check_strongly_unital(self) -> StateReport:
        """Certainty at x leaves positive weight available at non-orthogonal y.

        The diagonal pair is included: a strongly unital model is in
        particular unital, which is what the downstream regularity and
        preservation facts actually need.
        """
        failures = []
        n = self.space.n_outcomes
        for x in range(n):
            for y in range(n):
                if x != y and self.space.orthogonal(x, y):
                    continue
                obj = [ZERO] * n
                obj[y] = Fraction(1)
                res = self.optimize_over_states(obj, fix=[(x, 1)])
                ok = res.optimal and float(res.value) > (0 if self.exact else self.tol)
                if not ok:
                    failures.append((x, y))
        return StateReport("strongly_unital", not failures, tuple(failures))

    def _eq_float_ok(self, value, target) -> bool:
        if self.exact:
            return value == target
        return abs(float(value) - target) <= self.tol

    def min_event_weight(self, a: Iterable[int]):
        """Minimum of alpha(a) over the state space (exact Fraction)."""
        a = frozenset(a)
        n = self.space.n_outcomes
        obj = [ZERO] * n
        for x in a:
            obj[x] = Fraction(1)
        if self.states.is_full:
            res = self.optimize_over_states(obj, maximize=False)
            if not res.optimal:
                raise PositivityViolation("state polytope is empty")
            return res.value
        return min(
            sum((self._rationalize(g[x]) for x in a), ZERO) for g in self.states.generators
        )

    def certain_event_is_test(self, a: Iterable[int]) -> bool:
        """If every state is certain of the event, it must be a whole test.

        Returns whether the hypothesis (certainty under all states) held;
        raises PositivityViolation if it held for a non-test, which a
        positive model cannot produce.
        """
        a = frozenset(a)
        if not self.space.is_event(a):
            raise UsageError("argument must be an event")
        lo = self.min_event_weight(a)
        hypothesis = self._eq_float_ok(lo, 1)
        if hypothesis and a not in self.space.test_set:
            raise PositivityViolation(
                f"event {self.space.labels_of(a)} is certain but is not a test"
            )
        return hypothesis

    # -- vertex access ------------------------------------------------------------------

    def state_vertices(self, cap: int | None = None) -> list[Weight]:
        """Vertices of the state space (generators for hull models)."""
        if self.states.kind == GENERATORS:
            return list(self.states.generators)
        rows, rhs = self.polytope_rows()
        verts = enumerate_vertices(rows, rhs, cap)
        verts.sort()
        return [Weight(v) for v in verts]


def transversal_weights(space: TestSpace, cap: int | None = None) -> list[Weight]:
    """0/1 probability weights: indicators of sets meeting every test exactly once."""
    from .errors import CapCounter

    counter = CapCounter("transversal weights", cap)
    tests = sorted(space.tests, key=len)
    out: list[Weight] = []

    def extend(i: int, chosen: frozenset, banned: frozenset):
        counter.tick()
        if i == len(tests):
            vals = [Fraction(1) if x in chosen else ZERO for x in range(space.n_outcomes)]
            out.append(Weight(vals))
            return
        t = tests[i]
        hits = t & chosen
        if len(hits) > 1:
            return
        if len(hits) == 1:
            if t & banned and hits & banned:
                return
            extend(i + 1, chosen, banned | (t - hits))
            return
        for x in sorted(t - banned):
            extend(i + 1, chosen | {x}, banned | (t - {x}))

    extend(0, frozenset(), frozenset())
    seen = set()
    uniq = []
    for w in out:
        if w.values not in seen:
            seen.add(w.values)
            uniq.append(w)
    uniq.sort(key=lambda w: w.values)
    return uniq


def sample_polytope_vertices(model: Model, k: int, seed: int = 0) -> list[Weight]:
    """Random vertices of the full weight polytope via random-objective LPs."""
    import random

    rng = random.Random(seed)
    n = model.space.n_outcomes
    seen = set()
    out: list[Weight] = []
    for _ in range(k):
        obj = [Fraction(rng.randint(-100, 100)) for _ in range(n)]
        res = model.optimize_over_states(obj)
        if res.optimal:
            key = tuple(res.x[:n])
            if key not in seen:
                seen.add(key)
                out.append(Weight(res.x[:n]))
    return out


def full_model(space: TestSpace, exact: bool = True, tol: float | None = None) -> Model:
    return Model(space, StateSpace.full(), exact=exact, tol=tol)


def generator_model(
    space: TestSpace,
    weights: Iterable[Weight],
    exact: bool = True,
    tol: float | None = None,
) -> Model:
    return Model(space, StateSpace.hull(weights), exact=exact, tol=tol)


def constructed_model(
    space: TestSpace, states: StateSpace, template: Model
) -> Model:
    """Internal: build a model inheriting scalar kind, skipping the positivity LP.

    Used by constructions (coarsening, products, compounding, adjunctions)
    whose outputs are positive whenever their inputs are.
    """
    return Model(
        space, states, exact=template.exact,
        tol=(template.tol or None), _check_positivity=False,
    )


def adjoin_failure_outcome(model: Model, label: str = "*") -> Model:
    """Pointed extension: add a common failure outcome to every test.

    The new state space is the truncated cone over the old one with apex at
    the point mass on the failure outcome.
    """
    space = model.space
    new_id = space.n_outcomes
    tests = [t | {new_id} for t in space.tests]
    new_space = TestSpace(space.labels + (label,), tests)
    if model.states.is_full:
        states = StateSpace.full()
    else:
        zero = Fraction(0) if model.exact else 0.0
        one = Fraction(1) if model.exact else 1.0
        gens = [Weight(tuple(g.values) + (zero,)) for g in model.states.generators]
        delta = Weight((zero,) * space.n_outcomes + (one,))
        states = StateSpace.hull(gens + [delta])
    return constructed_model(new_space, states, model)
