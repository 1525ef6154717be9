"""Concrete model generators: classical partitions, Hilbert slices, beam experiments.

The classical generator builds the partition test space of a finite set
with its canonical union-collapse and intersection-product structure.  The
Hilbert generators use hand-rolled finite-dimensional complex linear
algebra (no matrix library): frames become tests, Born evaluation gives the
weights.  The beam-experiment generator builds iterated splitter setups
with blocking, coherent recombination loops, and per-branch follow-up
stages; conditioning on a detected beam collapses to it, conditioning on a
recombined loop projects onto its span and renormalizes, which is exactly
what makes recombination interfere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations, product as iproduct
from typing import Mapping, Sequence

from .coarsening import set_partitions
from .compounding import JOIN, SequentialProduct
from .errors import (
    CapCounter,
    DepthCapExceeded,
    NotAState,
    NotOrthonormal,
    UsageError,
)
from .states import Model, StateSpace, Weight, generator_model
from .testspace import TestSpace, event_key

Vec = tuple[complex, ...]
Matrix = tuple[tuple[complex, ...], ...]

DEFAULT_QTOL = 1e-9


# -- classical (partition) models -------------------------------------------------


@dataclass(frozen=True)
class ClassicalModel:
    """Partition test space of a finite set, with union and intersection data."""

    model: Model
    points: int
    subset_id: Mapping[frozenset, int]
    subsets: tuple[frozenset, ...]
    sigma: Mapping[frozenset, int]
    product: SequentialProduct

    @property
    def unit(self) -> int:
        return self.product.unit


def classical_model(n: int, cap: int | None = None) -> ClassicalModel:
    """Tests are the set partitions of {1..n}; outcomes the nonempty subsets.

    States form the full polytope (finitely additive probability measures).
    The attached structure maps are union (collapsing a disjoint family)
    and intersection (running one partition after another), the latter
    partial: disjoint subsets have no common part.
    """
    if n < 1:
        raise UsageError("need at least one point")
    counter = CapCounter("classical model", cap)
    points = list(range(1, n + 1))
    subsets = []
    for r in range(1, n + 1):
        for c in combinations(points, r):
            counter.tick()
            subsets.append(frozenset(c))
    subsets.sort(key=lambda s: (len(s), tuple(sorted(s))))
    subset_id = {s: i for i, s in enumerate(subsets)}
    labels = ["{" + ",".join(map(str, sorted(s))) + "}" for s in subsets]
    tests = []
    for blocks in set_partitions(points):
        counter.tick()
        tests.append(frozenset(subset_id[frozenset(b)] for b in blocks))
    space = TestSpace(tuple(labels), tests)
    model = Model(space, StateSpace.full(), exact=True)
    # Union collapse on all nonempty events (pairwise disjoint families).
    sigma: dict[frozenset, int] = {}
    for ev in space.events_list(cap):
        if not ev:
            continue
        union = frozenset().union(*(subsets[i] for i in ev))
        sigma[ev] = subset_id[union]
    table = {}
    for i, a in enumerate(subsets):
        for j, b in enumerate(subsets):
            both = a & b
            if both:
                table[(i, j)] = subset_id[both]
    product = SequentialProduct(subset_id[frozenset(points)], table)
    return ClassicalModel(model, n, subset_id, tuple(subsets), sigma, product)


# -- complex vector helpers ----------------------------------------------------------


def vdot(u: Vec, v: Vec) -> complex:
    return sum(uc.conjugate() * vc for uc, vc in zip(u, v))


def vnorm2(v: Vec) -> float:
    return sum(abs(c) ** 2 for c in v)


def normalize(v: Vec) -> Vec:
    n = math.sqrt(vnorm2(v))
    if n == 0:
        raise NotAState("cannot normalize the zero vector")
    return tuple(c / n for c in v)


def check_orthonormal(basis: Sequence[Vec], tol: float = DEFAULT_QTOL) -> None:
    dim = len(basis[0])
    for v in basis:
        if len(v) != dim:
            raise NotOrthonormal("basis vectors have mixed dimensions")
    for i, u in enumerate(basis):
        for j, v in enumerate(basis):
            want = 1.0 if i == j else 0.0
            if abs(vdot(u, v) - want) > tol:
                raise NotOrthonormal(f"vectors {i},{j} have inner product {vdot(u, v)}")


def pure_density(v: Vec) -> Matrix:
    return tuple(tuple(a * b.conjugate() for b in v) for a in v)


def mixed_density(dim: int) -> Matrix:
    return tuple(
        tuple((1.0 / dim if i == j else 0.0) for j in range(dim)) for i in range(dim)
    )


def expectation(w: Matrix, v: Vec) -> float:
    total = 0j
    for i, vi in enumerate(v):
        for j, vj in enumerate(v):
            total += vi.conjugate() * w[i][j] * vj
    return total.real


def project_density(w: Matrix, directions: Sequence[Vec]) -> tuple[Matrix, float]:
    """Compress a density matrix onto the span of orthonormal directions.

    Returns the unnormalized compressed matrix and its trace (the detection
    probability).
    """
    dim = len(w)
    k = len(directions)
    # inner = P W P expressed via the direction coefficients.
    coeff = [
        [
            sum(
                directions[a][i].conjugate() * w[i][j] * directions[b][j]
                for i in range(dim)
                for j in range(dim)
            )
            for b in range(k)
        ]
        for a in range(k)
    ]
    out = [[0j] * dim for _ in range(dim)]
    for a in range(k):
        for b in range(k):
            for i in range(dim):
                for j in range(dim):
                    out[i][j] += directions[a][i] * coeff[a][b] * directions[b][j].conjugate()
    trace = sum(out[i][i] for i in range(dim)).real
    return tuple(tuple(row) for row in out), trace


def scale_density(w: Matrix, factor: float) -> Matrix:
    return tuple(tuple(c * factor for c in row) for row in w)


# -- Hilbert slice models --------------------------------------------------------------


def hilbert_slice_model(
    bases: Sequence[Sequence[Vec]],
    states: Sequence[Vec | Matrix],
    labels: Sequence[Sequence[str]] | None = None,
    tol: float = DEFAULT_QTOL,
) -> Model:
    """A finite family of frames as tests, with Born-rule generator states.

    Outcomes are identified by label; reusing a label across bases requires
    the vectors to agree within tolerance.  States may be unit vectors or
    density matrices (checked hermitian, unit trace, nonnegative on every
    outcome direction).
    """
    if not bases:
        raise UsageError("need at least one basis")
    dim = len(bases[0][0])
    for basis in bases:
        check_orthonormal(basis, tol)
        if len(basis[0]) != dim:
            raise NotOrthonormal("bases live in different dimensions")
    if labels is None:
        labels = [
            [f"b{i}.{j}" for j in range(len(basis))] for i, basis in enumerate(bases)
        ]
    vec_of: dict[str, Vec] = {}
    for basis, labs in zip(bases, labels):
        for v, lab in zip(basis, labs):
            if lab in vec_of:
                if max(abs(a - b) for a, b in zip(vec_of[lab], v)) > tol:
                    raise UsageError(f"label {lab!r} reused for a different vector")
            else:
                vec_of[lab] = v
    out_labels = sorted(vec_of)
    tests = [[lab for lab in labs] for labs in labels]
    space_labels = out_labels
    space = TestSpace(
        tuple(space_labels),
        [frozenset(space_labels.index(lab) for lab in t) for t in tests],
    )
    weights = []
    for st in states:
        w = _born_weight(space, vec_of, st, tol)
        weights.append(w)
    return generator_model(space, weights, exact=False, tol=tol)


def _born_weight(space: TestSpace, vec_of, state, tol) -> Weight:
    if isinstance(state, tuple) and state and isinstance(state[0], tuple):
        w = state
        dim = len(w)
        if any(abs(w[i][j] - w[j][i].conjugate()) > tol for i in range(dim) for j in range(dim)):
            raise NotAState("density matrix is not hermitian")
        trace = sum(w[i][i] for i in range(dim))
        if abs(trace - 1.0) > tol:
            raise NotAState(f"density matrix has trace {trace}")
        vals = []
        for lab in space.labels:
            p = expectation(w, vec_of[lab])
            if p < -tol:
                raise NotAState("density matrix is negative on an outcome direction")
            vals.append(max(p, 0.0))
        return Weight(vals)
    v = tuple(state)
    if abs(vnorm2(v) - 1.0) > tol:
        raise NotAState("state vector is not normalized")
    return Weight(tuple(abs(vdot(vec_of[lab], v)) ** 2 for lab in space.labels))


# -- iterated beam experiments ------------------------------------------------------------


@dataclass(frozen=True)
class SplitterPlan:
    """One analysis stage: a frame, beam blocking, loops, and continuations.

    ``groups`` lists disjoint recombination loops (index sets into the
    basis); ``group_labels`` names the recombined beams.  ``fine_next`` maps
    a basis index to the follow-up stage after detecting that beam;
    ``group_next`` maps a group position to the follow-up after its loop.
    """

    basis: tuple[Vec, ...]
    labels: tuple[str, ...]
    blocked: frozenset = frozenset()
    groups: tuple[frozenset, ...] = ()
    group_labels: tuple[str, ...] = ()
    fine_next: Mapping[int, "SplitterPlan"] = field(default_factory=dict)
    group_next: Mapping[int, "SplitterPlan"] = field(default_factory=dict)

    def depth(self) -> int:
        nxt = list(self.fine_next.values()) + list(self.group_next.values())
        return 1 + max((p.depth() for p in nxt), default=0)


@dataclass(frozen=True)
class BeamModel:
    """Compound beam-experiment model with collapse and path-product data."""

    model: Model
    paths: tuple[tuple[str, ...], ...]
    sigma: Mapping[frozenset, int]
    witness_labels: tuple[str, ...]
    _products: Mapping[tuple[int, int], int]
    initial_state: int = 0

    def path_product(self, branch: int, witness: int) -> int | None:
        return self._products.get((branch, witness))

    def path_id(self, *labels: str) -> int:
        return self.paths.index(tuple(labels))


def beam_model(
    plan: SplitterPlan,
    initial: Vec,
    tol: float = DEFAULT_QTOL,
    max_depth: int = 3,
) -> BeamModel:
    """Build the compound model of an iterated splitter experiment.

    Tests are all run-and-stop strategies: at each stage either the fine
    frame (every surviving beam detected separately) or the coarse version
    (loops recombined) is read out, and each resulting beam either stops or
    continues into its planned follow-up stage.  The state family holds the
    Born path weights of the initial vector and of the maximally mixed
    background, so every operationally live path is positive; dead paths
    are pruned.
    """
    if plan.depth() > max_depth:
        raise DepthCapExceeded(f"plan depth {plan.depth()} exceeds {max_depth}")
    _validate_plan(plan, tol)
    dim = len(initial)
    if abs(vnorm2(initial) - 1.0) > tol:
        raise NotAState("initial vector is not normalized")
    states = [pure_density(initial), mixed_density(dim)]

    paths: list[tuple[str, ...]] = []
    path_id: dict[tuple[str, ...], int] = {}
    masses: list[list[float]] = [[] for _ in states]
    sigma_raw: list[tuple[frozenset, int]] = []
    products_raw: dict[tuple[int, int], int] = {}
    witness_labels: list[str] = []
    witness_id: dict[str, int] = {}

    def intern_path(p: tuple[str, ...], mass: list[float]) -> int:
        if p in path_id:
            return path_id[p]
        pid = len(paths)
        path_id[p] = pid
        paths.append(p)
        for k in range(len(states)):
            masses[k].append(mass[k])
        return pid

    def witness(lab: str) -> int:
        if lab not in witness_id:
            witness_id[lab] = len(witness_labels)
            witness_labels.append(lab)
        return witness_id[lab]

    def build(stage: SplitterPlan, conds: list[Matrix], probs: list[float], prefix):
        """Returns the list of alternative test families at this node.

        Each family is a list of per-branch option lists; a test picks one
        option per branch.  An option is a frozenset of path ids.
        """
        unblocked = [i for i in range(len(stage.basis)) if i not in stage.blocked]
        if stage.blocked:
            # Blocking post-selects on passage: the surviving state is the
            # renormalized compression onto the open beams, at full mass.
            conds2, probs2 = [], []
            dirs = [stage.basis[i] for i in unblocked]
            for w, p in zip(conds, probs):
                compressed, tr = project_density(w, dirs)
                if tr > tol:
                    conds2.append(scale_density(compressed, 1.0 / tr))
                    probs2.append(p)
                elif p > tol:
                    raise NotAState("a live branch is fully blocked downstream")
                else:
                    conds2.append(compressed)
                    probs2.append(0.0)
            conds, probs = conds2, probs2
        grouped = set().union(*stage.groups) if stage.groups else set()
        modes = []
        # fine mode: every surviving beam separately
        fine_branches = []
        for i in unblocked:
            fine_branches.append(("fine", i))
        modes.append(fine_branches)
        if stage.groups:
            coarse_branches = [("group", gi) for gi in range(len(stage.groups))]
            for i in unblocked:
                if i not in grouped:
                    coarse_branches.append(("fine", i))
            modes.append(coarse_branches)
        families = []
        fine_ids: dict[int, int] = {}
        group_ids: dict[int, int] = {}
        for branches in modes:
            family = []
            for kind, idx in branches:
                if kind == "fine":
                    dirs = [stage.basis[idx]]
                    label = stage.labels[idx]
                    nxt = stage.fine_next.get(idx)
                else:
                    dirs = [stage.basis[i] for i in sorted(stage.groups[idx])]
                    label = stage.group_labels[idx]
                    nxt = stage.group_next.get(idx)
                branch_conds, branch_probs = [], []
                for w, p in zip(conds, probs):
                    compressed, tr = project_density(w, dirs)
                    branch_probs.append(p * tr)
                    branch_conds.append(
                        scale_density(compressed, 1.0 / tr) if tr > tol else compressed
                    )
                path = prefix + (label,)
                pid = intern_path(path, branch_probs)
                if kind == "fine":
                    fine_ids[idx] = pid
                else:
                    group_ids[idx] = pid
                options = [frozenset([pid])]
                if nxt is not None:
                    sub_families = build(nxt, branch_conds, branch_probs, path)
                    for fam in sub_families:
                        for combo in iproduct(*fam):
                            options.append(frozenset().union(*combo))
                    for j, lab in enumerate(nxt.labels):
                        if j in nxt.blocked:
                            continue
                        products_raw[(pid, witness(lab))] = path_id[path + (lab,)]
                family.append(options)
            families.append(family)
        for gi, g in enumerate(stage.groups):
            if gi in group_ids:
                members = frozenset(fine_ids[i] for i in sorted(g))
                sigma_raw.append((members, group_ids[gi]))
        return families

    families = build(plan, [w for w in states], [1.0] * len(states), ())
    tests_raw = set()
    for fam in families:
        for combo in iproduct(*fam):
            tests_raw.add(frozenset().union(*combo))

    # prune paths dead under every state
    alive = [
        i for i in range(len(paths)) if any(masses[k][i] > tol for k in range(len(states)))
    ]
    remap = {old: new for new, old in enumerate(alive)}
    labels = [JOIN.join(paths[i]) for i in alive]
    tests = {frozenset(remap[i] for i in t if i in remap) for t in tests_raw}
    space = TestSpace(tuple(labels), sorted(tests, key=event_key))
    weights = [Weight(tuple(masses[k][i] for i in alive)) for k in range(len(states))]
    model = generator_model(space, weights, exact=False, tol=tol)
    sigma = {
        frozenset(remap[i] for i in ev): remap[q]
        for ev, q in sigma_raw
        if q in remap and all(i in remap for i in ev)
    }
    products = {
        (remap[b], wit): remap[p]
        for (b, wit), p in products_raw.items()
        if b in remap and p in remap
    }
    return BeamModel(
        model,
        tuple(tuple(paths[i]) for i in alive),
        sigma,
        tuple(witness_labels),
        products,
    )


def _validate_plan(plan: SplitterPlan, tol: float) -> None:
    check_orthonormal(plan.basis, tol)
    if len(plan.labels) != len(plan.basis):
        raise UsageError("stage needs one label per basis vector")
    seen = set()
    for g in plan.groups:
        if not g or g & seen:
            raise UsageError("recombination groups must be nonempty and disjoint")
        if any(i in plan.blocked for i in g):
            raise UsageError("cannot recombine a blocked beam")
        seen |= g
    if len(plan.group_labels) != len(plan.groups):
        raise UsageError("need one label per recombination group")
    for sub in list(plan.fine_next.values()) + list(plan.group_next.values()):
        _validate_plan(sub, tol)


# -- presets --------------------------------------------------------------------------


SQ2 = math.sqrt(2.0)


def preset_qubit_interferometer() -> BeamModel:
    """Balanced interferometer: split a qubit, recombine both beams, reanalyze.

    The initial state is the balanced superposition, the first frame is the
    computational basis with both beams in one loop, and every branch is
    reanalyzed in the balanced basis.
    """
    z0, z1 = (1.0 + 0j, 0j), (0j, 1.0 + 0j)
    plus, minus = (1 / SQ2 + 0j, 1 / SQ2 + 0j), (1 / SQ2 + 0j, -1 / SQ2 + 0j)
    second = SplitterPlan(basis=(plus, minus), labels=("plus", "minus"))
    plan = SplitterPlan(
        basis=(z0, z1),
        labels=("0", "1"),
        groups=(frozenset({0, 1}),),
        group_labels=("q",),
        fine_next={0: second, 1: second},
        group_next={0: second},
    )
    return beam_model(plan, (1 / SQ2 + 0j, 1 / SQ2 + 0j))


def spin1_rotation(theta: float) -> tuple[Vec, Vec, Vec]:
    """Rotated spin-1 frame: the standard real rotation of the three beams."""
    c, s = math.cos(theta), math.sin(theta)
    r = (
        ((1 + c) / 2, -s / SQ2, (1 - c) / 2),
        (s / SQ2, c, -s / SQ2),
        ((1 - c) / 2, s / SQ2, (1 + c) / 2),
    )
    basis = tuple(tuple(complex(x) for x in row) for row in r)
    check_orthonormal(basis)
    return basis


def preset_spin1(theta: float = math.pi / 2) -> BeamModel:
    """Spin-1 beam experiment: analyze at an angle, recombine two beams, reanalyze.

    The initial beam is the highest-weight reference state; the first stage
    splits along the rotated frame, loops the first two beams together, and
    reanalyzes every branch in the reference frame.
    """
    rotated = spin1_rotation(theta)
    zbasis = tuple(
        tuple(1.0 + 0j if i == j else 0j for j in range(3)) for i in range(3)
    )
    second = SplitterPlan(basis=zbasis, labels=("u", "v", "w"))
    plan = SplitterPlan(
        basis=rotated,
        labels=("x", "y", "z"),
        groups=(frozenset({0, 1}),),
        group_labels=("q",),
        fine_next={0: second, 1: second, 2: second},
        group_next={0: second},
    )
    return beam_model(plan, (1.0 + 0j, 0j, 0j))


SPIN32_HALF_TURN = (
    (1 / (2 * SQ2), -math.sqrt(3) / (2 * SQ2), math.sqrt(3) / (2 * SQ2), -1 / (2 * SQ2)),
    (math.sqrt(3) / (2 * SQ2), -1 / (2 * SQ2), -1 / (2 * SQ2), math.sqrt(3) / (2 * SQ2)),
    (math.sqrt(3) / (2 * SQ2), 1 / (2 * SQ2), -1 / (2 * SQ2), -math.sqrt(3) / (2 * SQ2)),
    (1 / (2 * SQ2), math.sqrt(3) / (2 * SQ2), math.sqrt(3) / (2 * SQ2), 1 / (2 * SQ2)),
)


def preset_spin32() -> BeamModel:
    """Four-beam splitter with one beam dumped, two looped, and reanalysis.

    Matches the three-surviving-beam setup: the fourth rotated beam is
    blocked, the first two are recombined into one loop, and each branch is
    reanalyzed in the reference frame.
    """
    rotated = tuple(tuple(complex(x) for x in row) for row in SPIN32_HALF_TURN)
    check_orthonormal(rotated)
    zbasis = tuple(
        tuple(1.0 + 0j if i == j else 0j for j in range(4)) for i in range(4)
    )
    second = SplitterPlan(basis=zbasis, labels=("u", "v", "w", "t"))
    plan = SplitterPlan(
        basis=rotated,
        labels=("x", "y", "z", "dump"),
        blocked=frozenset({3}),
        groups=(frozenset({0, 1}),),
        group_labels=("q",),
        fine_next={0: second, 1: second, 2: second},
        group_next={0: second},
    )
    return beam_model(plan, (1.0 + 0j, 0j, 0j, 0j))
