"""Forward products and truncated compounding: structure, states, algebras."""

from fractions import Fraction as F

import pytest

from orthokit.errors import (
    HypothesisUnmet,
    NotAMorphism,
    NotSequential,
    ZeroMarginal,
)
from orthokit.compounding import (
    SequentialProduct,
    _pool_strongly_unital,
    _pool_unital,
    check_chain_rule,
    check_tower_recursion,
    check_unit_level,
    compound_unitality,
    concatenation_product,
    forward_product,
    forward_unitality,
    forward_vertex_pool,
    fp_perspective_by_parts,
    functor_compound,
    marginal_and_conditional,
    marginal_weight,
    nonatomicity_report,
    pair_morphism,
    preservation_compound,
    preservation_forward,
    retrodictive_marginal,
    transition_state,
    transition_vertex_pool,
    truncated_compound,
    validate_sequential,
)
from orthokit.corpus import corpus_models, named
from orthokit.morphisms import identity_morphism, validate_morphism
from orthokit.quantum import classical_model
from orthokit.states import Weight, full_model, generator_model
from orthokit.testspace import build_test_space


def tree_tests(base_tests, depth):
    """Independent oracle: run-and-stop trees as sets of outcome strings."""
    def grow(prefix, d):
        stopped = frozenset([prefix])
        if d == 0:
            return {stopped}
        out = {stopped}
        for t in base_tests:
            branches = [grow(prefix + (x,), d - 1) for x in sorted(t)]
            combos = [frozenset()]
            for options in branches:
                combos = [acc | pick for acc in combos for pick in options]
            out.update(combos)
        return out

    return grow((), depth)


@pytest.fixture(scope="module")
def binary():
    return full_model(build_test_space([["a", "b"]]))


@pytest.fixture(scope="module")
def disjoint_pair_models():
    small = full_model(build_test_space([["a", "b"], ["c", "d"]]))
    big = full_model(build_test_space([["a", "b", "w"], ["c", "d", "w"]]))
    return small, big


class TestForwardProduct:
    def test_test_count(self, binary):
        two = full_model(build_test_space([["u", "v"], ["s", "t"]]))
        fp = forward_product(binary, two)
        assert len(fp.model.space.tests) == 4  # one first test, 2^2 choices

    def test_single_outcome_first_stage(self):
        point = full_model(build_test_space([["a"]]))
        two = full_model(build_test_space([["u", "v"], ["s", "t"]]))
        fp = forward_product(point, two)
        assert fp.model.space.n_outcomes == two.space.n_outcomes
        assert len(fp.model.space.tests) == len(two.space.tests)

    def test_orthogonality_characterization(self, binary):
        wright = named("wright")
        fp = forward_product(binary, wright)
        space = fp.model.space
        for i, (x, y) in enumerate(fp.outcome_pair):
            for j, (u, v) in enumerate(fp.outcome_pair):
                expected = binary.space.orthogonal(x, u) or (
                    x == u and wright.space.orthogonal(y, v)
                )
                assert space.orthogonal(i, j) == expected

    def test_pair_state_values(self, binary):
        from orthokit.states import weight_from_labels

        wright = named("wright")
        fp = forward_product(binary, wright)
        alpha = Weight([F(1, 3), F(2, 3)])
        betas = {
            0: weight_from_labels(wright.space, {"x": F(1), "q": F(1)}),
            1: weight_from_labels(
                wright.space, {"x": F(1, 2), "z": F(1, 2), "q": F(1, 2)}
            ),
        }
        w = fp.state(alpha, lambda x: betas[x])
        assert fp.model.contains_state(w)
        for i, (x, y) in enumerate(fp.outcome_pair):
            assert w[i] == alpha[x] * betas[x][y]

    def test_generator_states(self):
        s = build_test_space([["a", "b"]])
        left = generator_model(s, [Weight([F(1), F(0)]), Weight([F(0), F(1)])])
        right = generator_model(s, [Weight([F(1, 2), F(1, 2)])])
        fp = forward_product(left, right)
        assert len(fp.model.states.generators) == 2


class TestForwardPerspectivity:
    def test_reflexive(self, binary):
        fp = forward_product(binary, binary)
        for t in fp.model.space.tests:
            assert fp_perspective_by_parts(fp, t, t)

    def test_matches_complement_search_everywhere(self, binary):
        wright = named("wright")
        fp = forward_product(binary, wright)
        events = fp.model.space.events_list()
        pairs = 0
        for i, a in enumerate(events):
            for b in events[i + 1 :: 7]:
                fp_perspective_by_parts(fp, a, b)  # debug assert inside
                pairs += 1
        assert pairs > 200

    def test_unshared_fiber_must_be_test(self, disjoint_pair_models):
        _, big = disjoint_pair_models
        fp = forward_product(big, big)
        e = big.space.event_of(["a", "b"])  # an event, not a test, of big
        f = big.space.event_of(["c", "d"])
        ee = frozenset(fp.pair(x, y) for x in e for y in e)
        ff = frozenset(fp.pair(x, y) for x in f for y in f)
        assert not fp_perspective_by_parts(fp, ee, ff)


class TestPairMorphism:
    def test_test_preserving_followups_work(self, binary):
        fp = forward_product(binary, binary)
        ident = identity_morphism(binary)
        out = pair_morphism(fp, fp, ident, lambda x: ident)
        assert out.test_preserving

    def test_inclusion_refused_off_core(self, disjoint_pair_models):
        small, big = disjoint_pair_models
        inc = validate_morphism(
            small, big, tuple(big.space.outcome(lab) for lab in small.space.labels)
        )
        fp_src = forward_product(small, small)
        fp_dst = forward_product(big, big)
        with pytest.raises(NotAMorphism) as err:
            pair_morphism(fp_src, fp_dst, inc, lambda x: inc)
        assert err.value.witness is not None

    def test_classical_first_stage_unconstrained(self, binary, disjoint_pair_models):
        small, big = disjoint_pair_models
        inc = validate_morphism(
            small, big, tuple(big.space.outcome(lab) for lab in small.space.labels)
        )
        first = validate_morphism(
            binary, big, (big.space.outcome("a"), big.space.outcome("b"))
        )
        fp_src = forward_product(binary, small)
        fp_dst = forward_product(big, big)
        out = pair_morphism(fp_src, fp_dst, first, lambda x: inc)
        assert not inc.test_preserving and out is not None


class TestMarginals:
    def test_product_state(self, binary):
        wright = named("wright")
        fp = forward_product(binary, wright)
        alpha = Weight([F(1, 4), F(3, 4)])
        beta = Weight([F(1, 2), F(1, 4), F(1, 4), F(1, 2)])
        assert wright.is_probability_weight(beta)
        w = fp.state(alpha, beta)
        assert marginal_weight(fp, w) == alpha
        for x in range(2):
            marg, cond = marginal_and_conditional(fp, w, x)
            assert marg == alpha[x]
            assert cond == beta

    def test_conditionals_recovered(self, binary):
        fp = forward_product(binary, binary)
        betas = {0: Weight([F(1), F(0)]), 1: Weight([F(1, 3), F(2, 3)])}
        w = fp.state(Weight([F(1, 2), F(1, 2)]), lambda x: betas[x])
        for x in (0, 1):
            _, cond = marginal_and_conditional(fp, w, x)
            assert cond == betas[x]

    def test_zero_marginal(self, binary):
        fp = forward_product(binary, binary)
        w = fp.state(Weight([F(1), F(0)]), Weight([F(1, 2), F(1, 2)]))
        with pytest.raises(ZeroMarginal):
            marginal_and_conditional(fp, w, 1)

    def test_retrodiction_depends_on_first_test(self):
        from orthokit.states import weight_from_labels

        wright = named("wright")
        binary = full_model(build_test_space([["a", "b"]]))
        fp = forward_product(wright, binary)
        betas = {
            wright.space.outcome("x"): Weight([F(1), F(0)]),
            wright.space.outcome("y"): Weight([F(0), F(1)]),
            wright.space.outcome("z"): Weight([F(1, 2), F(1, 2)]),
            wright.space.outcome("q"): Weight([F(0), F(1)]),
        }
        # all mass on the fine outcome x and the loop outcome q
        alpha = weight_from_labels(wright.space, {"x": F(1), "q": F(1)})
        w = fp.state(alpha, lambda x: betas[x])
        fine = wright.space.event_of(["x", "y", "z"])
        loop = wright.space.event_of(["q", "z"])
        assert retrodictive_marginal(fp, w, fine) != retrodictive_marginal(
            fp, w, loop
        )


class TestTruncation:
    def test_depth_zero(self, binary):
        tc = truncated_compound(binary, 0)
        assert tc.tests_as_strings() == {frozenset([()])}

    def test_depth_two_matches_tree_oracle(self, binary):
        tc = truncated_compound(binary, 2)
        oracle = tree_tests([frozenset([0, 1])], 2)
        assert tc.tests_as_strings() == oracle
        assert len(oracle) == 5

    def test_wright_depth_two_matches_tree_oracle(self):
        wright = named("wright")
        tc = truncated_compound(wright, 2)
        oracle = tree_tests(wright.space.tests, 2)
        assert tc.tests_as_strings() == oracle

    def test_depth_monotone_and_submodel(self, binary):
        small = truncated_compound(binary, 1)
        large = truncated_compound(binary, 2)
        inner = small.tests_as_strings()
        outer = large.tests_as_strings()
        assert inner <= outer
        bound = {s for s in large.strings if len(s) <= 1}
        assert inner == {t for t in outer if t <= bound}

    def test_unit_test_present_at_every_depth(self, binary):
        for depth in range(4):
            tc = truncated_compound(binary, depth)
            assert frozenset([()]) in tc.tests_as_strings()

    def test_unit_level_matches_adjunction(self, binary):
        check_unit_level(binary)
        check_unit_level(named("wright"))
        check_unit_level(classical_model(2).model)

    def test_tower_recursion(self, binary):
        assert check_tower_recursion(binary, 0) == 2
        assert check_tower_recursion(binary, 1) == 5
        assert check_tower_recursion(named("wright"), 0) == 3

    def test_generator_state_rows(self):
        s = build_test_space([["a", "b"]])
        g1, g2 = Weight([F(1), F(0)]), Weight([F(1, 2), F(1, 2)])
        m = generator_model(s, [g1, g2])
        tc = truncated_compound(m, 2)
        rows = {(): g2, (0,): g1, (1,): g2}
        w = transition_state(tc, rows)
        assert w[tc.id_of(())] == 1
        assert w[tc.id_of((0,))] == F(1, 2)
        assert w[tc.id_of((0, 0))] == F(1, 2)
        assert w[tc.id_of((0, 1))] == 0
        assert w[tc.id_of((1, 0))] == F(1, 4)
        assert tc.model.contains_state(w)


class TestCompoundFunctor:
    def test_identity(self, binary):
        for depth in (2, 3):
            lifted = functor_compound(identity_morphism(binary), depth)
            assert lifted.test_preserving and lifted.embedding

    def test_pullback_lifts(self):
        c2, c3 = classical_model(2), classical_model(3)
        fibers = {1: frozenset({1}), 2: frozenset({2, 3})}
        mapping = []
        for s in c2.subsets:
            preimage = frozenset().union(*(fibers[p] for p in s))
            mapping.append(c3.subset_id[preimage])
        phi = validate_morphism(c2.model, c3.model, tuple(mapping))
        lifted = functor_compound(phi, 2)
        assert lifted.test_preserving
        src = truncated_compound(c2.model, 2)
        for sid, s in enumerate(src.strings):
            assert len(s) <= 2

    def test_concatenation_monad_at_truncation(self, binary):
        """Flattening strings of strings is associative with units, pointwise."""
        n = binary.space.n_outcomes
        letters = [(x,) for x in range(n)]
        strings = [()] + letters + [a + b for a in letters for b in letters]
        for outer in [(), *[(s,) for s in strings]]:
            flat = sum(outer, ())
            assert flat in strings
        for a in strings:
            for b in strings:
                if len(a) + len(b) <= 2:
                    assert a + b == tuple(list(a) + list(b))
                    assert a + () == a and () + a == a


class TestSequential:
    def test_trivial_model(self):
        m = full_model(build_test_space([["e"]]))
        sp = SequentialProduct(0, {(0, 0): 0})
        checked = validate_sequential(m, sp, probe_depth=2)
        assert not checked.report.partially_verified

    def test_truncation_window_probe(self, binary):
        tc = truncated_compound(binary, 3)
        sp = concatenation_product(tc)
        checked = validate_sequential(tc.model, sp, probe_depth=1)
        assert checked.report.associativity_checked > 0
        assert checked.report.inductivity_checked > 0

    def test_classical_intersection_product(self):
        cm = classical_model(2)
        checked = validate_sequential(cm.model, cm.product, probe_depth=2)
        assert checked.report.inductivity_mode == "exhaustive"
        assert checked.report.inductivity_skipped == 0

    def test_corrupted_table_detected(self):
        cm = classical_model(2)
        table = dict(cm.product.table)
        one = cm.subset_id[frozenset({1})]
        two = cm.subset_id[frozenset({2})]
        table[(one, one)] = two  # {1} * {1} should be {1}
        bad = SequentialProduct(cm.product.unit, table)
        with pytest.raises(NotSequential):
            validate_sequential(cm.model, bad, probe_depth=1)

    def test_chain_rule(self):
        cm = classical_model(2)
        for w in cm.model.state_vertices():
            assert check_chain_rule(cm.model, cm.product, w)

    def test_chain_rule_rejects_non_transition_weight(self, binary):
        tc = truncated_compound(binary, 2)
        sp = concatenation_product(tc)
        vals = [F(0)] * tc.model.space.n_outcomes
        vals[tc.id_of(())] = F(1)
        vals[tc.id_of((0,))] = F(3, 5)
        vals[tc.id_of((1,))] = F(2, 5)
        vals[tc.id_of((0, 0))] = F(1, 5)
        vals[tc.id_of((0, 1))] = F(1, 5)  # branch mass 2/5 under a 3/5 parent
        vals[tc.id_of((1, 0))] = F(1, 5)
        vals[tc.id_of((1, 1))] = F(2, 5)
        verdict = check_chain_rule(tc.model, sp, Weight(vals))
        assert not verdict


class TestNonatomicity:
    def test_depth_three_witnesses(self, binary):
        tc = truncated_compound(binary, 3)
        report = nonatomicity_report(tc)
        strings = {s for s, _, _ in report}
        assert strings == {s for s in tc.strings if len(s) <= 2}
        for s, extension, axis in report:
            sid = tc.id_of(s)
            assert tc.model.space.complementary(frozenset([sid]), axis)
            assert tc.model.space.complementary(extension, axis)

    def test_singleton_base_unmet(self):
        point = full_model(build_test_space([["a"]]))
        tc = truncated_compound(point, 2)
        with pytest.raises(HypothesisUnmet):
            nonatomicity_report(tc)


class TestPreservation:
    def test_forward_classical_pair(self):
        rep = preservation_forward(classical_model(2).model, classical_model(2).model)
        for name in ("unital", "strongly_unital", "regular", "algebraic", "coherent"):
            assert rep.verified(name), name

    def test_compound_depth_two(self, binary):
        rep = preservation_compound(binary, 2)
        assert rep.verified("unital") and rep.verified("algebraic")

    def test_vacuous_strong_unitality_gated(self):
        loops = full_model(build_test_space([["a", "b"], ["a", "c"], ["b", "c"]]))
        rep = preservation_compound(loops, 2)
        premise, got = rep.properties["strongly_unital"]
        assert not premise  # not unital, so no claim is made
        assert got is False  # and the compound indeed loses it

    def test_witness_unitality_matches_pool_scan(self, binary):
        wright = named("wright")
        for m in (binary, wright):
            tc = truncated_compound(m, 2)
            pool = transition_vertex_pool(tc)
            unital, su = compound_unitality(tc)
            assert unital == _pool_unital(tc.model, pool)
            assert su == _pool_strongly_unital(tc.model, pool)

    def test_witness_unitality_matches_pool_scan_forward(self, binary):
        loops = full_model(build_test_space([["a", "b"], ["a", "c"], ["b", "c"]]))
        for left, right in [(binary, binary), (loops, binary), (binary, loops)]:
            fp = forward_product(left, right)
            pool = forward_vertex_pool(fp)
            unital, su = forward_unitality(fp)
            assert unital == _pool_unital(fp.model, pool)
            assert su == _pool_strongly_unital(fp.model, pool)


class TestMoreTransport:
    def test_supports_lift_to_compounds(self):
        """Strings over a support form a support of the truncation."""
        for name in ("single-2", "wright"):
            m = named(name)
            space = m.space
            tc = truncated_compound(m, 2)
            for mask in range(1, 1 << space.n_outcomes):
                # the empty support is degenerate: its string monoid is just
                # the empty string, whose trace breaks the antichain
                s = frozenset(i for i in range(space.n_outcomes) if mask >> i & 1)
                if not space.is_support(s):
                    continue
                lifted = frozenset(
                    sid
                    for sid, string in enumerate(tc.strings)
                    if all(x in s for x in string)
                )
                assert tc.model.space.is_support(lifted), (name, sorted(s))

    def test_unit_adjunction_preserves_properties(self):
        from orthokit.compounding import _model_properties, adjoin_unit_model

        for m in corpus_models(4, 2):
            before = _model_properties(m, None)
            prime, _ = adjoin_unit_model(m)
            after = _model_properties(prime, None)
            for name, held in before.items():
                if held:
                    assert after[name], (repr(m.space), name)

    def test_semiclassical_window_logic_is_orthomodular(self):
        from orthokit.logic import build_logic

        m = named("semiclassical-2x2")
        tc = truncated_compound(m, 2)
        space = tc.model.space
        assert space.algebraic() and space.coherent()
        logic = build_logic(space)
        assert logic.is_omp()
        for s, _, _ in nonatomicity_report(tc):
            assert len(s) <= 1
