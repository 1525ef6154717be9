"""States: weights, membership, positivity, unitality, certainty forcing."""

from fractions import Fraction as F

import pytest

from orthokit.errors import (
    NumericKindMismatch,
    PositivityViolation,
    UsageError,
)
from orthokit.corpus import corpus_models, named
from orthokit.states import (
    StateSpace,
    Weight,
    adjoin_failure_outcome,
    full_model,
    generator_model,
    sample_polytope_vertices,
    transversal_weights,
    weight_from_labels,
)
from orthokit.testspace import build_test_space


@pytest.fixture(scope="module")
def wright_model():
    return named("wright")


def test_event_weight_sums(wright_model):
    m = wright_model
    w = weight_from_labels(
        m.space, {"x": F(1, 3), "y": F(1, 3), "z": F(1, 3), "q": F(2, 3)}
    )
    assert m.is_probability_weight(w)
    assert w.of(m.space.event_of(["x", "y"])) == F(2, 3)
    assert w.of(frozenset()) == 0
    # normalization on the second test pins the loop outcome
    assert w.of(m.space.event_of(["q"])) == 1 - w.of(m.space.event_of(["z"]))


def test_weight_validation():
    s = build_test_space([["a", "b"]])
    m = full_model(s)
    assert not m.is_probability_weight(Weight([F(1), F(1)]))
    assert not m.is_probability_weight(Weight([F(2), F(-1)]))
    with pytest.raises(NumericKindMismatch):
        m._validate_weight(Weight([0.5, 0.5]))


def test_contains_state_full(wright_model):
    w = weight_from_labels(
        wright_model.space, {"x": F(1), "y": F(0), "z": F(0), "q": F(1)}
    )
    assert wright_model.contains_state(w)


def test_contains_state_hull():
    s = build_test_space([["a", "b"]])
    g1 = Weight([F(1), F(0)])
    g2 = Weight([F(0), F(1)])
    m = generator_model(s, [g1, g2])
    mid = Weight([F(1, 2), F(1, 2)])
    assert m.contains_state(mid)
    outside = generator_model(s, [Weight([F(1, 2), F(1, 2)])])
    assert not outside.contains_state(g1)


def test_contains_ray_vs_state():
    s = build_test_space([["a", "b"]])
    alpha = Weight([F(1, 2), F(1, 2)])
    m = generator_model(s, [alpha])
    doubled = Weight([F(1), F(1)])
    assert m.contains_ray(doubled)
    assert not m.contains_state(doubled)
    assert m.contains_ray(Weight([F(0), F(0)]))


def test_contains_ray_full(wright_model):
    w = weight_from_labels(
        wright_model.space,
        {"x": F(1, 2), "y": F(0), "z": F(0), "q": F(1, 2)},
    )
    assert wright_model.contains_ray(w)
    bad = weight_from_labels(
        wright_model.space, {"x": F(1, 2), "y": F(0), "z": F(0), "q": F(1, 4)}
    )
    assert not wright_model.contains_ray(bad)


def test_float_model_membership():
    s = build_test_space([["a", "b"]])
    m = generator_model(s, [Weight([1.0, 0.0]), Weight([0.0, 1.0])], exact=False)
    assert m.contains_state(Weight([0.5 + 1e-12, 0.5 - 1e-12]))
    assert not m.contains_state(Weight([0.7, 0.2]))


def test_positivity_enforced():
    s = build_test_space([["a", "b"]])
    with pytest.raises(PositivityViolation):
        generator_model(s, [Weight([F(1), F(0)])])


def test_unitality(wright_model):
    assert wright_model.check_unital().holds
    s = build_test_space([["a", "b"]])
    m = generator_model(s, [Weight([F(1, 2), F(1, 2)])])
    rep = m.check_unital()
    assert not rep.holds and len(rep.failures) == 2


def test_strong_unitality(wright_model):
    assert wright_model.check_strongly_unital().holds


def test_strong_unitality_includes_certainty():
    # all distinct outcomes orthogonal, but no state is certain of anything,
    # so the diagonal requirement fails
    m = full_model(build_test_space([["a", "b"], ["a", "c"], ["b", "c"]]))
    assert not m.check_strongly_unital().holds
    assert not m.check_unital().holds
    assert not m.space.regular()  # which is why the diagonal matters


def test_strongly_unital_implies_regular_on_corpus():
    for m in corpus_models(5, 3):
        if m.check_strongly_unital().holds:
            assert m.space.regular(), repr(m.space)


def test_certain_event_is_test(wright_model):
    m = wright_model
    assert m.certain_event_is_test(m.space.tests[0])
    assert not m.certain_event_is_test(m.space.event_of(["x", "y"]))
    with pytest.raises(UsageError):
        m.certain_event_is_test(m.space.event_of(["x", "q"]))


def test_certainty_forcing_on_corpus():
    """Events certain under every state are whole tests, corpus-wide."""
    for m in corpus_models(4, 3):
        for a in m.space.events_list():
            m.certain_event_is_test(a)  # raises PositivityViolation on defect


def test_perspective_events_same_weight_everywhere(wright_model):
    m = wright_model
    a = m.space.event_of(["x", "y"])
    b = m.space.event_of(["q"])
    assert m.space.is_perspective(a, b)
    for w in m.state_vertices():
        assert w.of(a) == w.of(b)


def test_min_event_weight(wright_model):
    assert wright_model.min_event_weight(wright_model.space.tests[0]) == 1
    assert wright_model.min_event_weight(frozenset()) == 0


def test_transversal_weights():
    s = build_test_space([["a", "b"], ["c", "d"]])
    ws = transversal_weights(s)
    assert len(ws) == 4
    m = full_model(s)
    for w in ws:
        assert m.is_probability_weight(w)


def test_sampled_vertices_are_states(wright_model):
    for w in sample_polytope_vertices(wright_model, 16, seed=3):
        assert wright_model.is_probability_weight(w)


def test_adjoin_failure_outcome(wright_model):
    plus = adjoin_failure_outcome(wright_model, "*")
    star = plus.space.outcome("*")
    assert all(star in t for t in plus.space.tests)
    assert plus.check_unital().holds  # the point mass at * is available


def test_hull_state_space_requires_generators():
    with pytest.raises(UsageError):
        StateSpace.hull([])
