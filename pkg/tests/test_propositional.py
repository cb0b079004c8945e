import pytest
from hypothesis import given, settings, strategies as st

from kripke_blend.formulas import BOT, And, Imp, Letter, Or, parse_prop
from kripke_blend.frames import Frame, enumerate_class, enumerate_trees, upsets
from kripke_blend.oracles import naive_force_prop
from kripke_blend.propositional import (
    MissingLetter, ResourceError, Valuation, axiom, force_prop, logic_class, logic_member,
    parse_logic, truth_set, valid_in_frame, valuations,
)

prop_formulas = st.recursive(
    st.sampled_from([Letter("p"), Letter("q"), BOT]),
    lambda sub: st.builds(lambda op, a, b: op(a, b), st.sampled_from([And, Or, Imp]), sub, sub),
    max_leaves=10,
)


@st.composite
def models(draw):
    n = draw(st.integers(1, 5))
    frame = Frame.from_parents([None] + [draw(st.integers(0, i - 1)) for i in range(1, n)])
    ups = upsets(frame, frame.root)
    return frame, Valuation(frame, {"p": draw(st.sampled_from(ups)), "q": draw(st.sampled_from(ups))})


@given(models(), prop_formulas)
@settings(max_examples=300)
def test_forcing_matches_clause_oracle(model, phi):
    frame, V = model
    for v in frame.nodes:
        assert force_prop(frame, V, v, phi) == naive_force_prop(frame, V, v, phi)


@given(models(), prop_formulas)
def test_truth_sets_are_upsets(model, phi):
    frame, V = model
    ts = truth_set(frame, V, phi)
    assert all(set(frame.up(v)) <= ts for v in ts)


def test_excluded_middle_fails_on_two_chain():
    f = Frame.chain(2)
    V = Valuation(f, {"p": {1}})
    assert not force_prop(f, V, 0, parse_prop("p | ~p"))
    assert force_prop(f, V, 1, parse_prop("p | ~p"))


def test_valuation_rejects_non_upsets():
    with pytest.raises(ValueError):
        Valuation(Frame.chain(2), {"p": {0}})


def test_missing_letter():
    f = Frame.chain(1)
    with pytest.raises(MissingLetter):
        force_prop(f, Valuation(f, {}), 0, Letter("p"))


def test_valuation_budget():
    with pytest.raises(ResourceError):
        list(valuations(Frame.fork(3), ["p", "q", "r"], budget=100))


def test_axiom_shapes():
    assert axiom("LC") == parse_prop("(p -> q) | (q -> p)")
    assert axiom("BD", 1) == parse_prop("((p1 -> q) -> p1) -> p1")
    assert axiom("BD", 2) == parse_prop("((p2 -> ((p1 -> q) -> p1) -> p1) -> p2) -> p2")
    with pytest.raises(ValueError):
        axiom("T")


def test_axioms_characterise_their_classes_on_small_trees():
    lc, t1, t2 = axiom("LC"), axiom("T", 1), axiom("T", 2)
    for f in enumerate_trees(4):
        assert (valid_in_frame(f, lc) is True) == f.is_linear()
        assert (valid_in_frame(f, t1) is True) == f.is_linear()
        assert (valid_in_frame(f, t2) is True) == (max(f.splitting(), default=0) <= 2)
        for n in (1, 2, 3):
            assert (valid_in_frame(f, axiom("BD", n)) is True) == (f.depth <= n)


def test_countermodel_is_genuine():
    cm = valid_in_frame(Frame.fork(2), axiom("LC"))
    assert cm is not True
    assert not force_prop(cm.frame, cm.valuation, cm.node, axiom("LC"))


def test_logic_parsing():
    assert parse_logic("t(2)") == ("T", 2)
    assert parse_logic("BD3") == ("BD", 3)
    assert logic_class("lc") == ("linear", None)
    assert logic_class("bd(2)") == ("depth", 2)
    with pytest.raises(ValueError):
        logic_class("k4")


def test_logic_member():
    assert logic_member("all", parse_prop("p -> p"), 4).valid
    v = logic_member("all", parse_prop("p | ~p"), 4)
    assert not v.valid and len(v.countermodel.frame) == 2
    assert logic_member("linear", axiom("LC"), 5).valid
    assert logic_member("depth", axiom("BD", 2), 5, 2, jobs=2).valid


def test_binary_trees_validate_t2():
    for f in enumerate_class("splitting", 7, 2):
        assert valid_in_frame(f, axiom("T", 2)) is True
    assert valid_in_frame(Frame.fork(3), axiom("T", 2)) is not True
