import random

import pytest
from hypothesis import given, settings, strategies as st

from kripke_blend.formulas import (
    BOT, TOP, And, Eq, Exists, Forall, Imp, Letter, Member, Or, ParseError, Substitution,
    SubstitutionError, alpha_equivalent, apply_substitution, canonical, conj, depth, disj,
    enumerate_prop_formulas, enumerate_set_sentences, free_vars, is_sentence, letters, neg,
    ordinal_formula, ordinal_sentence, parse_prop, parse_set, quantifier_depth,
    random_set_formula, to_text,
)
from kripke_blend.universes import build_vk, eval_classical, ordinal

prop_formulas = st.recursive(
    st.sampled_from([Letter("p"), Letter("q"), Letter("r1"), BOT]),
    lambda sub: st.builds(lambda op, a, b: op(a, b), st.sampled_from([And, Or, Imp]), sub, sub),
    max_leaves=12,
)


@given(prop_formulas)
def test_prop_print_parse_round_trip(phi):
    assert parse_prop(to_text(phi)) == phi


@given(st.integers(0, 10_000))
@settings(max_examples=150)
def test_set_print_parse_round_trip(seed):
    phi = random_set_formula(random.Random(seed), ["a", "b"], 5, 3)
    assert parse_set(to_text(phi)) == phi


def test_structurally_equal_formulas_are_shared():
    assert parse_prop("p & q") is And(Letter("p"), Letter("q"))


def test_derived_forms():
    assert parse_prop("~p") == Imp(Letter("p"), BOT)
    assert parse_prop("top") == TOP
    assert parse_prop("p <-> q") == And(Imp(Letter("p"), Letter("q")), Imp(Letter("q"), Letter("p")))
    assert parse_set("forall x in a . x = x") == Forall("x", Imp(Member("x", "a"), Eq("x", "x")))
    assert parse_set("exists x in a . bot") == Exists("x", And(Member("x", "a"), BOT))
    assert conj([]) == TOP and disj([]) == BOT


def test_precedence_and_associativity():
    assert parse_prop("p -> q -> r") == Imp(Letter("p"), Imp(Letter("q"), Letter("r")))
    assert parse_prop("p | q & r") == Or(Letter("p"), And(Letter("q"), Letter("r")))
    assert parse_prop("~p & q") == And(neg(Letter("p")), Letter("q"))
    assert to_text(parse_prop("(p -> q) -> p")) == "(p -> q) -> p"
    assert to_text(parse_prop("_|_")) == "bot"


@pytest.mark.parametrize("text", ["p &", "(p", "p q", "forall . p", "p -> -> q", ""])
def test_parse_errors_carry_position(text):
    with pytest.raises(ParseError) as info:
        parse_set(text) if "forall" in text else parse_prop(text)
    assert 0 <= info.value.pos <= len(text)


def test_set_atoms_rejected_in_propositional_language():
    with pytest.raises(ParseError):
        parse_prop("x in y")


def test_queries():
    phi = parse_set("forall x . x in a -> exists y . y = b")
    assert free_vars(phi) == {"a", "b"}
    assert not is_sentence(phi)
    assert quantifier_depth(phi) == 2
    assert depth(parse_prop("(p -> q) | r")) == 2
    assert letters(parse_prop("p -> q | p")) == {"p", "q"}


def test_alpha_equivalence():
    a = parse_set("forall x . exists y . x in y")
    b = parse_set("forall u . exists v . u in v")
    c = parse_set("forall u . exists v . v in u")
    assert alpha_equivalent(a, b)
    assert not alpha_equivalent(a, c)
    assert canonical(a) == canonical(b)


def test_substitution():
    sigma = Substitution({"p": "exists x . x = x", "q": parse_set("bot")})
    out = apply_substitution(parse_prop("p -> q"), sigma)
    assert out == Imp(Exists("x", Eq("x", "x")), BOT)
    with pytest.raises(SubstitutionError):
        apply_substitution(parse_prop("r"), sigma)
    with pytest.raises(ValueError):
        Substitution({"p": "x in y"})


def test_enumeration_counts():
    # 3 atoms, then 3 * 30^2 new ones minus none repeated
    assert len(enumerate_prop_formulas(["p", "q"], 0)) == 3
    assert len(enumerate_prop_formulas(["p", "q"], 1)) == 30
    assert len(enumerate_prop_formulas(["p", "q"], 2)) == 2703


def test_sentence_family():
    family = enumerate_set_sentences()
    assert len(family) >= 500
    assert len(set(family)) == len(family)
    assert all(is_sentence(f) and quantifier_depth(f) <= 2 for f in family)


@pytest.mark.parametrize("n", range(4))
def test_ordinal_formula_picks_out_the_ordinal(n):
    M = build_vk(4)
    hits = [a for a in M.carrier if eval_classical(M, ordinal_formula(n), {"x": a})]
    assert hits == [ordinal(n)]


def test_ordinal_sentences_decide_height():
    for k in range(5):
        M = build_vk(k)
        assert [eval_classical(M, ordinal_sentence(n)) for n in range(4)] == [k == n + 1 for n in range(4)]
