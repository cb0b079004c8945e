import random

import pytest
from hypothesis import given, settings, strategies as st

from kripke_blend.formulas import enumerate_set_sentences, parse_set, random_set_formula
from kripke_blend.oracles import naive_eval, naive_vk
from kripke_blend.universes import (
    BudgetExceeded, UnboundVariable, UniverseError, build_vk, decode, encode, eval_classical,
    from_members, level_size, members, ordinal, rank, to_nested, to_text_hf, validate_universe,
)


def test_level_sizes():
    assert [level_size(k) for k in range(6)] == [0, 1, 2, 4, 16, 65536]
    assert [len(build_vk(k)) for k in range(5)] == [0, 1, 2, 4, 16]
    assert [len(naive_vk(k)) for k in range(5)] == [0, 1, 2, 4, 16]


def test_universe_budget():
    with pytest.raises(BudgetExceeded):
        build_vk(5)
    assert len(build_vk(5, budget=70_000)) == 65536


@given(st.integers(0, 65535))
def test_coding_round_trip(code):
    assert encode(decode(code)) == code
    assert from_members(members(code)) == code


def test_coding_examples():
    assert to_text_hf(0) == "0"
    assert to_text_hf(ordinal(2)) == "{0,{0}}"
    assert to_nested(ordinal(2)) == [[], [[]]]
    assert [rank(ordinal(n)) for n in range(5)] == [0, 1, 2, 3, 4]


def test_levels_of_a_universe():
    M = build_vk(4)
    assert [len(M.level(a)) for a in range(6)] == [0, 1, 2, 4, 16, 16]
    assert M.is_level() and M.height == 4


def test_validate_universe():
    assert validate_universe([0, 1, 3]).height == 3
    with pytest.raises(UniverseError):
        validate_universe([2])


def test_eval_examples():
    M = build_vk(3)
    assert eval_classical(M, parse_set("exists a . forall x in a . bot"))
    assert not eval_classical(M, parse_set("forall a . forall b . exists c . a in c & b in c"))
    with pytest.raises(UnboundVariable):
        eval_classical(M, parse_set("x in x"))
    with pytest.raises(UniverseError):
        eval_classical(M, parse_set("x = x"), {"x": 99})


@pytest.mark.parametrize("k", range(4))
def test_family_agrees_with_naive_evaluator(k):
    M, sets = build_vk(k), naive_vk(k)
    for phi in enumerate_set_sentences():
        assert eval_classical(M, phi) == naive_eval(sets, phi, {})


@given(st.integers(0, 10**6))
@settings(max_examples=100)
def test_random_formulas_agree_with_naive_evaluator(seed):
    rng = random.Random(seed)
    M = build_vk(3)
    sets = naive_vk(3)
    phi = random_set_formula(rng, ["a"], 5, 3)
    for a in M.carrier:
        assert eval_classical(M, phi, {"a": a}) == naive_eval(sets, phi, {"a": decode(a)})
