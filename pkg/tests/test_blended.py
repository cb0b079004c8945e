import random

import pytest
from hypothesis import given, settings, strategies as st

from kripke_blend.blended import (
    BlendError, DomainBudgetExceeded, Element, check_persistence, construct, embed, numeral,
    one_of_upset, project, restrict, zero,
)
from kripke_blend.dejongh import chi, psi, subset_of_one
from kripke_blend.formulas import (
    enumerate_set_sentences, is_sentence, neg, ordinal_sentence, parse_set, random_set_formula,
)
from kripke_blend.frames import Frame, upset_count, upsets
from kripke_blend.oracles import literal_force, naive_domains, to_oracle
from kripke_blend.universes import UnboundVariable, build_vk, eval_classical, ordinal

FORK = Frame.fork(2)


@pytest.fixture(scope="module")
def fork23():
    return construct(FORK, (2, 3), 2)


def test_fork_with_v1_ends_has_one_root_element():
    B = construct(FORK, (1, 1), 1)
    assert B.stratum(1, 1) == (embed(FORK, 1, 0),)
    assert B.domain(0) == (zero(FORK, 0),)


def test_single_node_is_its_universe():
    point = Frame.chain(1)
    B = construct(point, (2,), 2)
    assert len(B.stratum(0, 2)) == 2
    assert sorted(project(x) for x in B.domain(0)) == list(build_vk(2).carrier)


def test_fork_root_elements_are_the_upset_elements():
    B = construct(FORK, (2, 2), 2)
    assert set(B.stratum(0, 2)) == {one_of_upset(FORK, 0, X) for X in upsets(FORK, 0)}
    assert len(B.stratum(0, 2)) == 5


@pytest.mark.parametrize("frame, heights, R", [
    (FORK, (2, 2), 2),
    (FORK, (3, 3), 3),
    (FORK, (2, 4), 2),
    (Frame.chain(3), (3,), 3),
    (Frame.from_parents([None, 0, 1, 1]), (2, 3), 2),
    (Frame.fork(3), (2, 2, 3), 2),
])
def test_domains_match_generate_and_test(frame, heights, R):
    B = construct(frame, heights, R)
    oracle = naive_domains(frame, dict(zip(frame.ends, heights)), R)
    for v in frame.nodes:
        for alpha, layer in enumerate(oracle[v]):
            assert {to_oracle(x) for x in B.stratum(v, alpha)} == layer


def test_known_root_sizes():
    # frozen from the generate-and-test oracle above
    assert construct(FORK, (3, 3), 3).sizes()[0] == [0, 1, 5, 73]
    assert construct(Frame.chain(3), (2,), 2).sizes() == {0: [0, 1, 4], 1: [0, 1, 3], 2: [0, 1, 2]}


@pytest.mark.parametrize("heights, R", [((2, 3), 2), ((3, 3), 3), ((3, 4), 3)])
def test_structural_invariants(heights, R):
    B = construct(FORK, heights, R)
    assert B.validate() == []
    assert B.transition_violations() == []
    assert B.stratification_violations() == []


def test_restriction(fork23):
    B = fork23
    x = one_of_upset(FORK, 0, {1})
    assert restrict(x, 0) is x
    assert restrict(x, 1) is embed(FORK, 1, ordinal(1))
    assert restrict(x, 2) is embed(FORK, 2, 0)
    for y in B.domain(0):
        for w in FORK.up(0):
            assert B.contains(restrict(y, w))
    with pytest.raises(BlendError):
        restrict(restrict(x, 1), 2)


def test_embed_project_round_trip():
    frame = Frame.chain(1)
    for a in build_vk(4).carrier:
        assert project(embed(frame, 0, a)) == a
    B = construct(frame, (3,), 2)
    assert all(embed(frame, 0, project(x)) is x for x in B.domain(0))
    with pytest.raises(BlendError):
        project(zero(FORK, 0))


def test_elements_are_hash_consed():
    a = Element(FORK, 0, [frozenset()] * 3)
    assert a is zero(FORK, 0)
    assert Element(Frame.fork(2), 0, [frozenset()] * 3) is a


def test_numerals(fork23):
    assert numeral(FORK, 0, 0) is zero(FORK, 0)
    one = fork23.numeral(1, 0)
    assert restrict(one, 2) is embed(FORK, 2, ordinal(1))
    with pytest.raises(BlendError):
        fork23.numeral(2, 0)


def test_one_of_upset_rejects_non_upsets():
    with pytest.raises(BlendError):
        one_of_upset(FORK, 0, {0})


def test_forcing_examples(fork23):
    B = fork23
    for X in upsets(FORK, 0):
        assert B.forces(0, subset_of_one("a"), {"a": one_of_upset(FORK, 0, X)})
    empty = parse_set("exists x . forall y in x . bot")
    assert B.truth_set(empty) == {0, 1, 2}
    e0, e1 = one_of_upset(FORK, 0, {1}), one_of_upset(FORK, 0, {2})
    assert e0 is not e1 and not B.forces(0, parse_set("a = b"), {"a": e0, "b": e1})


def test_forcing_errors(fork23):
    with pytest.raises(UnboundVariable):
        fork23.forces(0, parse_set("x in x"))
    with pytest.raises(BlendError):
        fork23.forces(0, parse_set("x = x"), {"x": zero(FORK, 1)})
    outside = numeral(FORK, 3, 0)
    with pytest.raises(BlendError):
        fork23.forces(0, parse_set("x = x"), {"x": outside})


def test_construction_errors():
    with pytest.raises(BlendError):
        construct(FORK, (2, 2), 0)
    with pytest.raises(BlendError):
        construct(FORK, (2,), 2)
    with pytest.raises(DomainBudgetExceeded) as info:
        construct(FORK, (3, 4), 4)
    assert (info.value.node, info.value.alpha) == (0, 4)
    assert info.value.estimate > info.value.budget


def test_end_nodes_agree_with_classical_satisfaction():
    B = construct(FORK, (3, 3), 2)
    M = build_vk(3)
    for phi in enumerate_set_sentences():
        for e in FORK.ends:
            assert B.forces(e, phi) == eval_classical(M, phi)


def _sentences(seed, count, depth=4, quantifiers=3):
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        phi = random_set_formula(rng, [], depth, quantifiers)
        if is_sentence(phi):
            out.append(phi)
    return out


@pytest.mark.parametrize("frame, heights", [(FORK, (2, 3)), (Frame.chain(3), (2,)),
                                            (Frame.from_parents([None, 0, 1, 1]), (2, 3))])
def test_fast_evaluator_matches_literal_clauses(frame, heights):
    B = construct(frame, heights, 2)
    # the literal clauses blow up beyond four block variables
    structured = [psi(n) for n in range(1, 5)]
    structured += [chi(B, v) for v in frame.nodes if upset_count(frame, v) <= 3]
    structured += [neg(ordinal_sentence(1)), parse_set("forall a . forall b . a = b | ~a = b")]
    for phi in _sentences(3, 150) + structured:
        for v in frame.nodes:
            assert B.forces(v, phi) == literal_force(B, v, phi, {}), phi


def test_fast_evaluator_with_parameters(fork23):
    rng = random.Random(5)
    B = fork23
    for _ in range(150):
        phi = random_set_formula(rng, ["a", "b"], 4, 2)
        for v in FORK.nodes:
            env = {"a": rng.choice(B.domain(v)), "b": rng.choice(B.domain(v))}
            assert B.forces(v, phi, env) == literal_force(B, v, phi, env), phi


@given(st.integers(0, 10**6))
@settings(max_examples=25, deadline=None)
def test_persistence(seed):
    B = construct(FORK, (2, 3), 2)
    assert check_persistence(B, samples=20, seed=seed)["violations"] == []


def test_negated_sentence_persists_to_ends(fork23):
    phi = neg(ordinal_sentence(3))
    assert fork23.forces(0, phi)
    assert all(fork23.forces(e, phi) for e in FORK.ends)
