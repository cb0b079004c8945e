import random

import pytest

from kripke_blend.blended import construct, one_of_upset
from kripke_blend.dejongh import (
    Certificate, DistinguisherError, NotRefuted, check_distinguishers, chi, correspondence_check,
    counting_check, default_heights, dejongh_countermodel, excluded_middle_demo,
    faithful_substitution, height_distinguishers, identification_problems, psi, truth_set,
)
from kripke_blend.formulas import BOT, apply_substitution, is_sentence, neg, parse_prop, random_set_formula
from kripke_blend.frames import Frame, enumerate_trees, upsets
from kripke_blend.propositional import Valuation, valuations

FORK = Frame.fork(2)


@pytest.fixture(scope="module")
def fork():
    return construct(FORK, default_heights(FORK), 2)


def test_psi_shape():
    assert is_sentence(psi(3))
    assert "x1 = x2" in str(psi(3))
    with pytest.raises(ValueError):
        psi(0)


def test_psi_counts_upsets(fork):
    assert fork.forces(0, psi(6)) and not fork.forces(0, psi(5))
    assert fork.forces(1, psi(3)) and not fork.forces(1, psi(2))
    assert fork.truth_set(psi(1)) == set()


@pytest.mark.parametrize("frame, heights", [
    (FORK, (2, 3)), (Frame.chain(3), (2,)), (Frame.chain(1), (2,)), (Frame.fork(3), (2, 3, 4)),
])
def test_counting_check(frame, heights):
    report = counting_check(construct(frame, heights, 2))
    assert report.ok, report.problems


def test_counting_check_on_three_chain_reports_upset_counts():
    report = counting_check(construct(Frame.chain(3), (2,), 2))
    assert report.upset_counts == {0: 4, 1: 3, 2: 2}


def test_upset_elements(fork):
    assert one_of_upset(FORK, 0, set()) is fork.zero(0)
    assert len({one_of_upset(FORK, 0, X) for X in upsets(FORK, 0)}) == 5


def test_distinguishers(fork):
    phis = height_distinguishers(fork)
    assert check_distinguishers(fork, phis) == []
    same = construct(FORK, (2, 2), 2)
    assert check_distinguishers(same, height_distinguishers(same))
    with pytest.raises(DistinguisherError):
        faithful_substitution(same, Valuation(FORK, {"p": {1}}))
    with pytest.raises(DistinguisherError):
        chi(same, 1)
    # the root needs no distinguishers at all
    assert chi(same, 0, check=False) == psi(6)
    assert identification_problems(same, nodes=[0]) == []
    assert identification_problems(same, nodes=[1]) != []


def test_chi_examples(fork):
    assert chi(fork, 0) == psi(6)
    assert truth_set(fork, chi(fork, 1)).nodes == {1}
    B = construct(Frame.chain(3), (2,), 2)
    assert chi(B, 1) == psi(4)
    assert B.truth_set(chi(B, 1)) == {1, 2}


def test_chi_identifies_nodes_on_every_small_tree():
    for frame in enumerate_trees(4):
        B = construct(frame, default_heights(frame), 2)
        assert identification_problems(B) == []


def test_faithful_examples(fork):
    sigma = faithful_substitution(fork, Valuation(FORK, {"p": set(), "q": {1}, "r": {1, 2}}))
    assert sigma["p"] == BOT
    assert sigma["q"] == chi(fork, 1)
    assert sigma["r"] == chi(fork, 1) | chi(fork, 2)
    assert fork.truth_set(sigma["r"]) == {1, 2}


def test_correspondence_examples(fork):
    V = Valuation(FORK, {"p": {1}, "q": {2}})
    sigma = faithful_substitution(fork, V)
    em = apply_substitution(parse_prop("p | ~p"), sigma)
    assert not fork.forces(0, em)
    report = correspondence_check(FORK, V, fork, sigma, max_depth=3, samples=50, seed=1)
    assert report.ok and report.classes > 0 and report.formulas > 2703


def test_correspondence_on_all_valuations_of_the_three_chain():
    frame = Frame.chain(3)
    B = construct(frame, default_heights(frame), 2)
    for V in valuations(frame, ["p", "q"]):
        report = correspondence_check(frame, V, B, faithful_substitution(B, V), max_depth=2, literal_depth=2)
        assert report.ok, report.mismatches


@pytest.mark.parametrize("logic, text, bound, size", [
    ("ipc", "p | ~p", 4, 2),
    ("lc", "((p -> q) -> p) -> p", 4, 2),
    ("ipc", "(p -> q) | (q -> p)", 4, 3),
    ("bd(2)", "((p1 -> q) -> p1) -> p1", 3, 2),
])
def test_certificates(logic, text, bound, size):
    cert = dejongh_countermodel(logic, parse_prop(text), bound)
    assert isinstance(cert, Certificate) and cert.ok
    assert len(cert.frame) == size
    B = construct(cert.frame, cert.heights, cert.rank)
    assert not B.forces(cert.node, apply_substitution(cert.formula, cert.sigma))
    data = cert.to_json()
    assert data["verdict"] == "certificate" and data["failing_node"] == cert.node


def test_theorems_are_not_refuted():
    out = dejongh_countermodel("ipc", parse_prop("p -> p"), 4)
    assert isinstance(out, NotRefuted)
    assert out.to_json()["verdict"] == "not-refuted-up-to-bound"
    assert isinstance(dejongh_countermodel("lc", parse_prop("(p -> q) | (q -> p)"), 4), NotRefuted)


def test_excluded_middle_demo():
    demo = excluded_middle_demo()
    assert demo["ok"]
    assert demo["verdicts"] == {
        "e0_forces_phi": True, "e1_forces_not_phi": True, "root_forces_phi": False,
        "root_forces_not_phi": False, "root_forces_phi_or_not_phi": False,
    }


def test_negation_from_end_nodes(fork):
    # a sentence failing at every end-node above v is refuted at v
    rng = random.Random(4)
    seen = 0
    while seen < 60:
        phi = random_set_formula(rng, [], 4, 3)
        if not is_sentence(phi):
            continue
        seen += 1
        for v in FORK.nodes:
            if not any(fork.forces(e, phi) for e in FORK.ends_above(v)):
                assert fork.forces(v, neg(phi))
        assert all(set(FORK.up(v)) <= fork.truth_set(phi) for v in fork.truth_set(phi))
