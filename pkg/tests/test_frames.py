import pytest
from hypothesis import given, strategies as st

from kripke_blend.frames import (
    Frame, FrameError, UnknownNode, enumerate_class, enumerate_trees, is_upset, minimal_nodes,
    node_signature, parse_class, signature_injective, upset_count, upsets, validate_tree,
)
from kripke_blend.oracles import brute_force_tree_counts, naive_upsets


@st.composite
def trees(draw, max_nodes=7):
    n = draw(st.integers(1, max_nodes))
    parents = [None] + [draw(st.integers(0, i - 1)) for i in range(1, n)]
    return Frame.from_parents(parents)


def test_tree_counts_against_brute_force():
    sizes = [len(f) for f in enumerate_trees(6)]
    assert [sizes.count(n) for n in range(1, 7)] == [1, 1, 2, 4, 9, 20]
    assert [sizes.count(n) for n in range(1, 6)] == brute_force_tree_counts(5)


def test_enumerated_trees_are_pairwise_non_isomorphic():
    codes = [f.canonical_code for f in enumerate_trees(6)]
    assert len(codes) == len(set(codes))


@given(trees())
def test_upsets_match_subset_filtering(frame):
    for v in frame.nodes:
        fast = upsets(frame, v)
        assert sorted(map(sorted, fast)) == sorted(map(sorted, naive_upsets(frame, v)))
        assert upset_count(frame, v) == len(fast)


@given(trees())
def test_upset_count_recursion(frame):
    # U_v = 1 + product of U over immediate successors
    for v in frame.nodes:
        prod = 1
        for u in frame.successors(v):
            prod *= upset_count(frame, u)
        assert upset_count(frame, v) == 1 + prod


@given(trees())
def test_signatures_identify_nodes(frame):
    assert signature_injective(frame)


@given(trees())
def test_json_round_trip(frame):
    assert Frame.from_json(frame.to_json()) == frame


def test_known_upset_counts():
    assert upset_count(Frame.chain(1), 0) == 2
    assert upset_count(Frame.fork(2), 0) == 5
    assert [upset_count(Frame.chain(3), v) for v in range(3)] == [4, 3, 2]
    assert node_signature(Frame.fork(2), 1) == (2, frozenset({1}))


def test_frame_basics():
    f = Frame.fork(2)
    assert f.ends == (1, 2) and f.root == 0 and f.depth == 2
    assert f.up(0) == (0, 1, 2) and f.successors(0) == (1, 2)
    assert is_upset(f, {1, 2}) and not is_upset(f, {0})
    assert minimal_nodes(f, {0, 1, 2}) == (0,)
    with pytest.raises(UnknownNode):
        f.up(7)


@pytest.mark.parametrize("nodes, le, message", [
    ([0, 1, 2], [(1, 0), (2, 0)], "root"),
    ([0, 1, 2, 3], [(0, 1), (0, 2), (1, 3), (2, 3)], "past"),
    ([0, 1], [(0, 1), (1, 0)], "partial order"),
    ([0, 0], [], "duplicate"),
    ([0], [(0, 5)], "unknown"),
])
def test_validate_tree_rejects(nodes, le, message):
    with pytest.raises(FrameError, match=message):
        validate_tree(nodes, le)


def test_frame_classes():
    assert len(enumerate_class("linear", 5)) == 5
    binary = enumerate_class("splitting", 5, 2, max_depth=2)
    assert sorted(len(f) for f in binary) == [1, 3]
    assert all(f.depth <= 2 for f in enumerate_class("depth", 5, 2))
    assert parse_class("depth(3)") == ("depth", 3)
