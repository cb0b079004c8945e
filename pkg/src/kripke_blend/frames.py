"""Finite tree Kripke frames and the upset combinatorics used downstream."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, Sequence

Node = Hashable


class FrameError(ValueError):
    """An order that is not a finite rooted tree."""


class UnknownNode(KeyError):
    pass


@dataclass(frozen=True, eq=False)
class Frame:
    """A finite tree (K, <=).

    ``le`` holds the full reflexive order as a set of pairs.  Use
    :func:`validate_tree` (or the ``from_*`` constructors) instead of calling
    the constructor directly.
    """

    nodes: tuple
    le: frozenset
    root: Node
    _index: dict = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_index", {v: i for i, v in enumerate(self.nodes)})
        object.__setattr__(self, "_hash", hash((self.nodes, self.le)))

    def __hash__(self) -> int:
        return self._hash  # type: ignore[attr-defined]

    def __eq__(self, other: object) -> bool:
        return self is other or (
            isinstance(other, Frame) and self.nodes == other.nodes and self.le == other.le
        )

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, v: object) -> bool:
        return v in self._index

    def index(self, v: Node) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise UnknownNode(v) from None

    def leq(self, a: Node, b: Node) -> bool:
        return (a, b) in self.le

    def check(self, v: Node) -> Node:
        if v not in self._index:
            raise UnknownNode(v)
        return v

    @cached_property
    def _up(self) -> dict:
        return {v: tuple(w for w in self.nodes if (v, w) in self.le) for v in self.nodes}

    @cached_property
    def _down(self) -> dict:
        return {v: tuple(w for w in self.nodes if (w, v) in self.le) for v in self.nodes}

    def up(self, v: Node) -> tuple:
        """The cone K^{>=v}, in frame order."""
        return self._up[self.check(v)]

    def down(self, v: Node) -> tuple:
        return self._down[self.check(v)]

    @cached_property
    def _succ(self) -> dict:
        out = {}
        for v in self.nodes:
            above = [w for w in self._up[v] if w != v]
            out[v] = tuple(w for w in above if not any(u != w and (u, w) in self.le for u in above))
        return out

    def successors(self, v: Node) -> tuple:
        """Immediate successors, derived from the order."""
        return self._succ[self.check(v)]

    @cached_property
    def parent(self) -> dict:
        return {w: v for v in self.nodes for w in self._succ[v]}

    @cached_property
    def ends(self) -> tuple:
        """E_K: the maximal nodes."""
        return tuple(v for v in self.nodes if len(self._up[v]) == 1)

    def ends_above(self, v: Node) -> frozenset:
        """E_v: the end-nodes e >= v."""
        return frozenset(e for e in self.ends if (v, e) in self.le)

    def is_end(self, v: Node) -> bool:
        return len(self._up[self.check(v)]) == 1

    @cached_property
    def depth(self) -> int:
        """Number of nodes on a longest chain; a single point has depth 1."""
        return max(len(self._down[e]) for e in self.ends)

    @cached_property
    def bottom_up(self) -> tuple:
        """Nodes ordered so that every node comes after all nodes above it."""
        return tuple(sorted(self.nodes, key=lambda v: -len(self._down[v])))

    @cached_property
    def masks(self) -> tuple:
        """Bit i of ``masks[j]`` is set when node i is in the cone of node j."""
        return tuple(sum(1 << self._index[w] for w in self._up[v]) for v in self.nodes)

    def mask(self, nodes: Iterable[Node]) -> int:
        return sum(1 << self._index[v] for v in nodes)

    def unmask(self, mask: int) -> frozenset:
        return frozenset(v for i, v in enumerate(self.nodes) if mask >> i & 1)

    def subframe(self, v: Node) -> Frame:
        """The generated subframe K^{>=v}."""
        cone = self.up(v)
        return Frame(cone, frozenset((a, b) for (a, b) in self.le if a in cone and b in cone), v)

    @cached_property
    def canonical_code(self) -> str:
        """AHU encoding of the rooted unordered tree; equal iff isomorphic."""

        def code(v: Node) -> str:
            return "(" + "".join(sorted(code(w) for w in self._succ[v])) + ")"

        return code(self.root)

    def is_linear(self) -> bool:
        return all(len(self._succ[v]) <= 1 for v in self.nodes)

    def splitting(self) -> set[int]:
        """The branching numbers of the non-end nodes."""
        return {len(self._succ[v]) for v in self.nodes if self._succ[v]}

    # ------------------------------------------------------------ constructors

    @classmethod
    def from_parents(cls, parents: Sequence[int | None]) -> Frame:
        """Nodes 0..n-1; ``parents[i]`` is the parent of i (``None`` for the root)."""
        n = len(parents)
        pairs = []
        for v in range(n):
            w, seen = v, set()
            while w is not None:
                if w in seen:
                    raise FrameError("parent array contains a cycle")
                seen.add(w)
                pairs.append((w, v))
                w = parents[w]
        return validate_tree(range(n), pairs)

    @classmethod
    def chain(cls, n: int) -> Frame:
        return cls.from_parents([None] + list(range(n - 1)))

    @classmethod
    def fork(cls, k: int = 2, names: Sequence[Node] | None = None) -> Frame:
        """A root with k immediate end-node successors."""
        if names is None:
            return cls.from_parents([None] + [0] * k)
        root, *tops = names
        return validate_tree(names, [(root, t) for t in tops])

    def to_json(self) -> dict:
        succ = [[a, b] for a in self.nodes for b in self._succ[a]]
        return {"nodes": list(self.nodes), "le": succ, "root": self.root}

    @classmethod
    def from_json(cls, data: dict | str) -> Frame:
        if isinstance(data, str):
            data = json.loads(data)
        nodes = [_node(v) for v in data["nodes"]]
        frame = validate_tree(nodes, [(_node(a), _node(b)) for a, b in data.get("le", [])])
        if "root" in data and _node(data["root"]) != frame.root:
            raise FrameError(f"declared root {data['root']!r} is not the least node {frame.root!r}")
        return frame

    def __repr__(self) -> str:
        return f"Frame({self.canonical_code}, nodes={list(self.nodes)})"


def _node(v):
    # JSON arrays cannot be node ids; anything else hashable is kept as given
    return tuple(v) if isinstance(v, list) else v


def validate_tree(nodes: Iterable[Node], le: Iterable[tuple[Node, Node]]) -> Frame:
    """Build a :class:`Frame` from nodes and order pairs.

    The reflexive-transitive closure of ``le`` is taken first, so covering
    pairs suffice.  Raises :class:`FrameError` naming the violated condition.
    """
    nodes = tuple(nodes)
    if not nodes:
        raise FrameError("a frame needs at least one node")
    if len(set(nodes)) != len(nodes):
        raise FrameError("duplicate node ids")
    known = set(nodes)
    above: dict = {v: {v} for v in nodes}
    for a, b in le:
        if a not in known or b not in known:
            raise FrameError(f"order pair ({a!r}, {b!r}) mentions an unknown node")
        above[a].add(b)
    changed = True
    while changed:
        changed = False
        for v in nodes:
            extra = set().union(*(above[w] for w in above[v])) - above[v]
            if extra:
                above[v] |= extra
                changed = True
    pairs = frozenset((a, b) for a in nodes for b in above[a])
    for a, b in pairs:
        if a != b and (b, a) in pairs:
            raise FrameError(f"not a partial order: {a!r} <= {b!r} <= {a!r}")
    roots = [r for r in nodes if len(above[r]) == len(nodes)]
    if not roots:
        raise FrameError("no root: no node lies below every node")
    for v in nodes:
        past = [w for w in nodes if (w, v) in pairs]
        for a, b in itertools.combinations(past, 2):
            if (a, b) not in pairs and (b, a) not in pairs:
                raise FrameError(f"non-linear past: {a!r} and {b!r} are incomparable below {v!r}")
    return Frame(nodes, pairs, roots[0])


# ---------------------------------------------------------------- upsets

def _upset_masks(frame: Frame, v: Node) -> list[int]:
    # an upset of a tree cone either contains its root (then it is the whole
    # cone) or is a union of upsets of the immediate successors' cones
    parts = [_upset_masks(frame, w) for w in frame.successors(v)]
    out = [sum(combo) for combo in itertools.product(*parts)]
    out.append(frame.masks[frame.index(v)])
    return out


def upsets(frame: Frame, v: Node) -> list[frozenset]:
    """All upsets of the cone K^{>=v}, ordered by size then node order."""
    frame.check(v)
    masks = _upset_masks(frame, v)
    masks.sort(key=lambda m: (bin(m).count("1"), _bits(m)))
    return [frame.unmask(m) for m in masks]


def _bits(m: int) -> list[int]:
    return [i for i in range(m.bit_length()) if m >> i & 1]


def upset_count(frame: Frame, v: Node) -> int:
    """U_v, via U_v = 1 + prod of U_w over immediate successors w."""
    out = 1
    for w in frame.successors(frame.check(v)):
        out *= upset_count(frame, w)
    return out + 1


def is_upset(frame: Frame, nodes: Iterable[Node], within: Node | None = None) -> bool:
    nodes = set(nodes)
    cone = set(frame.up(within if within is not None else frame.root))
    if not nodes <= cone:
        return False
    return all(set(frame.up(v)) <= nodes for v in nodes)


def minimal_nodes(frame: Frame, nodes: Iterable[Node]) -> tuple:
    nodes = set(nodes)
    return tuple(v for v in frame.nodes if v in nodes and not any(w != v and w in nodes for w in frame.down(v)))


def node_signature(frame: Frame, v: Node) -> tuple[int, frozenset]:
    """(U_v, E_v), which determines v within a finite tree."""
    return upset_count(frame, v), frame.ends_above(v)


def signature_injective(frame: Frame) -> bool:
    sigs = [node_signature(frame, v) for v in frame.nodes]
    return len(set(sigs)) == len(sigs)


# ---------------------------------------------------------------- enumeration

def _rooted_trees(n: int) -> list[tuple]:
    """Rooted unordered trees with exactly n nodes as nested sorted tuples."""
    return _TREES.setdefault(n, _build_trees(n))


_TREES: dict[int, list[tuple]] = {}


def _build_trees(n: int) -> list[tuple]:
    if n == 1:
        return [()]
    out = []
    # children form a multiset of subtrees with sizes summing to n - 1;
    # draw them in non-increasing (size, index) order to avoid repeats
    catalogue = [(s, i, t) for s in range(1, n) for i, t in enumerate(_rooted_trees(s))]

    def extend(remaining: int, start: int, chosen: list[tuple]) -> None:
        if remaining == 0:
            out.append(tuple(chosen))
            return
        for k in range(start, len(catalogue)):
            size, _, t = catalogue[k]
            if size <= remaining:
                extend(remaining - size, k, chosen + [t])

    extend(n - 1, 0, [])
    return out


def _tree_to_frame(shape: tuple) -> Frame:
    parents: list[int | None] = []

    def place(t: tuple, parent: int | None) -> None:
        me = len(parents)
        parents.append(parent)
        for child in t:
            place(child, me)

    place(shape, None)
    return Frame.from_parents(parents)


def enumerate_trees(n: int) -> list[Frame]:
    """All rooted trees with at most n nodes, one per isomorphism class."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return [_tree_to_frame(t) for size in range(1, n + 1) for t in _rooted_trees(size)]


def enumerate_class(kind: str, bound: int, n: int | None = None, max_depth: int | None = None) -> list[Frame]:
    """Frames of a named class with at most ``bound`` nodes.

    ``kind`` is ``"all"``, ``"linear"``, ``"splitting"`` (every non-end node
    has exactly ``n`` immediate successors) or ``"depth"`` (depth at most
    ``n``).  ``max_depth`` additionally filters by depth.
    """
    if kind == "linear":
        frames = [Frame.chain(k) for k in range(1, bound + 1)]
    elif kind == "all":
        frames = enumerate_trees(bound)
    elif kind == "splitting":
        if n is None or n < 1:
            raise ValueError("splitting needs n >= 1")
        frames = [f for f in enumerate_trees(bound) if f.splitting() <= {n}]
    elif kind == "depth":
        if n is None or n < 1:
            raise ValueError("depth needs n >= 1")
        frames = [f for f in enumerate_trees(bound) if f.depth <= n]
    else:
        raise ValueError(f"unknown frame class {kind!r}")
    if max_depth is not None:
        frames = [f for f in frames if f.depth <= max_depth]
    return frames


def parse_class(spec: str) -> tuple[str, int | None]:
    """``"linear"``, ``"all"``, ``"splitting(2)"``, ``"depth(3)"`` -> (kind, n)."""
    spec = spec.strip().lower()
    if "(" in spec:
        kind, arg = spec.rstrip(")").split("(", 1)
        return kind.strip(), int(arg)
    return spec, None
