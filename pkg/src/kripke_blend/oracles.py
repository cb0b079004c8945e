"""Slow, independent reference implementations used to cross-check the fast paths.

Nothing here shares code with the evaluators it checks beyond the formula
AST and the frame type.
"""

from __future__ import annotations

import itertools
from typing import Mapping

from .formulas import And, Bot, Eq, Exists, Forall, Formula, Imp, Letter, Member, Or


# ---------------------------------------------------------------- classical sets as frozensets

def naive_vk(k: int) -> list[frozenset]:
    """V_k by iterated power sets of frozensets."""
    level: list[frozenset] = []
    for _ in range(k):
        level = [frozenset(c) for r in range(len(level) + 1) for c in itertools.combinations(level, r)]
    return level


def naive_eval(carrier: list[frozenset], phi: Formula, env: Mapping[str, frozenset]) -> bool:
    """Tarskian satisfaction with unrestricted quantifiers over ``carrier``."""
    match phi:
        case Member(x, y):
            return env[x] in env[y]
        case Eq(x, y):
            return env[x] == env[y]
        case Bot():
            return False
        case And(a, b):
            return naive_eval(carrier, a, env) and naive_eval(carrier, b, env)
        case Or(a, b):
            return naive_eval(carrier, a, env) or naive_eval(carrier, b, env)
        case Imp(a, b):
            return (not naive_eval(carrier, a, env)) or naive_eval(carrier, b, env)
        case Forall(v, body):
            return all(naive_eval(carrier, body, {**env, v: c}) for c in carrier)
        case Exists(v, body):
            return any(naive_eval(carrier, body, {**env, v: c}) for c in carrier)
    raise TypeError(phi)


# ---------------------------------------------------------------- frames

def naive_upsets(frame, v) -> list[frozenset]:
    """Upsets of the cone above v, by filtering every subset."""
    cone = frame.up(v)
    out = []
    for r in range(len(cone) + 1):
        for sub in itertools.combinations(cone, r):
            s = set(sub)
            if all(w in s for u in s for w in frame.up(u)):
                out.append(frozenset(sub))
    return out


def brute_force_tree_counts(max_nodes: int) -> list[int]:
    """Rooted unlabelled trees of each size, from parent arrays deduplicated by isomorphism."""
    import networkx as nx
    from networkx.algorithms.isomorphism import categorical_node_match

    counts = []
    for n in range(1, max_nodes + 1):
        reps: list = []
        # node i > 0 picks a parent among 0..i-1: every labelled recursive tree
        for parents in itertools.product(*[range(i) for i in range(1, n)]):
            g = nx.Graph()
            g.add_nodes_from(range(n))
            nx.set_node_attributes(g, {i: i == 0 for i in range(n)}, "root")
            g.add_edges_from((i + 1, p) for i, p in enumerate(parents))
            match = categorical_node_match("root", False)
            if not any(nx.is_isomorphic(g, h, node_match=match) for h in reps):
                reps.append(g)
        counts.append(len(reps))
    return counts


def naive_force_prop(frame, valuation: Mapping[str, frozenset], v, phi: Formula) -> bool:
    """Propositional Kripke forcing straight from the clauses."""
    match phi:
        case Letter(name):
            return v in valuation[name]
        case Bot():
            return False
        case And(a, b):
            return naive_force_prop(frame, valuation, v, a) and naive_force_prop(frame, valuation, v, b)
        case Or(a, b):
            return naive_force_prop(frame, valuation, v, a) or naive_force_prop(frame, valuation, v, b)
        case Imp(a, b):
            return all(not naive_force_prop(frame, valuation, w, a) or naive_force_prop(frame, valuation, w, b)
                       for w in frame.up(v))
    raise TypeError(phi)


# ---------------------------------------------------------------- blended models

# An oracle element is (base, ((w, frozenset of oracle elements at w)), ...)) with w
# in frame order.

def naive_domains(frame, heights: Mapping, R: int) -> dict:
    """Stratified domains by generate-and-test.

    Candidates are filtered by the coherence conditions (i)-(iii) listed in
    ``kripke_blend.blended``.

    Returns {v: [D_v^0, ..., D_v^top]} as lists of sets of oracle elements; end
    nodes get strata up to max(R, height).
    """
    strata: dict = {}

    def value(x, w):
        return dict(x[1])[w]

    def restrict_(x, w):
        return (w, tuple((u, s) for u, s in x[1] if frame.leq(w, u)))

    for e in frame.ends:
        k = heights[e]
        sets = naive_vk(max(R, k))
        rank: dict = {}

        def rk(s):
            if s not in rank:
                rank[s] = max((rk(m) + 1 for m in s), default=0)
            return rank[s]
        for s in sets:
            rk(s)
        memo = {}

        def emb(s, e=e, memo=memo):
            if s not in memo:
                memo[s] = (e, ((e, frozenset(emb(m) for m in s)),))
            return memo[s]
        universe = [s for s in sets if rank[s] < k]
        strata[e] = [{emb(s) for s in universe if rank[s] < a} for a in range(max(R, k) + 1)]

    inner = [v for v in sorted(frame.nodes, key=lambda v: -len(frame.down(v))) if not frame.is_end(v)]
    for v in inner:
        strata[v] = [set()]
    for alpha in range(1, R + 1):
        for v in inner:
            cone = frame.up(v)
            choices = []
            for w in cone:
                if frame.is_end(w):
                    pool = {value(x, w) for x in strata[w][min(alpha, len(strata[w]) - 1)]}
                    choices.append(sorted(pool, key=repr))
                else:
                    below = sorted(strata[w][alpha - 1], key=repr)
                    choices.append([frozenset(c) for r in range(len(below) + 1)
                                    for c in itertools.combinations(below, r)])
            found = set()
            for combo in itertools.product(*choices):
                x = (v, tuple(zip(cone, combo)))
                vals = dict(x[1])
                ok = True
                for w in cone:
                    for u in frame.up(w):
                        if not all(restrict_(y, u) in vals[u] for y in vals[w]):
                            ok = False
                            break
                    if not ok:
                        break
                if ok:
                    found.add(x)
            strata[v].append(found)
    return strata


def to_oracle(x) -> tuple:
    """Convert a library Element into the oracle representation."""
    return (x.base, tuple((w, frozenset(to_oracle(m) for m in vals)) for w, vals in x.items()))


def literal_force(B, v, phi: Formula, env: Mapping) -> bool:
    """Blended forcing from the clauses alone: no memo, no bounded or block shortcuts."""
    from .blended import restrict

    match phi:
        case Member(x, y):
            return env[x] in env[y].value(v)
        case Eq(x, y):
            return env[x] is env[y]
        case Bot():
            return False
        case And(a, b):
            return literal_force(B, v, a, env) and literal_force(B, v, b, env)
        case Or(a, b):
            return literal_force(B, v, a, env) or literal_force(B, v, b, env)
        case Imp(a, b):
            for w in B.frame.up(v):
                ew = {k: restrict(x, w) for k, x in env.items()}
                if literal_force(B, w, a, ew) and not literal_force(B, w, b, ew):
                    return False
            return True
        case Exists(var, body):
            return any(literal_force(B, v, body, {**env, var: c}) for c in B.domain(v))
        case Forall(var, body):
            for w in B.frame.up(v):
                ew = {k: restrict(x, w) for k, x in env.items()}
                if not all(literal_force(B, w, body, {**ew, var: c}) for c in B.domain(w)):
                    return False
            return True
    raise TypeError(phi)


__all__ = [
    "naive_vk", "naive_eval", "naive_upsets", "brute_force_tree_counts", "naive_force_prop",
    "naive_domains", "to_oracle", "literal_force",
]
