"""Blended Kripke models over finite trees.

End-node domains are copies of finite universes; the domain of a non-end node
v at stratum alpha consists of the functions x on the cone K^{>=v} with

  (i)   x restricted to each end-node e in D_e^alpha,
  (ii)  x(w) a subset of D_w^{alpha-1} for non-end w, and
  (iii) {y|K^{>=u} : y in x(w)} a subset of x(u) whenever u >= w.

Only strata up to a cutoff R are materialised at non-end nodes.  End-node
domains are finite already and are kept whole, so an end-node always sees
its entire universe.
"""

from __future__ import annotations

import itertools
import math
import random
import weakref
from typing import Iterable, Mapping, Sequence

from .formulas import (
    And, Bot, Eq, Exists, Forall, Formula, Imp, Member, Or, _rename_free, free_vars,
    random_set_formula, to_text,
)
from .frames import Frame, Node, upset_count
from .propositional import ResourceError
from .universes import Universe, build_vk, members

DEFAULT_ELEMENT_BUDGET = 1_000_000


class BlendError(ValueError):
    pass


class DomainBudgetExceeded(ResourceError):
    def __init__(self, node: Node, alpha: int, estimate: int, budget: int):
        super().__init__(
            f"D_{node}^{alpha} would hold about {_fmt(estimate)} elements, over the budget of {budget}"
        )
        self.node, self.alpha, self.estimate, self.budget = node, alpha, estimate, budget


def _fmt(n: int) -> str:
    return str(n) if n < 10**12 else f"10^{math.log10(n):.0f}" if n < 10**300 else "astronomically many"


# ---------------------------------------------------------------- elements

_INTERN: "weakref.WeakValueDictionary[tuple, Element]" = weakref.WeakValueDictionary()
_CONE_POS: "weakref.WeakKeyDictionary[Frame, dict]" = weakref.WeakKeyDictionary()


def _cone_pos(frame: Frame) -> dict:
    table = _CONE_POS.get(frame)
    if table is None:
        table = {v: {w: i for i, w in enumerate(frame.up(v))} for v in frame.nodes}
        _CONE_POS[frame] = table
    return table


class Element:
    """A function on the cone above ``base``; hash-consed, so ``==`` is ``is``.

    ``values[i]`` is the set assigned to ``frame.up(base)[i]``.
    """

    __slots__ = ("frame", "base", "values", "own", "_restricted", "_rank", "_key", "__weakref__")

    def __new__(cls, frame: Frame, base: Node, values: Sequence[frozenset]):
        values = tuple(frozenset(s) for s in values)
        key = (frame, base, values)
        hit = _INTERN.get(key)
        if hit is not None:
            return hit
        self = object.__new__(cls)
        self.frame, self.base, self.values = frame, base, values
        self.own = values[_cone_pos(frame)[base][base]]
        self._restricted = {}
        self._rank = None
        self._key = None
        _INTERN[key] = self
        return self

    def value(self, w: Node) -> frozenset:
        pos = _cone_pos(self.frame)[self.base].get(w)
        if pos is None:
            raise BlendError(f"{w!r} is not above the base {self.base!r}")
        return self.values[pos]

    def items(self):
        return zip(self.frame.up(self.base), self.values)

    @property
    def rank(self) -> int:
        if self._rank is None:
            self._rank = max((m.rank + 1 for vals in self.values for m in vals), default=0)
        return self._rank

    @property
    def sort_key(self) -> tuple:
        """Total order used for canonical listings."""
        if self._key is None:
            self._key = (self.rank, self.frame.index(self.base)) + tuple(
                tuple(sorted(m.sort_key for m in vals)) for vals in self.values
            )
        return self._key

    def __lt__(self, other: Element) -> bool:
        return self.sort_key < other.sort_key

    def describe(self) -> str:
        parts = []
        for w, vals in self.items():
            inner = ", ".join(m.describe() for m in sorted(vals))
            parts.append(f"{w}:{{{inner}}}")
        return "<" + " ".join(parts) + ">"

    def __repr__(self) -> str:
        return f"Element({self.describe()})"

    def __reduce__(self):
        return (Element, (self.frame, self.base, self.values))


def restrict(x: Element, w: Node) -> Element:
    """The transition map f_{vw}: restriction of x to the cone above w."""
    if w == x.base:
        return x
    hit = x._restricted.get(w)
    if hit is not None:
        return hit
    frame = x.frame
    if not frame.leq(x.base, w):
        raise BlendError(f"cannot restrict an element based at {x.base!r} to {w!r}: not above the base")
    pos = _cone_pos(frame)[x.base]
    out = Element(frame, w, [x.values[pos[u]] for u in frame.up(w)])
    x._restricted[w] = out
    return out


def embed(frame: Frame, e: Node, a: int, _memo: dict | None = None) -> Element:
    """f_e(a) = (e, f_e[a]) for a hereditarily finite set a (Ackermann code)."""
    if not frame.is_end(e):
        raise BlendError(f"{e!r} is not an end-node")
    memo = {} if _memo is None else _memo
    hit = memo.get(a)
    if hit is None:
        hit = Element(frame, e, [frozenset(embed(frame, e, m, memo) for m in members(a))])
        memo[a] = hit
    return hit


def project(x: Element) -> int:
    """The inverse g of f_e, by recursion on membership."""
    if not x.frame.is_end(x.base):
        raise BlendError("only elements at end-nodes correspond to universe elements")
    out = 0
    for m in x.own:
        out |= 1 << project(m)
    return out


def zero(frame: Frame, v: Node) -> Element:
    """0_v, the empty function on the cone above v."""
    return Element(frame, v, [frozenset()] * len(frame.up(v)))


def numeral(frame: Frame, n: int, v: Node) -> Element:
    """n_v with n_v(w) = {0_w, ..., (n-1)_w}."""
    cone = frame.up(v)
    return Element(frame, v, [frozenset(numeral(frame, m, w) for m in range(n)) for w in cone])


def one_of_upset(frame: Frame, v: Node, X: Iterable[Node]) -> Element:
    """1^v_X: value {0_w} on the upset X and the empty set elsewhere."""
    X = frozenset(X)
    cone = frame.up(v)
    if not X <= set(cone) or any(not set(frame.up(w)) <= X for w in X):
        raise BlendError(f"{sorted(map(str, X))} is not an upset of the cone above {v!r}")
    return Element(frame, v, [frozenset([zero(frame, w)]) if w in X else frozenset() for w in cone])


# ---------------------------------------------------------------- model

class BlendedModel:
    """A blended model truncated at rank ``R`` on the non-end nodes."""

    def __init__(self, frame: Frame, universes: Mapping[Node, Universe], R: int,
                 budget: int = DEFAULT_ELEMENT_BUDGET):
        if R < 1:
            raise BlendError("the rank cutoff must be at least 1")
        missing = [e for e in frame.ends if e not in universes]
        if missing:
            raise BlendError(f"no universe assigned to end-node(s) {missing}")
        self.frame = frame
        self.universes = {e: universes[e] for e in frame.ends}
        self.R = R
        self.budget = budget
        self.strata: dict[Node, list[tuple[Element, ...]]] = {}
        self._domain: dict[Node, tuple[Element, ...]] = {}
        self._domain_set: dict[Node, frozenset] = {}
        self._index: dict[Node, dict[Element, int]] = {}
        self._cache: dict = {}
        self._fv: dict = {}
        self._blocks: dict = {}
        self._build()

    # ------------------------------------------------------------ construction

    def _build(self) -> None:
        frame = self.frame
        for e in frame.ends:
            M = self.universes[e]
            memo: dict = {}
            top = max(self.R, M.height)
            self.strata[e] = [tuple(sorted(embed(frame, e, a, memo) for a in M.level(alpha)))
                              for alpha in range(top + 1)]
        inner = [v for v in frame.bottom_up if not frame.is_end(v)]
        for v in inner:
            self.strata[v] = [()]
        for alpha in range(1, self.R + 1):
            for v in inner:
                self.strata[v].append(self._stratum(v, alpha))
        for v in frame.nodes:
            dom = self.strata[v][-1]
            self._domain[v] = dom
            self._domain_set[v] = frozenset(dom)
            self._index[v] = {x: i for i, x in enumerate(dom)}

    def _stratum(self, v: Node, alpha: int) -> tuple[Element, ...]:
        frame = self.frame
        children = frame.successors(v)
        child_doms = [self.strata[u][alpha] for u in children]
        prev = self.strata[v][alpha - 1]
        # every element is a choice of child elements plus a subset of D_v^{alpha-1}
        estimate = math.prod(len(d) for d in child_doms) * 2 ** len(prev)
        if estimate > self.budget:
            raise DomainBudgetExceeded(v, alpha, estimate, self.budget)
        restr = [tuple(restrict(y, u) for u in children) for y in prev]
        allowed_sets = []
        for combo in itertools.product(*child_doms):
            tops = [c.own for c in combo]
            allowed_sets.append((combo, [y for y, ry in zip(prev, restr)
                                         if all(r in t for r, t in zip(ry, tops))]))
        # where each cone node's value comes from: v itself, or a child's element
        layout = []
        for w in frame.up(v):
            if w == v:
                layout.append(None)
            else:
                i = next(i for i, u in enumerate(children) if frame.leq(u, w))
                layout.append((i, _cone_pos(frame)[children[i]][w]))
        out = []
        for combo, allowed in allowed_sets:
            for r in range(len(allowed) + 1):
                for subset in itertools.combinations(allowed, r):
                    own = frozenset(subset)
                    vals = [own if slot is None else combo[slot[0]].values[slot[1]] for slot in layout]
                    out.append(Element(frame, v, vals))
        out.sort()
        return tuple(out)

    # ------------------------------------------------------------ access

    def domain(self, v: Node) -> tuple[Element, ...]:
        """D_v: D_v^R at non-end nodes, the whole embedded universe at end-nodes."""
        return self._domain[self.frame.check(v)]

    def stratum(self, v: Node, alpha: int) -> tuple[Element, ...]:
        """D_v^alpha; end-node strata saturate at the universe's height."""
        layers = self.strata[self.frame.check(v)]
        if alpha < len(layers):
            return layers[alpha]
        if self.frame.is_end(v):
            return layers[-1]
        raise BlendError(f"stratum {alpha} at {v!r} is above the cutoff R={self.R}")

    def contains(self, x: Element) -> bool:
        return x.frame == self.frame and x in self._domain_set[x.base]

    def height(self, e: Node) -> int:
        return self.universes[e].height

    def embed(self, e: Node, a: int) -> Element:
        if a not in self.universes[e]:
            raise BlendError(f"{a} is not in the universe at {e!r}")
        return embed(self.frame, e, a)

    def restrict(self, x: Element, w: Node) -> Element:
        return restrict(x, w)

    def zero(self, v: Node) -> Element:
        return zero(self.frame, v)

    def numeral(self, n: int, v: Node) -> Element:
        if n >= self.R:
            raise BlendError(f"numeral {n} has rank {n}, outside the cutoff R={self.R}")
        return numeral(self.frame, n, v)

    def one_of_upset(self, v: Node, X: Iterable[Node]) -> Element:
        return one_of_upset(self.frame, v, X)

    def sizes(self) -> dict:
        return {v: [len(s) for s in self.strata[v]] for v in self.frame.nodes}

    # ------------------------------------------------------------ invariants

    def element_violations(self, x: Element) -> list[str]:
        """Conditions (i)-(iii) for x at its least stratum; empty when x is fine."""
        frame, v = self.frame, x.base
        alpha = x.rank + 1
        problems = []
        for w in frame.up(v):
            if frame.is_end(w):
                layer = self.stratum(w, alpha) if v != w else self.stratum(w, alpha)
                if restrict(x, w) not in set(layer):
                    problems.append(f"(i) restriction to end-node {w!r} is not in D_{w}^{alpha}")
            else:
                if alpha - 1 >= len(self.strata[w]):
                    problems.append(f"(ii) stratum {alpha - 1} at {w!r} is not materialised")
                elif not x.value(w) <= set(self.strata[w][alpha - 1]):
                    problems.append(f"(ii) x({w!r}) is not inside D_{w}^{alpha - 1}")
            for u in frame.up(w):
                if any(restrict(y, u) not in x.value(u) for y in x.value(w)):
                    problems.append(f"(iii) restrictions of x({w!r}) are not inside x({u!r})")
        return problems

    def validate(self) -> list[str]:
        out = []
        for v in self.frame.nodes:
            for x in self._domain[v]:
                out.extend(f"{x.describe()}: {p}" for p in self.element_violations(x))
        return out

    def transition_violations(self) -> list[str]:
        """f_wu . f_vw = f_vu on every chain v <= w <= u, and images stay in the domains."""
        frame = self.frame
        out = []
        for v in frame.nodes:
            for x in self._domain[v]:
                for w in frame.up(v):
                    xw = restrict(x, w)
                    if xw not in self._domain_set[w]:
                        out.append(f"f_{v}{w} leaves the domain at {x.describe()}")
                    for u in frame.up(w):
                        if restrict(xw, u) is not restrict(x, u):
                            out.append(f"f_{w}{u} . f_{v}{w} != f_{v}{u} at {x.describe()}")
        return out

    def stratification_violations(self) -> list[str]:
        out = []
        for v in self.frame.nodes:
            layers = self.strata[v]
            for a in range(1, len(layers)):
                if not set(layers[a - 1]) <= set(layers[a]):
                    out.append(f"D_{v}^{a - 1} is not inside D_{v}^{a}")
            if self.frame.is_end(v):
                M = self.universes[v]
                for a, layer in enumerate(layers):
                    if len(layer) != len(M.level(a)):
                        out.append(f"|D_{v}^{a}| != |V_{a}| in the universe at {v}")
        return out

    # ------------------------------------------------------------ forcing

    def forces(self, v: Node, phi: Formula, env: Mapping[str, Element] | None = None) -> bool:
        """(K, <=, D), v ||- phi[env].

        Universal quantifiers and implications range over the cone above v
        and the (truncated) domains there.
        """
        self.frame.check(v)
        env = dict(env or {})
        for name in free_vars(phi):
            if name not in env:
                from .universes import UnboundVariable
                raise UnboundVariable(name)
            x = env[name]
            if x.base != v:
                raise BlendError(f"{name} is bound to an element based at {x.base!r}, not {v!r}")
            if not self.contains(x):
                raise BlendError(f"{name} is bound to an element outside D_{v}")
        return self._force(v, phi, env)

    def truth_set(self, phi: Formula) -> frozenset:
        """{v : v ||- phi} for a sentence."""
        return frozenset(v for v in self.frame.nodes if self.forces(v, phi))

    def _free(self, phi: Formula) -> tuple[str, ...]:
        hit = self._fv.get(phi)
        if hit is None:
            hit = tuple(sorted(free_vars(phi)))
            self._fv[phi] = hit
        return hit

    def _force(self, v: Node, phi: Formula, env: dict) -> bool:
        fv = self._free(phi)
        key = (phi, v) + tuple(env[x] for x in fv)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        out = self._clause(v, phi, env)
        self._cache[key] = out
        return out

    def _clause(self, v: Node, phi: Formula, env: dict) -> bool:
        match phi:
            case Member(x, y):
                return env[x] in env[y].own
            case Eq(x, y):
                return env[x] is env[y]
            case Bot():
                return False
            case And(a, b):
                return self._force(v, a, env) and self._force(v, b, env)
            case Or(a, b):
                return self._force(v, a, env) or self._force(v, b, env)
            case Imp(a, b):
                for w in self.frame.up(v):
                    ew = self._restrict_env(env, w, phi)
                    if self._force(w, a, ew) and not self._force(w, b, ew):
                        return False
                return True
            case Exists(var, body):
                pool, rest = self._exists_pool(v, var, body, env)
                inner = dict(env)
                for c in pool:
                    inner[var] = c
                    if self._force(v, rest, inner):
                        return True
                return False
            case Forall():
                return self._force_block(v, phi, env)
        raise TypeError(f"not a set-theoretic formula: {to_text(phi)}")

    def _restrict_env(self, env: dict, w: Node, phi: Formula | None = None) -> dict:
        names = self._free(phi) if phi is not None else env
        return {x: restrict(env[x], w) for x in names}

    def _exists_pool(self, v: Node, var: str, body: Formula, env: dict):
        # exists x (x in t & rest): only the members of t(v) can witness
        if isinstance(body, And) and isinstance(body.left, Member):
            guard = body.left
            if guard.elem == var and guard.coll != var:
                return sorted(env[guard.coll].own), body.right
        return self._domain[v], body

    # a block  forall x1..xn (G1 & .. & Gk -> D1 | .. | Dm)  is forced at v iff
    # there is no node u >= v and tuple c in D_u^n with every G forced at u
    # and no D forced at u; the search below looks for such a counterexample.

    def _force_block(self, v: Node, phi: Formula, env: dict) -> bool:
        plan = self._plan(phi)
        if plan[0] == "split":
            return all(self._force(v, part, env) for part in plan[1])
        _, block, guards, conseqs, symmetric = plan
        outer = [x for x in self._free(phi)]
        for u in self.frame.up(v):
            eu = {x: restrict(env[x], u) for x in outer}
            if self._counterexample(u, block, guards, conseqs, symmetric, eu):
                return False
        return True

    def _plan(self, phi: Formula):
        hit = self._blocks.get(phi)
        if hit is not None:
            return hit
        block: list[str] = []
        matrix = phi
        while isinstance(matrix, Forall) and matrix.var not in block:
            block.append(matrix.var)
            matrix = matrix.body
        if isinstance(matrix, And):
            parts = [_forall_many(block, p) for p in _flatten(matrix, And)]
            plan = ("split", parts)
        else:
            if isinstance(matrix, Imp):
                guards, conseq = _flatten(matrix.left, And), matrix.right
            else:
                guards, conseq = [], matrix
            conseqs = [] if isinstance(conseq, Bot) else _flatten(conseq, Or)
            used = free_vars(matrix)
            block = [x for x in block if x in used]
            symmetric = len(block) > 1 and _symmetric(block, matrix)
            position = {x: i for i, x in enumerate(block)}

            def slot(f: Formula) -> int:
                vs = [position[x] for x in free_vars(f) if x in position]
                return max(vs, default=-1)

            g_at = [[g for g in guards if slot(g) == i] for i in range(-1, len(block))]
            d_at = [[d for d in conseqs if slot(d) == i] for i in range(-1, len(block))]
            # a guard "x_i in t" (t outer or earlier in the block) bounds x_i's candidates
            bounds: list[str | None] = []
            for i, x in enumerate(block):
                src = None
                for g in guards:
                    if isinstance(g, Member) and g.elem == x and g.coll != x and position.get(g.coll, -1) < i:
                        src = g.coll
                        break
                bounds.append(src)
            plan = ("search", block, (g_at, bounds), d_at, symmetric)
        self._blocks[phi] = plan
        return plan

    def _counterexample(self, u, block, guards, conseqs, symmetric, env) -> bool:
        g_at, bounds = guards
        d_at = conseqs
        if not all(self._force(u, g, env) for g in g_at[0]):
            return False
        if any(self._force(u, d, env) for d in d_at[0]):
            return False
        index = self._index[u]
        dom = self._domain[u]
        n = len(block)
        assignment = dict(env)

        def candidates(i: int):
            src = bounds[i]
            if src is None:
                return dom
            return sorted(assignment[src].own, key=index.__getitem__)

        def search(i: int, floor: int) -> bool:
            if i == n:
                return True
            x = block[i]
            for c in candidates(i):
                if symmetric:
                    k = index[c]
                    if k < floor:
                        continue
                else:
                    k = 0
                assignment[x] = c
                if all(self._force(u, g, assignment) for g in g_at[i + 1]) and \
                        not any(self._force(u, d, assignment) for d in d_at[i + 1]):
                    if search(i + 1, k):
                        return True
            assignment.pop(x, None)
            return False

        return search(0, 0)


def _flatten(phi: Formula, op: type) -> list[Formula]:
    if isinstance(phi, op):
        return _flatten(phi.left, op) + _flatten(phi.right, op)  # type: ignore[attr-defined]
    return [phi]


def _forall_many(block: Sequence[str], body: Formula) -> Formula:
    for x in reversed(block):
        body = Forall(x, body)
    return body


def _norm(phi: Formula):
    """A representation identifying formulas up to AC of &/| and symmetry of =."""
    match phi:
        case And() | Or():
            return (type(phi).__name__, frozenset(_norm(p) for p in _flatten(phi, type(phi))))
        case Eq(x, y):
            return ("Eq", frozenset((x, y)))
        case Imp(a, b):
            return ("Imp", _norm(a), _norm(b))
        case Forall(v, body) | Exists(v, body):
            return (type(phi).__name__, v, _norm(body))
        case _:
            return phi


def _swap(phi: Formula, a: str, b: str) -> Formula:
    tmp = "\0swap"
    return _rename_free(_rename_free(_rename_free(phi, a, tmp), b, a), tmp, b)


def _symmetric(block: Sequence[str], matrix: Formula) -> bool:
    # adjacent transpositions generate every permutation of the block
    base = _norm(matrix)
    return all(_norm(_swap(matrix, block[i], block[i + 1])) == base for i in range(len(block) - 1))


# ---------------------------------------------------------------- construction entry point

def construct(frame: Frame, universes: Mapping[Node, Universe | int] | Sequence[Universe | int],
              R: int, budget: int = DEFAULT_ELEMENT_BUDGET,
              universe_budget: int | None = None) -> BlendedModel:
    """Build the blended model over ``frame`` truncated at rank ``R``.

    ``universes`` maps end-nodes to universes, or lists them in the order of
    ``frame.ends``; an integer k stands for the level V_k.
    """
    if not isinstance(universes, Mapping):
        universes = list(universes)
        if len(universes) != len(frame.ends):
            raise BlendError(f"{len(frame.ends)} end-nodes but {len(universes)} universes")
        universes = dict(zip(frame.ends, universes))
    resolved = {}
    for e, M in universes.items():
        if isinstance(M, int):
            M = build_vk(M) if universe_budget is None else build_vk(M, universe_budget)
        resolved[e] = M
    return BlendedModel(frame, resolved, R, budget)


def check_persistence(B: BlendedModel, samples: int = 200, seed: int = 0, max_depth: int = 3,
                      formulas: Iterable[Formula] = ()) -> dict:
    """Sample (v, w >= v, phi, env) and confirm v ||- phi[env] implies w ||- phi[env|w].

    Random formulas get up to two free variables bound to random elements of
    D_v.  A violation would mean the evaluator or the domains are wrong.
    """
    rng = random.Random(seed)
    frame = B.frame
    cases = [(phi, ()) for phi in formulas]
    for _ in range(samples):
        names = rng.choice([(), ("a",), ("a", "b")])
        cases.append((random_set_formula(rng, names, max_depth, 2), names))
    violations = []
    checked = 0
    for phi, names in cases:
        names = tuple(sorted(free_vars(phi)))
        for v in frame.nodes:
            env = {x: rng.choice(B.domain(v)) for x in names}
            if not B.forces(v, phi, env):
                continue
            for w in frame.up(v):
                checked += 1
                if not B.forces(w, phi, {x: restrict(c, w) for x, c in env.items()}):
                    violations.append({"formula": to_text(phi), "from": v, "to": w,
                                       "env": {x: c.describe() for x, c in env.items()}})
    return {"samples": len(cases), "checked": checked, "violations": violations}


def report(B: BlendedModel) -> dict:
    """Domain sizes per node and stratum, end heights, and a coherence spot check."""
    frame = B.frame
    return {
        "frame": frame.to_json(),
        "rank": B.R,
        "heights": {str(e): B.height(e) for e in frame.ends},
        "domain_sizes": {str(v): B.sizes()[v] for v in frame.nodes},
        "upset_counts": {str(v): upset_count(frame, v) for v in frame.nodes},
        "transition_violations": len(B.transition_violations()),
        "condition_violations": len(B.validate()),
    }


__all__ = [
    "Element", "BlendedModel", "BlendError", "DomainBudgetExceeded", "construct", "restrict",
    "embed", "project", "zero", "numeral", "one_of_upset", "report", "check_persistence",
    "DEFAULT_ELEMENT_BUDGET",
]
