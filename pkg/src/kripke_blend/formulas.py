"""Formula ASTs for the propositional language and the language of set theory.

Both languages share the connective nodes (``Bot``, ``And``, ``Or``, ``Imp``).
Propositional formulas additionally use ``Letter``; set-theoretic formulas use
``Member``, ``Eq``, ``Forall`` and ``Exists`` over named variables.  Negation,
bounded quantifiers and ``<->`` are derived forms expanded at construction
time, so every evaluator only has to implement the primitive clauses.
"""

from __future__ import annotations

import itertools
import random
import re
import weakref
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Iterable, Iterator, Mapping, Sequence

__all__ = [
    "Formula", "Letter", "Bot", "And", "Or", "Imp", "Member", "Eq", "Forall",
    "Exists", "BOT", "TOP", "ParseError", "SubstitutionError", "Substitution",
    "neg", "conj", "disj", "iff", "forall_in", "exists_in", "forall_many",
    "letters", "free_vars", "is_sentence", "is_propositional", "depth",
    "quantifier_depth", "subformulas", "canonical", "alpha_equivalent",
    "to_text", "parse_prop", "parse_set", "apply_substitution", "ordinal_formula",
    "ordinal_sentence", "enumerate_prop_formulas", "random_prop_formula",
    "random_set_formula", "enumerate_set_sentences",
]


_NODES: "weakref.WeakValueDictionary[tuple, Formula]" = weakref.WeakValueDictionary()


class _Interned(type):
    # structurally equal nodes are shared, so equality of large formulas is
    # usually an identity check
    def __call__(cls, *args, **kwargs):
        node = super().__call__(*args, **kwargs)
        key = (cls,) + node._fields()
        hit = _NODES.get(key)
        if hit is not None:
            return hit
        _NODES[key] = node
        return node


class Formula(metaclass=_Interned):
    """Base class of all AST nodes.

    Nodes are immutable and hash-consed; the structural hash is computed once
    at construction because evaluators memoise on formulas heavily.
    """

    __match_args__: tuple[str, ...] = ()

    def _fields(self) -> tuple:
        return tuple(getattr(self, name) for name in self.__match_args__)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_hash", hash((type(self).__name__,) + self._fields()))

    def __hash__(self) -> int:
        return self._hash  # type: ignore[attr-defined]

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if type(self) is not type(other):
            return False
        return self._hash == other._hash and self._fields() == other._fields()  # type: ignore[attr-defined]

    def __str__(self) -> str:
        return to_text(self)

    def __reduce__(self):
        return (type(self), self._fields())

    # derived-form sugar for building formulas in code
    def __and__(self, other: Formula) -> Formula:
        return And(self, other)

    def __or__(self, other: Formula) -> Formula:
        return Or(self, other)

    def __rshift__(self, other: Formula) -> Formula:
        return Imp(self, other)

    def __invert__(self) -> Formula:
        return Imp(self, BOT)


@dataclass(frozen=True, eq=False)
class Letter(Formula):
    name: str


@dataclass(frozen=True, eq=False)
class Bot(Formula):
    pass


@dataclass(frozen=True, eq=False)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, eq=False)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, eq=False)
class Imp(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, eq=False)
class Member(Formula):
    """``elem in coll`` for two variables."""

    elem: str
    coll: str


@dataclass(frozen=True, eq=False)
class Eq(Formula):
    left: str
    right: str


@dataclass(frozen=True, eq=False)
class Forall(Formula):
    var: str
    body: Formula


@dataclass(frozen=True, eq=False)
class Exists(Formula):
    var: str
    body: Formula


BOT = Bot()
TOP = Imp(BOT, BOT)


class ParseError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at position {pos}: {text[:pos]}<HERE>{text[pos:]}")
        self.text = text
        self.pos = pos


class SubstitutionError(KeyError):
    pass


# ---------------------------------------------------------------- builders

def neg(phi: Formula) -> Formula:
    return Imp(phi, BOT)


def conj(parts: Iterable[Formula]) -> Formula:
    """Right-nested conjunction; the empty conjunction is ``TOP``."""
    parts = list(parts)
    if not parts:
        return TOP
    return reduce(lambda acc, p: And(p, acc), reversed(parts[:-1]), parts[-1])


def disj(parts: Iterable[Formula]) -> Formula:
    """Right-nested disjunction; the empty disjunction is ``BOT``."""
    parts = list(parts)
    if not parts:
        return BOT
    return reduce(lambda acc, p: Or(p, acc), reversed(parts[:-1]), parts[-1])


def iff(a: Formula, b: Formula) -> Formula:
    return And(Imp(a, b), Imp(b, a))


def forall_in(var: str, coll: str, body: Formula) -> Formula:
    return Forall(var, Imp(Member(var, coll), body))


def exists_in(var: str, coll: str, body: Formula) -> Formula:
    return Exists(var, And(Member(var, coll), body))


def forall_many(variables: Sequence[str], body: Formula) -> Formula:
    for v in reversed(variables):
        body = Forall(v, body)
    return body


# ---------------------------------------------------------------- queries

def letters(phi: Formula) -> frozenset[str]:
    match phi:
        case Letter(name):
            return frozenset([name])
        case And(a, b) | Or(a, b) | Imp(a, b):
            return letters(a) | letters(b)
        case Forall(_, body) | Exists(_, body):
            return letters(body)
        case _:
            return frozenset()


_FREE_CACHE: dict[Formula, frozenset[str]] = {}


def free_vars(phi: Formula) -> frozenset[str]:
    cached = _FREE_CACHE.get(phi)
    if cached is not None:
        return cached
    match phi:
        case Member(x, y) | Eq(x, y):
            out = frozenset((x, y))
        case And(a, b) | Or(a, b) | Imp(a, b):
            out = free_vars(a) | free_vars(b)
        case Forall(v, body) | Exists(v, body):
            out = free_vars(body) - {v}
        case _:
            out = frozenset()
    if len(_FREE_CACHE) > 500_000:
        _FREE_CACHE.clear()
    _FREE_CACHE[phi] = out
    return out


def is_sentence(phi: Formula) -> bool:
    return not free_vars(phi) and not letters(phi)


def is_propositional(phi: Formula) -> bool:
    match phi:
        case Letter() | Bot():
            return True
        case And(a, b) | Or(a, b) | Imp(a, b):
            return is_propositional(a) and is_propositional(b)
        case _:
            return False


def depth(phi: Formula) -> int:
    """Connective nesting depth; atoms have depth 0."""
    match phi:
        case And(a, b) | Or(a, b) | Imp(a, b):
            return 1 + max(depth(a), depth(b))
        case Forall(_, body) | Exists(_, body):
            return 1 + depth(body)
        case _:
            return 0


def quantifier_depth(phi: Formula) -> int:
    match phi:
        case And(a, b) | Or(a, b) | Imp(a, b):
            return max(quantifier_depth(a), quantifier_depth(b))
        case Forall(_, body) | Exists(_, body):
            return 1 + quantifier_depth(body)
        case _:
            return 0


def subformulas(phi: Formula) -> Iterator[Formula]:
    """Post-order, so every subformula precedes the formulas containing it."""
    match phi:
        case And(a, b) | Or(a, b) | Imp(a, b):
            yield from subformulas(a)
            yield from subformulas(b)
        case Forall(_, body) | Exists(_, body):
            yield from subformulas(body)
    yield phi


# ---------------------------------------------------------------- alpha renaming

def _rename_free(phi: Formula, old: str, new: str) -> Formula:
    match phi:
        case Member(x, y):
            return Member(new if x == old else x, new if y == old else y)
        case Eq(x, y):
            return Eq(new if x == old else x, new if y == old else y)
        case And(a, b):
            return And(_rename_free(a, old, new), _rename_free(b, old, new))
        case Or(a, b):
            return Or(_rename_free(a, old, new), _rename_free(b, old, new))
        case Imp(a, b):
            return Imp(_rename_free(a, old, new), _rename_free(b, old, new))
        case Forall(v, body) if v != old:
            return Forall(v, _rename_free(body, old, new))
        case Exists(v, body) if v != old:
            return Exists(v, _rename_free(body, old, new))
        case _:
            return phi


def canonical(phi: Formula) -> Formula:
    """Rename every bound variable after its binder depth (``x0``, ``x1``, ...).

    The prefix is lengthened until no free variable can clash with it, so
    alpha-equivalent formulas have identical canonical forms.
    """
    free = free_vars(phi)
    prefix = "x"
    while any(re.fullmatch(re.escape(prefix) + r"\d+", v) for v in free):
        prefix += "x"

    def walk(f: Formula, level: int) -> Formula:
        match f:
            case And(a, b):
                return And(walk(a, level), walk(b, level))
            case Or(a, b):
                return Or(walk(a, level), walk(b, level))
            case Imp(a, b):
                return Imp(walk(a, level), walk(b, level))
            case Forall(v, body) | Exists(v, body):
                new = f"{prefix}{level}"
                # rename the binder's occurrences before descending, so the
                # inner renamings cannot capture it
                body = walk(_rename_free(body, v, f"\0{level}"), level + 1)
                body = _rename_free(body, f"\0{level}", new)
                return type(f)(new, body)
            case _:
                return f

    return walk(phi, 0)


def alpha_equivalent(a: Formula, b: Formula) -> bool:
    return canonical(a) == canonical(b)


# ---------------------------------------------------------------- printing

_PREC = {Imp: 1, Or: 2, And: 3}


def to_text(phi: Formula) -> str:
    """Print in the concrete grammar; ``parse(to_text(phi)) == phi``."""
    return _show(phi, 0, True)


def _show(phi: Formula, ctx: int, tail: bool) -> str:
    # ctx: minimum precedence that may appear unparenthesised here.
    # tail: nothing follows this text, so an open-ended quantifier body is safe.
    match phi:
        case Letter(name):
            return name
        case Bot():
            return "bot"
        case Member(x, y):
            return f"{x} in {y}"
        case Eq(x, y):
            return f"{x} = {y}"
        case Imp(a, Bot()):
            inner = _show(a, 4, tail)
            return "~" + inner
        case And(a, b) | Or(a, b) | Imp(a, b):
            prec = _PREC[type(phi)]
            op = {And: "&", Or: "|", Imp: "->"}[type(phi)]
            wrap = prec < ctx
            t = True if wrap else tail
            # right-associative: the left operand needs strictly higher precedence
            text = f"{_show(a, prec + 1, False)} {op} {_show(b, prec, t)}"
            return f"({text})" if wrap else text
        case Forall(v, body) | Exists(v, body):
            word = "forall" if isinstance(phi, Forall) else "exists"
            bounded = None
            if isinstance(phi, Forall) and isinstance(body, Imp):
                bounded = body.left, body.right
            elif isinstance(phi, Exists) and isinstance(body, And):
                bounded = body.left, body.right
            if bounded and isinstance(bounded[0], Member) and bounded[0].elem == v and bounded[0].coll != v:
                text = f"{word} {v} in {bounded[0].coll} . {_show(bounded[1], 0, True)}"
            else:
                text = f"{word} {v} . {_show(body, 0, True)}"
            return text if tail else f"({text})"
    raise TypeError(f"not a formula: {phi!r}")


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<bot>_\|_)|(?P<op><->|->|[~&|().=])|(?P<name>[A-Za-z_][A-Za-z0-9_']*))"
)
_KEYWORDS = {"bot", "top", "forall", "exists", "in"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            start = len(text) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[start]!r}", text, start)
        start = m.start(m.lastgroup)
        kind = m.lastgroup
        value = m.group(kind)
        if kind == "bot":
            kind, value = "name", "bot"
        tokens.append((kind, value, start))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, set_language: bool):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.set_language = set_language

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str) -> None:
        kind, val, pos = self.take()
        if val != value or kind == "eof":
            raise ParseError(f"expected {value!r}, found {val or 'end of input'!r}", self.text, pos)

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.text, self.peek()[2])

    def parse(self) -> Formula:
        phi = self.iff()
        if self.peek()[0] != "eof":
            raise self.error(f"unexpected token {self.peek()[1]!r}")
        return phi

    def iff(self) -> Formula:
        left = self.imp()
        if self.peek()[1] == "<->":
            self.take()
            right = self.imp()
            return iff(left, right)
        return left

    def imp(self) -> Formula:
        left = self.disj()
        if self.peek()[1] == "->":
            self.take()
            return Imp(left, self.imp())
        return left

    def disj(self) -> Formula:
        left = self.conj()
        if self.peek()[1] == "|":
            self.take()
            return Or(left, self.disj())
        return left

    def conj(self) -> Formula:
        left = self.unary()
        if self.peek()[1] == "&":
            self.take()
            return And(left, self.conj())
        return left

    def unary(self) -> Formula:
        kind, val, pos = self.peek()
        if val == "~":
            self.take()
            return neg(self.unary())
        if kind == "name" and val in ("forall", "exists"):
            if not self.set_language:
                raise self.error("quantifiers are not part of the propositional language")
            self.take()
            var = self.variable()
            coll = None
            if self.peek()[1] == "in":
                self.take()
                coll = self.variable()
            self.expect(".")
            body = self.iff()
            if val == "forall":
                return Forall(var, body) if coll is None else forall_in(var, coll, body)
            return Exists(var, body) if coll is None else exists_in(var, coll, body)
        return self.atom()

    def variable(self) -> str:
        kind, val, pos = self.take()
        if kind != "name" or val in _KEYWORDS:
            raise ParseError(f"expected a variable, found {val or 'end of input'!r}", self.text, pos)
        return val

    def atom(self) -> Formula:
        kind, val, pos = self.take()
        if val == "(":
            phi = self.iff()
            self.expect(")")
            return phi
        if kind != "name":
            raise ParseError(f"unexpected token {val or 'end of input'!r}", self.text, pos)
        if val == "bot":
            return BOT
        if val == "top":
            return TOP
        if val in _KEYWORDS:
            raise ParseError(f"unexpected keyword {val!r}", self.text, pos)
        if not self.set_language:
            return Letter(val)
        rel = self.peek()[1]
        if rel == "in":
            self.take()
            return Member(val, self.variable())
        if rel == "=":
            self.take()
            return Eq(val, self.variable())
        raise self.error(f"expected 'in' or '=' after variable {val!r}")


def parse_prop(text: str) -> Formula:
    """Parse a propositional formula (``~ & | -> <->``, ``bot``/``_|_``)."""
    return _Parser(text, set_language=False).parse()


def parse_set(text: str) -> Formula:
    """Parse a formula of the language of set theory."""
    return _Parser(text, set_language=True).parse()


# ---------------------------------------------------------------- substitution

class Substitution(dict):
    """A finite map from propositional letters to set-theoretic sentences."""

    def __init__(self, images: Mapping[str, Formula | str] = ()):
        super().__init__()
        for name, image in dict(images).items():
            if isinstance(image, str):
                image = parse_set(image)
            if not is_sentence(image):
                raise ValueError(f"image of {name!r} is not a sentence: {to_text(image)}")
            self[name] = image

    def to_json(self) -> dict[str, str]:
        return {name: to_text(self[name]) for name in sorted(self)}


def apply_substitution(phi: Formula, sigma: Mapping[str, Formula]) -> Formula:
    """Replace every letter of ``phi`` by its image under ``sigma``."""
    cache: dict[Formula, Formula] = {}

    def walk(f: Formula) -> Formula:
        hit = cache.get(f)
        if hit is not None:
            return hit
        match f:
            case Letter(name):
                if name not in sigma:
                    raise SubstitutionError(f"letter {name!r} is not in the substitution's domain")
                out = sigma[name]
            case And(a, b):
                out = And(walk(a), walk(b))
            case Or(a, b):
                out = Or(walk(a), walk(b))
            case Imp(a, b):
                out = Imp(walk(a), walk(b))
            case Bot():
                out = f
            case _:
                raise TypeError(f"not a propositional formula: {to_text(f)}")
        cache[f] = out
        return out

    return walk(phi)


# ---------------------------------------------------------------- ordinals

def _at_most(coll: str, n: int, prefix: str) -> Formula:
    ys = [f"{prefix}{i}" for i in range(n + 1)]
    body = disj(Eq(ys[i], ys[j]) for i, j in itertools.combinations(range(n + 1), 2))
    for y in reversed(ys):
        body = forall_in(y, coll, body)
    return body


def _at_least(coll: str, n: int, prefix: str) -> Formula:
    ys = [f"{prefix}{i}" for i in range(n)]
    body = conj(neg(Eq(ys[i], ys[j])) for i, j in itertools.combinations(range(n), 2))
    for y in reversed(ys):
        body = exists_in(y, coll, body)
    return body


def ordinal_formula(n: int, var: str = "x") -> Formula:
    """``var`` is transitive, linearly ordered by membership and has exactly n elements."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return forall_in("y", var, BOT)
    transitive = forall_in("y", var, forall_in("z", "y", Member("z", var)))
    linear = forall_in("y", var, forall_in("z", var, disj([Member("y", "z"), Eq("y", "z"), Member("z", "y")])))
    parts = [transitive, linear]
    if n > 1:
        parts.append(_at_least(var, n, "u"))
    else:
        parts.append(Exists("u0", Member("u0", var)))
    parts.append(_at_most(var, n, "w"))
    return conj(parts)


def ordinal_sentence(n: int) -> Formula:
    """The von Neumann ordinal n exists and n + 1 does not.

    Holds in the finite level V_k exactly when k = n + 1.
    """
    return And(Exists("x", ordinal_formula(n)), neg(Exists("x", ordinal_formula(n + 1))))


# ---------------------------------------------------------------- enumeration and sampling

def enumerate_prop_formulas(names: Sequence[str], max_depth: int) -> list[Formula]:
    """Every formula over ``names`` and ``bot`` with connective depth <= max_depth.

    Grows as 3 * N^2 per level, so only small depths are practical.
    """
    level = [Letter(n) for n in names] + [BOT]
    everything = list(level)
    for _ in range(max_depth):
        fresh = [op(a, b) for op in (And, Or, Imp) for a in everything for b in everything]
        seen = set(everything)
        everything = everything + [f for f in fresh if f not in seen]
    return everything


def random_prop_formula(rng: random.Random, names: Sequence[str], max_depth: int) -> Formula:
    if max_depth == 0 or rng.random() < 0.25:
        pick = rng.randrange(len(names) + 1)
        return BOT if pick == len(names) else Letter(names[pick])
    op = rng.choice((And, Or, Imp))
    return op(random_prop_formula(rng, names, max_depth - 1), random_prop_formula(rng, names, max_depth - 1))


def random_set_formula(
    rng: random.Random,
    variables: Sequence[str],
    max_depth: int,
    max_quantifiers: int,
    fresh: Callable[[int], str] = lambda i: f"q{i}",
) -> Formula:
    """A random formula whose free variables are among ``variables``.

    Quantifiers introduce fresh names ``q0``, ``q1``, ... (via ``fresh``), and
    about half of them are bounded by a variable already in scope.
    """

    def go(scope: list[str], d: int, q: int) -> Formula:
        if d == 0 or rng.random() < 0.2:
            if not scope or rng.random() < 0.1:
                return BOT
            a, b = rng.choice(scope), rng.choice(scope)
            return Member(a, b) if rng.random() < 0.7 else Eq(a, b)
        roll = rng.random()
        if q > 0 and roll < 0.4:
            v = fresh(len(scope))
            inner = go(scope + [v], d - 1, q - 1)
            if scope and rng.random() < 0.5:
                bound = rng.choice(scope)
                return forall_in(v, bound, inner) if rng.random() < 0.5 else exists_in(v, bound, inner)
            return Forall(v, inner) if rng.random() < 0.5 else Exists(v, inner)
        op = rng.choice((And, Or, Imp, Imp))
        return op(go(scope, d - 1, q), go(scope, d - 1, q))

    return go(list(variables), max_depth, max_quantifiers)


def enumerate_set_sentences() -> list[Formula]:
    """A fixed family of sentences with at most two nested quantifiers.

    Matrices are the atoms over the bound variables (and bot) plus one binary
    connective applied to two atoms; every quantifier prefix is used.
    """

    def matrices(vs: Sequence[str]) -> list[Formula]:
        atoms: list[Formula] = [Member(a, b) for a in vs for b in vs]
        atoms += [Eq(a, b) for a, b in itertools.combinations_with_replacement(vs, 2)] + [BOT]
        if len(vs) == 2:
            atoms.remove(Eq(vs[0], vs[0]))
            atoms.remove(Eq(vs[1], vs[1]))
        return atoms + [op(a, b) for op in (And, Or, Imp) for a in atoms for b in atoms]

    out: list[Formula] = []
    for q in (Forall, Exists):
        out += [q("x", m) for m in matrices(["x"])]
    for q1, q2 in itertools.product((Forall, Exists), repeat=2):
        out += [q1("x", q2("y", m)) for m in matrices(["x", "y"])]
    return out
