"""Finite transitive universes of hereditarily finite sets.

A hereditarily finite set is encoded by its Ackermann code: the empty set is
0 and a set with members m_1, ..., m_k is ``sum(2 ** m_i)``.  The coding is a
bijection, so set equality is integer equality, membership is a bit test, and
the level V_k is exactly ``range(|V_k|)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

from .formulas import And, Bot, Eq, Exists, Forall, Formula, Imp, Member, Or, free_vars, to_text

DEFAULT_UNIVERSE_BUDGET = 10_000


class UniverseError(ValueError):
    pass


class BudgetExceeded(UniverseError):
    pass


class UnboundVariable(KeyError):
    pass


# ---------------------------------------------------------------- HF coding

def members(code: int) -> tuple[int, ...]:
    return tuple(i for i in range(code.bit_length()) if code >> i & 1)


def from_members(items: Iterable[int]) -> int:
    out = 0
    for m in items:
        out |= 1 << m
    return out


@lru_cache(maxsize=None)
def rank(code: int) -> int:
    """Set-theoretic rank: the least alpha with the set in V_{alpha+1}."""
    return max((rank(m) + 1 for m in members(code)), default=0)


def level_size(k: int) -> int:
    """|V_k|: 0, 1, 2, 4, 16, 65536, ..."""
    size = 0
    for _ in range(k):
        size = 1 << size
    return size


def encode(s) -> int:
    """Code of a nested frozenset / list / tuple representation."""
    return from_members(encode(m) for m in s)


def decode(code: int) -> frozenset:
    return frozenset(decode(m) for m in members(code))


def to_nested(code: int) -> list:
    """Nested-array form (empty set = ``[]``), members in code order."""
    return [to_nested(m) for m in members(code)]


def to_text_hf(code: int) -> str:
    return "{" + ",".join(to_text_hf(m) for m in members(code)) + "}" if code else "0"


def ordinal(n: int) -> int:
    """Code of the von Neumann ordinal n."""
    out = 0
    for _ in range(n):
        out |= 1 << out
    return out


# ---------------------------------------------------------------- universes

@dataclass(frozen=True, eq=False)
class Universe:
    """A finite transitive set of hereditarily finite sets.

    ``height`` is the least k with carrier a subset of V_k; it equals k for
    the levels built by :func:`build_vk`.
    """

    carrier: tuple[int, ...]
    height: int
    _members: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_members", {a: members(a) for a in self.carrier})
        object.__setattr__(self, "_set", frozenset(self.carrier))

    def __len__(self) -> int:
        return len(self.carrier)

    def __contains__(self, a: object) -> bool:
        return a in self._set  # type: ignore[attr-defined]

    def members(self, a: int) -> tuple[int, ...]:
        return self._members[a]

    def level(self, alpha: int) -> tuple[int, ...]:
        """(V_alpha)^M: the carrier elements of rank below alpha."""
        return tuple(a for a in self.carrier if rank(a) < alpha)

    def is_level(self) -> bool:
        return self.carrier == tuple(range(level_size(self.height)))

    def to_json(self) -> dict:
        return {"height": self.height, "carrier": [to_nested(a) for a in self.carrier]}

    @classmethod
    def from_json(cls, data: Mapping | str) -> Universe:
        if isinstance(data, str):
            data = json.loads(data)
        return validate_universe(encode(x) for x in data["carrier"])

    def __repr__(self) -> str:
        return f"Universe(height={self.height}, size={len(self.carrier)})"


def build_vk(k: int, budget: int = DEFAULT_UNIVERSE_BUDGET) -> Universe:
    """The cumulative level V_k."""
    if k < 0:
        raise ValueError("k must be non-negative")
    size = level_size(k) if k <= 5 else None
    if size is None or size > budget:
        raise BudgetExceeded(f"|V_{k}| = {size if size is not None else '2^65536'} exceeds the universe budget {budget}")
    return Universe(tuple(range(size)), k)


def validate_universe(carrier: Iterable[int]) -> Universe:
    """Check transitivity of a finite family of codes.

    Extensionality and well-foundedness hold automatically for Ackermann
    codes (distinct codes are distinct sets); they are asserted anyway.
    """
    carrier = tuple(sorted(set(carrier)))
    known = set(carrier)
    for a in carrier:
        for m in members(a):
            if m not in known:
                raise UniverseError(f"not transitive: {to_text_hf(m)} in {to_text_hf(a)} is missing")
    extents = {frozenset(members(a)) for a in carrier}
    assert len(extents) == len(carrier)
    height = max((rank(a) + 1 for a in carrier), default=0)
    return Universe(carrier, height)


# ---------------------------------------------------------------- classical satisfaction

def eval_classical(M: Universe, phi: Formula, env: Mapping[str, int] | None = None) -> bool:
    """Tarskian satisfaction M |= phi[env], quantifiers ranging over the carrier."""
    env = dict(env or {})
    for v in free_vars(phi):
        if v not in env:
            raise UnboundVariable(v)
        if env[v] not in M:
            raise UniverseError(f"{v} is bound to {to_text_hf(env[v])}, which is not in the universe")
    return _sat(M, phi, env)


def _bounded(phi: Formula) -> tuple[str, Formula] | None:
    # forall x (x in t -> body) / exists x (x in t & body) with t distinct from x
    body = phi.body  # type: ignore[attr-defined]
    if isinstance(body, (Imp if isinstance(phi, Forall) else And)):
        guard = body.left
        if isinstance(guard, Member) and guard.elem == phi.var and guard.coll != phi.var:  # type: ignore[attr-defined]
            return guard.coll, body.right
    return None


def _sat(M: Universe, phi: Formula, env: dict) -> bool:
    match phi:
        case Member(x, y):
            return bool(env[y] >> env[x] & 1)
        case Eq(x, y):
            return env[x] == env[y]
        case Bot():
            return False
        case And(a, b):
            return _sat(M, a, env) and _sat(M, b, env)
        case Or(a, b):
            return _sat(M, a, env) or _sat(M, b, env)
        case Imp(a, b):
            return not _sat(M, a, env) or _sat(M, b, env)
        case Forall(v, _) | Exists(v, _):
            bounded = _bounded(phi)
            if bounded is not None:
                coll, body = bounded
                pool = M.members(env[coll])
            else:
                pool, body = M.carrier, phi.body
            saved = env.get(v, _MISSING)
            want = isinstance(phi, Exists)
            try:
                for a in pool:
                    env[v] = a
                    if _sat(M, body, env) == want:
                        return want
                return not want
            finally:
                if saved is _MISSING:
                    env.pop(v, None)
                else:
                    env[v] = saved
    raise TypeError(f"not a set-theoretic formula: {to_text(phi)}")


_MISSING = object()


__all__ = [
    "Universe", "UniverseError", "BudgetExceeded", "UnboundVariable", "build_vk",
    "validate_universe", "eval_classical", "members", "from_members", "rank", "level_size",
    "encode", "decode", "to_nested", "to_text_hf", "ordinal", "DEFAULT_UNIVERSE_BUDGET",
]
