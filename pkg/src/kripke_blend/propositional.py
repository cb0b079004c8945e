"""Kripke forcing for propositional formulas and frame-validity sweeps."""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Mapping

from .formulas import And, Bot, Formula, Imp, Letter, Or, conj, disj, letters, to_text
from .frames import Frame, Node, enumerate_class, is_upset, upset_count, upsets

DEFAULT_VALUATION_BUDGET = 1_000_000


class ResourceError(RuntimeError):
    """A sweep or construction would exceed its configured budget."""


class MissingLetter(KeyError):
    pass


class Valuation(dict):
    """Letters mapped to upsets of the frame (persistence is checked)."""

    def __init__(self, frame: Frame, assignment: Mapping[str, object]):
        super().__init__()
        self.frame = frame
        for name, nodes in assignment.items():
            nodes = frozenset(nodes)
            if not is_upset(frame, nodes):
                raise ValueError(f"V({name}) = {sorted(map(str, nodes))} is not an upset")
            self[name] = nodes

    def to_json(self) -> dict:
        return {p: [v for v in self.frame.nodes if v in self[p]] for p in sorted(self)}


@dataclass(frozen=True)
class Countermodel:
    frame: Frame
    valuation: Valuation
    node: Node

    def to_json(self) -> dict:
        return {"frame": self.frame.to_json(), "valuation": self.valuation.to_json(), "node": self.node}


def truth_mask(frame: Frame, valuation: Mapping[str, frozenset], phi: Formula, _memo=None) -> int:
    """Bitmask of the nodes forcing ``phi``, computed clause by clause."""
    memo = {} if _memo is None else _memo
    hit = memo.get(phi)
    if hit is not None:
        return hit
    full = (1 << len(frame)) - 1
    match phi:
        case Letter(name):
            if name not in valuation:
                raise MissingLetter(name)
            out = frame.mask(valuation[name])
        case Bot():
            out = 0
        case And(a, b):
            out = truth_mask(frame, valuation, a, memo) & truth_mask(frame, valuation, b, memo)
        case Or(a, b):
            out = truth_mask(frame, valuation, a, memo) | truth_mask(frame, valuation, b, memo)
        case Imp(a, b):
            ta = truth_mask(frame, valuation, a, memo)
            tb = truth_mask(frame, valuation, b, memo)
            bad = ta & ~tb & full
            out = 0
            for i, cone in enumerate(frame.masks):
                if not cone & bad:
                    out |= 1 << i
        case _:
            raise TypeError(f"not a propositional formula: {to_text(phi)}")
    memo[phi] = out
    return out


def truth_set(frame: Frame, valuation: Mapping[str, frozenset], phi: Formula) -> frozenset:
    return frame.unmask(truth_mask(frame, valuation, phi))


def force_prop(frame: Frame, valuation: Mapping[str, frozenset], v: Node, phi: Formula) -> bool:
    """K, V, v ||- phi."""
    return bool(truth_mask(frame, valuation, phi) >> frame.index(v) & 1)


def valuations(frame: Frame, names, budget: int = DEFAULT_VALUATION_BUDGET):
    """Every persistent valuation of ``names`` on ``frame``."""
    names = sorted(names)
    ups = upsets(frame, frame.root)
    total = len(ups) ** len(names)
    if total > budget:
        raise ResourceError(f"{total} valuations exceed the valuation budget {budget}")
    for combo in itertools.product(ups, repeat=len(names)):
        yield Valuation(frame, dict(zip(names, combo)))


def valid_in_frame(frame: Frame, phi: Formula, budget: int = DEFAULT_VALUATION_BUDGET) -> bool | Countermodel:
    """``True`` if ``phi`` is valid on ``frame``, else the first countermodel found."""
    for val in valuations(frame, letters(phi), budget):
        mask = truth_mask(frame, val, phi)
        if mask != (1 << len(frame)) - 1:
            node = next(v for i, v in enumerate(frame.nodes) if not mask >> i & 1)
            return Countermodel(frame, val, node)
    return True


# ---------------------------------------------------------------- axioms

def _lc() -> Formula:
    p, q = Letter("p"), Letter("q")
    return Or(Imp(p, q), Imp(q, p))


def _t(n: int) -> Formula:
    ps = [Letter(f"p{i}") for i in range(n + 1)]
    parts = []
    for k, pk in enumerate(ps):
        others = disj(pj for j, pj in enumerate(ps) if j != k)
        parts.append(Imp(Imp(pk, others), others))
    return Imp(conj(parts), disj(ps))


def _bd(n: int) -> Formula:
    p1, q = Letter("p1"), Letter("q")
    beta = Imp(Imp(Imp(p1, q), p1), p1)
    for i in range(2, n + 1):
        pi = Letter(f"p{i}")
        beta = Imp(Imp(Imp(pi, beta), pi), pi)
    return beta


def axiom(logic: str, n: int | None = None) -> Formula:
    """The axiom scheme instance of ``LC``, ``T`` (needs n) or ``BD`` (needs n).

    T(n) is the Gabbay-de Jongh formula over letters p0..pn with disjunctions
    of the remaining letters; BD(n) is the Peirce-style chain beta_n over
    p1..pn and q.
    """
    kind = logic.upper()
    if kind == "LC":
        return _lc()
    if n is None or n < 1:
        raise ValueError(f"{logic} needs n >= 1")
    if kind == "T":
        return _t(n)
    if kind == "BD":
        return _bd(n)
    raise ValueError(f"unknown logic {logic!r}")


# ---------------------------------------------------------------- logics and classes

LOGIC_CLASSES = {
    "IPC": ("all", None),
    "LC": ("linear", None),
}


def parse_logic(spec: str) -> tuple[str, int | None]:
    """``"ipc"``, ``"lc"``, ``"t(2)"``, ``"bd(3)"`` -> (name, n)."""
    spec = spec.strip().upper().replace("_", "")
    if "(" in spec:
        name, arg = spec.rstrip(")").split("(", 1)
        return name.strip(), int(arg)
    if spec[:2] == "BD" and spec[2:].isdigit():
        return "BD", int(spec[2:])
    if spec[:1] == "T" and spec[1:].isdigit():
        return "T", int(spec[1:])
    return spec, None


def logic_class(logic: str) -> tuple[str, int | None]:
    """The frame class characterising a logic, as an ``enumerate_class`` kind."""
    name, n = parse_logic(logic)
    if name in LOGIC_CLASSES:
        return LOGIC_CLASSES[name]
    if name == "T":
        return "splitting", n
    if name == "BD":
        return "depth", n
    raise ValueError(f"unknown logic {logic!r}")


@dataclass(frozen=True)
class ClassVerdict:
    valid: bool
    frames_checked: int
    countermodel: Countermodel | None = None

    def to_json(self) -> dict:
        out: dict = {"verdict": "valid-up-to-bound" if self.valid else "countermodel",
                     "frames_checked": self.frames_checked}
        if self.countermodel is not None:
            out["countermodel"] = self.countermodel.to_json()
        return out


def _check_one(args) -> bool | Countermodel:
    frame, phi, budget = args
    return valid_in_frame(frame, phi, budget)


def logic_member(kind: str, phi: Formula, bound: int, n: int | None = None,
                 budget: int = DEFAULT_VALUATION_BUDGET, jobs: int = 1,
                 max_depth: int | None = None) -> ClassVerdict:
    """Check ``phi`` on every frame of a class up to ``bound`` nodes.

    A countermodel refutes membership in the class's logic; validity is only
    evidence up to the bound.
    """
    frames = enumerate_class(kind, bound, n, max_depth)
    work = [(f, phi, budget) for f in frames]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_check_one, work))
    else:
        results = []
        for item in work:
            results.append(_check_one(item))
            if results[-1] is not True:
                break
    for i, res in enumerate(results):
        if res is not True:
            return ClassVerdict(False, i + 1, res)
    return ClassVerdict(True, len(frames))


__all__ = [
    "ResourceError", "MissingLetter", "Valuation", "Countermodel", "truth_mask", "truth_set",
    "force_prop", "valuations", "valid_in_frame", "axiom", "parse_logic", "logic_class",
    "ClassVerdict", "logic_member", "upset_count", "DEFAULT_VALUATION_BUDGET",
]
