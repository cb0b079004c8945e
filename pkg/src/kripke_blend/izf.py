"""Truncated checks of the IZF axioms in a blended model.

Every check builds the explicit witness element at each node for every
choice of parameters drawn from D_v^{R - margin}, confirms the witness lies
in the materialised domain, and then confirms the relevant instance by
forcing.  A witness whose rank lands above the cutoff is reported as
``margin-too-small``; a forcing failure is reported as ``failed``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .blended import BlendedModel, Element, restrict
from .formulas import (
    BOT, And, Eq, Exists, Forall, Formula, Imp, Member, Or, forall_in, free_vars, iff,
    parse_set, to_text, _rename_free,
)

VERIFIED, FAILED, MARGIN = "verified", "failed", "margin-too-small"

AXIOMS = ("extensionality", "empty", "pairing", "union", "powerset",
          "separation", "collection", "set-induction")

DEFAULT_MARGINS = {
    "extensionality": 0, "empty": 0, "union": 0, "pairing": 1, "powerset": 1,
    "separation": 1, "collection": 1, "set-induction": 0,
}

# formulas used by the standard battery; x is the separated/collected variable
SEPARATION_FORMULAS = (
    "forall y in x . bot",
    "exists y in x . y = y",
    "x in b",
    "~ x = b",
    "x in b | ~ x in b",
)
COLLECTION_FORMULAS = ("x = y", "forall z in x . z in y")
INDUCTION_FORMULAS = ("~ x in x", "forall y in x . ~ x in y")


class IzfError(ValueError):
    pass


@dataclass
class IzfVerdict:
    axiom: str
    status: str
    margin: int
    instances: int = 0
    formula: str | None = None
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status != FAILED

    def to_json(self) -> dict:
        out = {"axiom": self.axiom, "status": self.status, "margin": self.margin,
               "instances": self.instances}
        if self.formula is not None:
            out["formula"] = self.formula
        if self.problems:
            out["problems"] = self.problems[:10]
        return out


class _Run:
    def __init__(self, B: BlendedModel, axiom: str, margin: int, formula: Formula | None):
        if margin < 0 or margin > B.R:
            raise IzfError(f"margin must lie in 0..{B.R}")
        self.B, self.margin = B, margin
        self.verdict = IzfVerdict(axiom, VERIFIED, margin,
                                  formula=to_text(formula) if formula is not None else None)

    def params(self, v) -> tuple[Element, ...]:
        return self.B.stratum(v, self.B.R - self.margin)

    def witness(self, c: Element, what: str) -> bool:
        B = self.B
        if B.contains(c):
            return True
        limit = B.height(c.base) if B.frame.is_end(c.base) else B.R
        if c.rank >= limit:
            self._flag(MARGIN, f"{what}: witness of rank {c.rank} does not fit under height {limit}")
        else:
            self._flag(FAILED, f"{what}: witness is missing from D_{c.base}")
        return False

    def forced(self, v, phi: Formula, env: dict, what: str) -> bool:
        self.verdict.instances += 1
        if self.B.forces(v, phi, env):
            return True
        self._flag(FAILED, f"{what}: {to_text(phi)} not forced at {v}")
        return False

    def _flag(self, status: str, message: str) -> None:
        v = self.verdict
        if v.status != FAILED:
            v.status = status
        v.problems.append(message)


def _show(x: Element) -> str:
    return x.describe()


def izf_check(B: BlendedModel, axiom: str, margin: int | None = None,
              formula: Formula | str | None = None) -> IzfVerdict:
    """Check one axiom (instance) of IZF in the truncated model ``B``.

    ``formula`` is required for the schemes: separation takes phi(x, b) with
    parameter b, collection phi(x, y), set induction phi(x).
    """
    axiom = axiom.lower()
    if axiom not in AXIOMS:
        raise IzfError(f"unknown axiom {axiom!r}; expected one of {', '.join(AXIOMS)}")
    if margin is None:
        margin = DEFAULT_MARGINS[axiom]
    if isinstance(formula, str):
        formula = parse_set(formula)
    schemes = {"separation", "collection", "set-induction"}
    if axiom in schemes and formula is None:
        raise IzfError(f"{axiom} needs a formula")
    if axiom not in schemes:
        formula = None
    run = _Run(B, axiom, margin, formula)
    {
        "extensionality": _extensionality,
        "empty": _empty,
        "pairing": _pairing,
        "union": _union,
        "powerset": _powerset,
        "separation": _separation,
        "collection": _collection,
        "set-induction": _induction,
    }[axiom](run, formula)
    return run.verdict


def _extensionality(run: _Run, _) -> None:
    same = Forall("x", iff(Member("x", "a"), Member("x", "b")))
    phi = Imp(same, Eq("a", "b"))
    for v in run.B.frame.nodes:
        for a, b in itertools.product(run.params(v), repeat=2):
            run.forced(v, phi, {"a": a, "b": b}, f"a={_show(a)}, b={_show(b)}")


def _empty(run: _Run, _) -> None:
    phi = forall_in("x", "a", BOT)
    for v in run.B.frame.nodes:
        c = run.B.zero(v)
        if run.witness(c, f"empty set at {v}"):
            run.forced(v, phi, {"a": c}, f"at {v}")
        run.forced(v, Exists("a", phi), {}, f"at {v}")


def _build(B: BlendedModel, v, rule) -> Element:
    return Element(B.frame, v, [frozenset(rule(w)) for w in B.frame.up(v)])


def _pairing(run: _Run, _) -> None:
    phi = Forall("x", iff(Member("x", "y"), Or(Eq("x", "a"), Eq("x", "b"))))
    B = run.B
    for v in B.frame.nodes:
        for a, b in itertools.product(run.params(v), repeat=2):
            c = _build(B, v, lambda w: {restrict(a, w), restrict(b, w)})
            what = f"pair of {_show(a)} and {_show(b)} at {v}"
            if run.witness(c, what):
                run.forced(v, phi, {"a": a, "b": b, "y": c}, what)


def _union(run: _Run, _) -> None:
    phi = Forall("x", iff(Member("x", "y"), Exists("u", And(Member("u", "a"), Member("x", "u")))))
    B = run.B
    for v in B.frame.nodes:
        for a in run.params(v):
            c = _build(B, v, lambda w: set().union(*(m.own for m in a.value(w))))
            what = f"union of {_show(a)} at {v}"
            if run.witness(c, what):
                run.forced(v, phi, {"a": a, "y": c}, what)


def _powerset(run: _Run, _) -> None:
    subset = forall_in("z", "x", Member("z", "a"))
    phi = Forall("x", iff(Member("x", "y"), subset))
    B = run.B
    for v in B.frame.nodes:
        for a in run.params(v):
            def rule(w, a=a):
                aw = restrict(a, w)
                return [c for c in B.domain(w) if B.forces(w, forall_in("z", "c", Member("z", "a")),
                                                           {"c": c, "a": aw})]
            c = _build(B, v, rule)
            what = f"power set of {_show(a)} at {v}"
            if run.witness(c, what):
                run.forced(v, phi, {"a": a, "y": c}, what)


def _params_of(phi: Formula, bound: set[str]) -> list[str]:
    return sorted(free_vars(phi) - bound)


def _separation(run: _Run, phi: Formula) -> None:
    if "a" in free_vars(phi) or "y" in free_vars(phi):
        raise IzfError("the separation formula may not mention a or y free")
    params = _params_of(phi, {"x"})
    inst = Forall("x", iff(Member("x", "y"), And(Member("x", "a"), phi)))
    B = run.B
    for v in B.frame.nodes:
        pool = run.params(v)
        for a in pool:
            for values in itertools.product(pool, repeat=len(params)):
                env = dict(zip(params, values))

                def rule(w):
                    ew = {k: restrict(x, w) for k, x in env.items()}
                    return [d for d in a.value(w) if B.forces(w, phi, {**ew, "x": d})]
                c = _build(B, v, rule)
                what = f"separation from {_show(a)} at {v}"
                if run.witness(c, what):
                    run.forced(v, inst, {**env, "a": a, "y": c}, what)


def _collection(run: _Run, phi: Formula) -> None:
    if "a" in free_vars(phi) or "b" in free_vars(phi):
        raise IzfError("the collection formula may not mention a or b free")
    params = _params_of(phi, {"x", "y"})
    if params:
        raise IzfError(f"collection formulas here take no parameters (found {', '.join(params)})")
    hyp = forall_in("x", "a", Exists("y", phi))
    concl = forall_in("x", "a", Exists("y", And(Member("y", "b"), phi)))
    B = run.B
    for v in B.frame.nodes:
        for a in run.params(v):
            what = f"collection over {_show(a)} at {v}"
            run.forced(v, Imp(hyp, Exists("b", concl)), {"a": a}, what)
            if not B.forces(v, hyp, {"a": a}):
                continue
            alpha = _least_stratum(B, v, a, phi)
            if alpha is None:
                run._flag(MARGIN, f"{what}: no stratum up to R={B.R} holds the witnesses")
                continue
            b = _build(B, v, lambda w: B.stratum(w, alpha))
            if run.witness(b, what):
                run.forced(v, concl, {"a": a, "b": b}, what)


def _least_stratum(B: BlendedModel, v, a: Element, phi: Formula) -> int | None:
    for alpha in range(B.R + 1):
        if all(any(B.forces(w, phi, {"x": x, "y": y}) for y in B.stratum(w, alpha))
               for w in B.frame.up(v) for x in restrict(a, w).own):
            return alpha
    return None


def _induction(run: _Run, phi: Formula) -> None:
    params = _params_of(phi, {"x"})
    if params:
        raise IzfError(f"set-induction formulas here take no parameters (found {', '.join(params)})")
    at_a = _rename(phi, "x", "a")
    hyp = Forall("a", Imp(forall_in("x", "a", phi), at_a))
    B = run.B
    for v in B.frame.nodes:
        run.forced(v, Imp(hyp, Forall("a", at_a)), {}, f"at {v}")
        if B.forces(v, hyp):
            # rank induction over the strata, all nodes at once
            for alpha in range(len(B.strata[v])):
                for a in B.strata[v][alpha]:
                    run.forced(v, phi, {"x": a}, f"{_show(a)} at {v}, stratum {alpha}")


def _rename(phi: Formula, old: str, new: str) -> Formula:
    if new in free_vars(phi):
        raise IzfError(f"variable {new} already free in {to_text(phi)}")
    return _rename_free(phi, old, new)


def standard_battery(B: BlendedModel) -> list[IzfVerdict]:
    """Every axiom with its default margin, schemes for the fixed formula lists."""
    out = [izf_check(B, ax) for ax in ("extensionality", "empty", "pairing", "union", "powerset")]
    out += [izf_check(B, "separation", formula=f) for f in SEPARATION_FORMULAS]
    out += [izf_check(B, "collection", formula=f) for f in COLLECTION_FORMULAS]
    out += [izf_check(B, "set-induction", formula=f) for f in INDUCTION_FORMULAS]
    return out


__all__ = [
    "IzfVerdict", "IzfError", "izf_check", "standard_battery", "AXIOMS", "DEFAULT_MARGINS",
    "SEPARATION_FORMULAS", "COLLECTION_FORMULAS", "INDUCTION_FORMULAS", "VERIFIED", "FAILED", "MARGIN",
]
