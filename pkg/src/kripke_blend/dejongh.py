"""Upset counting, node identification, faithful substitutions and countermodels.

The sentence psi_n says that among any n subsets of 1 two coincide.  In a
blended model the subsets of 1 visible at v are exactly the elements 1^v_X
for upsets X of the cone above v, so v forces psi_{n+1} exactly when
n >= U_v.  Combined with sentences telling the end-nodes apart this pins down
every node, and disjunctions over minimal nodes then realise any upset as a
truth set.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .blended import BlendedModel, construct
from .formulas import (
    BOT, And, Eq, Formula, Imp, Or, Substitution, apply_substitution, conj, disj,
    enumerate_prop_formulas, forall_in, forall_many, letters, neg, ordinal_sentence,
    random_prop_formula, subformulas, to_text,
)
from .frames import Frame, Node, minimal_nodes, upset_count, upsets
from .propositional import Valuation, logic_class, logic_member, truth_mask

DEFAULT_RANK = 2


class FaithfulnessError(AssertionError):
    """sigma(p) failed to have the intended truth set: an internal bug sentinel."""


class DistinguisherError(ValueError):
    pass


# ---------------------------------------------------------------- psi and the counting theorem

def subset_of_one(var: str) -> Formula:
    """forall y in var . forall z in y . bot"""
    return forall_in("y", var, forall_in("z", "y", BOT))


def psi(n: int) -> Formula:
    """Among any n subsets of 1, two are equal.

    With n <= 1 there is no pair to compare, the consequent is the empty
    disjunction, and psi_n fails wherever 0 exists.
    """
    if n < 1:
        raise ValueError("psi needs n >= 1")
    xs = [f"x{i}" for i in range(n)]
    guard = conj(subset_of_one(x) for x in xs)
    collide = disj(Eq(xs[i], xs[j]) for i, j in itertools.combinations(range(n), 2))
    return forall_many(xs, Imp(guard, collide))


@dataclass
class CountingReport:
    ok: bool
    upset_counts: dict
    problems: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"ok": self.ok, "upset_counts": {str(k): v for k, v in self.upset_counts.items()},
                "problems": self.problems}


def counting_check(B: BlendedModel) -> CountingReport:
    """v ||- psi_{n+1} iff n >= U_v for n <= U_v + 2, and every subset of 1 is some 1^v_X."""
    frame = B.frame
    problems = []
    counts = {v: upset_count(frame, v) for v in frame.nodes}
    for v in frame.nodes:
        U = counts[v]
        for n in range(U + 3):
            got = B.forces(v, psi(n + 1))
            if got != (n >= U):
                problems.append(f"{v}: psi_{n + 1} forced={got}, expected {n >= U} (U={U})")
        ones = {B.one_of_upset(v, X) for X in upsets(frame, v)}
        if len(ones) != U:
            problems.append(f"{v}: the elements 1^v_X are not pairwise distinct")
        for x in B.domain(v):
            if B.forces(v, subset_of_one("a"), {"a": x}) and x not in ones:
                problems.append(f"{v}: {x.describe()} is a subset of 1 but no 1^v_X")
    return CountingReport(not problems, counts, problems)


# ---------------------------------------------------------------- distinguishing end-nodes

def default_heights(frame: Frame) -> dict:
    """k_i = i + 2 for the i-th end-node."""
    return {e: i + 2 for i, e in enumerate(frame.ends)}


def height_distinguishers(B: BlendedModel) -> dict:
    """phi_e saying 'the ordinals are exactly 0..k_e - 1'."""
    return {e: ordinal_sentence(B.height(e) - 1) for e in B.frame.ends}


def check_distinguishers(B: BlendedModel, phis: Mapping[Node, Formula]) -> list[str]:
    """Problems with the matrix e_j ||- phi_i iff i = j (empty when fine)."""
    out = []
    for i in B.frame.ends:
        for j in B.frame.ends:
            if B.forces(j, phis[i]) != (i == j):
                out.append(f"end-node {j} {'forces' if i != j else 'does not force'} the sentence for {i}")
    return out


def chi(B: BlendedModel, v: Node, phis: Mapping[Node, Formula] | None = None,
        check: bool = True) -> Formula:
    """psi_{U_v + 1} and the negated distinguishers of the end-nodes not above v.

    With ``check`` the distinguishers are first evaluated at every end-node and
    a :class:`DistinguisherError` is raised if they do not separate them.
    """
    frame = B.frame
    if phis is None:
        phis = height_distinguishers(B)
    if check:
        problems = check_distinguishers(B, phis)
        if problems:
            raise DistinguisherError("; ".join(problems[:3]))
    above = frame.ends_above(v)
    parts = [psi(upset_count(frame, v) + 1)]
    parts += [neg(phis[e]) for e in frame.ends if e not in above]
    return conj(parts)


@dataclass
class TruthSet:
    sentence: Formula
    nodes: frozenset

    def is_upset(self, frame: Frame) -> bool:
        return all(set(frame.up(v)) <= self.nodes for v in self.nodes)

    def to_json(self, frame: Frame) -> dict:
        return {"sentence": to_text(self.sentence), "nodes": [v for v in frame.nodes if v in self.nodes]}


def truth_set(B: BlendedModel, phi: Formula) -> TruthSet:
    return TruthSet(phi, B.truth_set(phi))


def identification_problems(B: BlendedModel, phis: Mapping[Node, Formula] | None = None,
                            nodes=None) -> list[str]:
    """Nodes v whose chi_v does not have truth set exactly the cone above v."""
    out = []
    for v in B.frame.nodes if nodes is None else nodes:
        got = B.truth_set(chi(B, v, phis, check=False))
        if got != frozenset(B.frame.up(v)):
            out.append(f"chi_{v} has truth set {sorted(map(str, got))}")
    return out


# ---------------------------------------------------------------- faithful substitutions

def faithful_substitution(B: BlendedModel, V: Mapping[str, frozenset],
                          phis: Mapping[Node, Formula] | None = None) -> Substitution:
    """sigma(p) = the disjunction of chi_v over the minimal nodes v of V(p).

    The truth set of each image is re-evaluated and must equal V(p).
    """
    if phis is None:
        phis = height_distinguishers(B)
    problems = check_distinguishers(B, phis)
    if problems:
        raise DistinguisherError("; ".join(problems))
    images = {}
    for p in sorted(V):
        image = disj(chi(B, v, phis, check=False) for v in minimal_nodes(B.frame, V[p]))
        got = B.truth_set(image)
        if got != frozenset(V[p]):
            raise FaithfulnessError(f"sigma({p}) has truth set {sorted(map(str, got))}, "
                                    f"expected {sorted(map(str, V[p]))}")
        images[p] = image
    return Substitution(images)


# ---------------------------------------------------------------- correspondence

@dataclass
class CorrespondenceReport:
    ok: bool
    formulas: int
    classes: int = 0
    sampled: int = 0
    mismatches: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"ok": self.ok, "formulas": self.formulas, "classes": self.classes,
                "sampled": self.sampled, "mismatches": self.mismatches[:10]}


def _compare(F: Frame, V: Mapping, B: BlendedModel, sigma: Mapping, phi: Formula, memo: dict):
    prop = F.unmask(truth_mask(F, V, phi, memo))
    sent = B.truth_set(apply_substitution(phi, sigma))
    return prop, sent


def correspondence_check(F: Frame, V: Mapping[str, frozenset], B: BlendedModel, sigma: Mapping,
                         max_depth: int, formulas: Sequence[Formula] = (), samples: int = 0,
                         seed: int = 0, literal_depth: int = 2) -> CorrespondenceReport:
    """Compare K, V, v ||- chi with v ||- chi^sigma at every node.

    Every formula over the letters of V and bot up to ``literal_depth`` is
    checked directly.  Deeper levels up to ``max_depth`` are covered exactly
    by class: the truth set of a sentence built with one connective from two
    sentences is a function of their truth sets, so one representative per
    (connective, class, class) suffices, where a class is the pair of truth
    sets on both sides.  ``formulas`` are checked directly as well, and
    ``samples`` random formulas of depth ``max_depth`` add a literal spot
    check of the class argument.
    """
    if F != B.frame:
        raise ValueError("the valuation frame and the model frame differ")
    names = sorted(V)
    memo: dict = {}
    mismatches: list[str] = []
    checked = 0

    def check(phi: Formula):
        nonlocal checked
        checked += 1
        prop, sent = _compare(F, V, B, sigma, phi, memo)
        if prop != sent:
            mismatches.append(f"{to_text(phi)}: propositional {sorted(map(str, prop))}, "
                              f"set-theoretic {sorted(map(str, sent))}")
        return prop, sent

    classes: dict = {}
    for phi in enumerate_prop_formulas(names, min(max_depth, literal_depth)):
        classes.setdefault(check(phi), phi)
    n_classes = 0
    for level in range(literal_depth + 1, max_depth + 1):
        reps = list(classes.items())
        fresh: dict = {}
        for op in (And, Or, Imp):
            for (ka, a), (kb, b) in itertools.product(reps, repeat=2):
                n_classes += 1
                fresh.setdefault(check(op(a, b)), op(a, b))
        for k, phi in fresh.items():
            classes.setdefault(k, phi)
    for phi in formulas:
        for sub in subformulas(phi):
            check(sub)
    rng = random.Random(seed)
    for _ in range(samples):
        check(random_prop_formula(rng, names, max_depth))
    return CorrespondenceReport(not mismatches, checked, n_classes, samples, mismatches)


# ---------------------------------------------------------------- countermodels

@dataclass
class Certificate:
    logic: str
    formula: Formula
    frame: Frame
    valuation: Valuation
    heights: dict
    rank: int
    sigma: Substitution
    node: Node
    correspondence: CorrespondenceReport

    @property
    def ok(self) -> bool:
        return self.correspondence.ok

    def to_json(self) -> dict:
        heights = ",".join(str(self.heights[e]) for e in self.frame.ends)
        return {
            "verdict": "certificate",
            "logic": self.logic,
            "formula": to_text(self.formula),
            "frame": self.frame.to_json(),
            "valuation": self.valuation.to_json(),
            "universe_heights": {str(e): self.heights[e] for e in self.frame.ends},
            "rank": self.rank,
            "sigma": self.sigma.to_json(),
            "substituted": to_text(apply_substitution(self.formula, self.sigma)),
            "failing_node": self.node,
            "correspondence": self.correspondence.to_json(),
            "replay": f"kripke-blend blend --frame FRAME.json --universes {heights} --rank {self.rank}; "
                      f"then check node {self.node} does not force the substituted sentence",
        }


@dataclass
class NotRefuted:
    logic: str
    formula: Formula
    bound: int
    frames_checked: int

    ok = True

    def to_json(self) -> dict:
        return {"verdict": "not-refuted-up-to-bound", "logic": self.logic, "formula": to_text(self.formula),
                "bound": self.bound, "frames_checked": self.frames_checked}


def certify(logic: str, phi: Formula, frame: Frame, valuation: Mapping[str, frozenset], node: Node,
            rank: int = DEFAULT_RANK, heights: Mapping | None = None,
            budget: int | None = None) -> Certificate:
    """Blend over a propositional countermodel and translate it into set theory."""
    heights = dict(heights or default_heights(frame))
    kwargs = {} if budget is None else {"budget": budget}
    B = construct(frame, heights, rank, **kwargs)
    # letters absent from phi do not matter; give every letter an image
    V = Valuation(frame, {p: valuation.get(p, frozenset()) for p in sorted(letters(phi) | set(valuation))})
    sigma = faithful_substitution(B, V)
    report = correspondence_check(frame, V, B, sigma, max_depth=1, formulas=[phi], literal_depth=1)
    if B.forces(node, apply_substitution(phi, sigma)):
        report.ok = False
        report.mismatches.append(f"{node} forces the substituted formula")
    return Certificate(logic, phi, frame, V, heights, rank, sigma, node, report)


def dejongh_countermodel(logic: str, phi: Formula, bound: int, rank: int = DEFAULT_RANK,
                         budget: int | None = None, valuation_budget: int | None = None,
                         jobs: int = 1) -> Certificate | NotRefuted:
    """Search the logic's frames up to ``bound`` nodes and certify the first countermodel."""
    kind, n = logic_class(logic)
    kwargs = {} if valuation_budget is None else {"budget": valuation_budget}
    verdict = logic_member(kind, phi, bound, n, jobs=jobs, **kwargs)
    if verdict.valid:
        return NotRefuted(logic, phi, bound, verdict.frames_checked)
    cm = verdict.countermodel
    assert cm is not None
    return certify(logic, phi, cm.frame, cm.valuation, cm.node, rank, budget=budget)


# ---------------------------------------------------------------- excluded middle

def excluded_middle_demo(heights: tuple[int, int] = (3, 4), rank: int = DEFAULT_RANK) -> dict:
    """Fork whose end universes disagree on a sentence; the root decides neither way."""
    frame = Frame.fork(2)
    B = construct(frame, heights, rank)
    phi = ordinal_sentence(2)
    e0, e1 = frame.ends
    root = frame.root
    verdicts = {
        "e0_forces_phi": B.forces(e0, phi),
        "e1_forces_not_phi": B.forces(e1, neg(phi)),
        "root_forces_phi": B.forces(root, phi),
        "root_forces_not_phi": B.forces(root, neg(phi)),
        "root_forces_phi_or_not_phi": B.forces(root, phi | neg(phi)),
    }
    ok = (verdicts["e0_forces_phi"] and verdicts["e1_forces_not_phi"] and not verdicts["root_forces_phi"]
          and not verdicts["root_forces_not_phi"] and not verdicts["root_forces_phi_or_not_phi"])
    return {"ok": ok, "frame": frame.to_json(), "heights": list(heights), "rank": rank,
            "phi": to_text(phi), "verdicts": verdicts}


__all__ = [
    "psi", "subset_of_one", "counting_check", "CountingReport", "default_heights",
    "height_distinguishers", "check_distinguishers", "chi", "TruthSet", "truth_set",
    "identification_problems", "faithful_substitution", "FaithfulnessError", "DistinguisherError",
    "correspondence_check", "CorrespondenceReport", "Certificate", "NotRefuted", "certify",
    "dejongh_countermodel", "excluded_middle_demo", "DEFAULT_RANK",
]
