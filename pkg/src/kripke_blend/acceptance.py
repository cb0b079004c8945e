"""The acceptance suite: ten exact checks on small truncated instances.

Each criterion returns a :class:`CriterionResult`; :func:`run_all` runs them
in order.  The ``selftest`` CLI verb and ``tests/test_acceptance.py`` both use
this module.
"""

from __future__ import annotations

import inspect
import itertools
import random
import time
from dataclasses import dataclass, field
from typing import Callable

from .blended import construct
from .dejongh import (
    Certificate, DistinguisherError, check_distinguishers, chi, correspondence_check, counting_check, default_heights,
    dejongh_countermodel, excluded_middle_demo, faithful_substitution, height_distinguishers,
    identification_problems,
)
from .formulas import (
    enumerate_set_sentences, is_sentence, parse_prop, quantifier_depth, random_set_formula, to_text,
)
from .frames import Frame, enumerate_class, enumerate_trees, upset_count, upsets
from .izf import FAILED, standard_battery
from .oracles import brute_force_tree_counts, naive_eval, naive_upsets, naive_vk
from .propositional import axiom, valid_in_frame, valuations
from .universes import build_vk, decode, eval_classical


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    seconds: float = 0.0
    limit: float | None = None
    details: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        limit = f" (target < {self.limit:.0f} s)" if self.limit else ""
        return f"[{status}] {self.number:2d}. {self.name}: {self.seconds:.1f} s{limit}"

    def to_json(self) -> dict:
        return {"criterion": self.number, "name": self.name, "passed": self.passed,
                "seconds": round(self.seconds, 2), "details": self.details[:20], "notes": self.notes}


def sweep_models(max_nodes: int = 4, heights=(2, 3), R: int = 2):
    """(frame, heights, model) for every tree and height assignment, plus the default heights."""
    for frame in enumerate_trees(max_nodes):
        seen = set()
        combos = [dict(zip(frame.ends, hs)) for hs in itertools.product(heights, repeat=len(frame.ends))]
        combos.append(default_heights(frame))
        for hs in combos:
            key = tuple(hs[e] for e in frame.ends)
            if key in seen:
                continue
            seen.add(key)
            yield frame, hs, construct(frame, hs, R)


def _injective(hs: dict) -> bool:
    return len(set(hs.values())) == len(hs)


def separable_nodes(frame, hs: dict) -> list:
    """Nodes v for which no end-node outside the cone shares a height with one inside it."""
    out = []
    for v in frame.nodes:
        above = set(frame.ends_above(v))
        inside = {hs[e] for e in above}
        if all(hs[e] not in inside for e in frame.ends if e not in above):
            out.append(v)
    return out


def criterion_1() -> list[str]:
    problems = []
    for frame, hs, B in sweep_models():
        report = counting_check(B)
        problems += [f"{frame} {hs}: {p}" for p in report.problems]
    return problems


def criterion_2(notes: list[str]) -> list[str]:
    # Equal heights make end-nodes satisfy the same sentences, so those models
    # can only be held to the precondition check and the separable nodes.
    problems = []
    full = partial = 0
    for frame, hs, B in sweep_models():
        phis = height_distinguishers(B)
        bad = check_distinguishers(B, phis)
        label = f"{frame} {hs}"
        if _injective(hs):
            full += 1
            problems += [f"{label}: {p}" for p in bad]
            problems += [f"{label}: {p}" for p in identification_problems(B, phis)]
            continue
        partial += 1
        if not bad:
            problems.append(f"{label}: repeated heights passed the distinguisher check")
        try:
            chi(B, frame.root, phis)
            problems.append(f"{label}: chi accepted distinguishers that do not separate end-nodes")
        except DistinguisherError:
            pass
        problems += [f"{label}: {p}" for p in identification_problems(B, phis, separable_nodes(frame, hs))]
    notes.append(f"{full} models with distinct end heights: every node identified")
    notes.append(f"{partial} models with repeated heights: precondition rejected, separable nodes identified")
    return problems


def criterion_3() -> list[str]:
    problems = []
    for frame in enumerate_trees(4):
        B = construct(frame, default_heights(frame), 2)
        for V in valuations(frame, ["p", "q"]):
            try:
                faithful_substitution(B, V)
            except AssertionError as exc:
                problems.append(f"{frame} {V.to_json()}: {exc}")
    return problems


def criterion_4() -> list[str]:
    problems = []
    for frame in (Frame.fork(2), Frame.chain(3)):
        B = construct(frame, default_heights(frame), 2)
        for V in valuations(frame, ["p", "q"]):
            sigma = faithful_substitution(B, V)
            report = correspondence_check(frame, V, B, sigma, max_depth=3, samples=100, seed=0)
            problems += [f"{frame} {V.to_json()}: {m}" for m in report.mismatches]
    return problems


PIPELINE_CASES = (
    ("ipc", "p | ~p", 4),
    ("ipc", "((p -> q) -> p) -> p", 4),
    ("ipc", "(p -> q) | (q -> p)", 4),
    ("lc", "((p -> q) -> p) -> p", 4),
    ("bd(2)", "((p1 -> q) -> p1) -> p1", 3),
)


def criterion_5() -> list[str]:
    problems = []
    for logic, text, bound in PIPELINE_CASES:
        out = dejongh_countermodel(logic, parse_prop(text), bound)
        if not isinstance(out, Certificate):
            problems.append(f"({logic}, {text}): no countermodel up to {bound} nodes")
        elif not out.ok:
            problems.append(f"({logic}, {text}): {out.correspondence.mismatches[:3]}")
    return problems


def criterion_6() -> list[str]:
    problems = []

    def expect(frames, phi, valid: bool, label: str):
        for f in frames:
            if (valid_in_frame(f, phi) is True) != valid:
                problems.append(f"{label}: expected {'valid' if valid else 'refuted'} on {f}")

    lc = axiom("LC")
    expect(enumerate_class("linear", 5), lc, True, "LC on linear frames")
    expect([Frame.fork(2)], lc, False, "LC on the fork")
    for n in (1, 2, 3):
        beta = axiom("BD", n)
        expect(enumerate_class("depth", 5, n), beta, True, f"beta_{n} on depth <= {n}")
        expect([Frame.chain(n + 1)], beta, False, f"beta_{n} on the {n + 1}-chain")
    t2 = axiom("T", 2)
    expect([Frame.fork(3)], t2, False, "T(2) on the 3-fork")
    expect(enumerate_class("splitting", 5, 2, max_depth=2), t2, True, "T(2) on binary trees of depth <= 2")
    return problems


def criterion_7() -> list[str]:
    problems = []
    family = enumerate_set_sentences()
    rng = random.Random(7)
    deeper = []
    while len(deeper) < 100:
        phi = random_set_formula(rng, [], 6, 4)
        if is_sentence(phi) and quantifier_depth(phi) >= 3:
            deeper.append(phi)
    M = build_vk(3)
    for frame, hs in ((Frame.chain(1), (3,)), (Frame.fork(2), (3, 3))):
        B = construct(frame, hs, 2)
        for e in frame.ends:
            for phi in family + deeper:
                if B.forces(e, phi) != eval_classical(M, phi):
                    problems.append(f"{frame} end {e}: {to_text(phi)}")
    if len(family) < 500:
        problems.append(f"sentence family has only {len(family)} members")
    return problems


def criterion_8() -> list[str]:
    B = construct(Frame.fork(2), (3, 3), 3)
    out = []
    for verdict in standard_battery(B):
        if verdict.status == FAILED:
            out.append(f"{verdict.axiom} {verdict.formula or ''}: {verdict.problems[:3]}")
    return out


def criterion_9() -> list[str]:
    demo = excluded_middle_demo()
    return [] if demo["ok"] else [f"verdicts {demo['verdicts']}"]


def criterion_10() -> list[str]:
    problems = []
    rng = random.Random(10)
    family = enumerate_set_sentences()
    extra = [random_set_formula(rng, ["a"], 5, 3) for _ in range(200)]
    for k in range(4):
        M = build_vk(k)
        sets = naive_vk(k)
        if sorted(map(decode, M.carrier), key=repr) != sorted(sets, key=repr):
            problems.append(f"V_{k} carriers differ")
        for phi in family:
            if eval_classical(M, phi) != naive_eval(sets, phi, {}):
                problems.append(f"V_{k}: {to_text(phi)}")
        for phi in extra:
            for a in M.carrier:
                if eval_classical(M, phi, {"a": a}) != naive_eval(sets, phi, {"a": decode(a)}):
                    problems.append(f"V_{k}, a={a}: {to_text(phi)}")
    for frame in enumerate_trees(5):
        for v in frame.nodes:
            fast, slow = upsets(frame, v), naive_upsets(frame, v)
            if set(fast) != set(slow) or len(fast) != len(slow) or upset_count(frame, v) != len(slow):
                problems.append(f"upsets differ at {v} of {frame}")
    sizes = [len(f) for f in enumerate_trees(5)]
    ours = [sizes.count(n) for n in range(1, 6)]
    theirs = brute_force_tree_counts(5)
    if ours != theirs or ours != [1, 1, 2, 4, 9]:
        problems.append(f"tree counts {ours} vs brute force {theirs}")
    return problems


CRITERIA: list[tuple[int, str, Callable[[], list[str]], float | None]] = [
    (1, "upset counting with psi_n", criterion_1, 30),
    (2, "node identification by chi_v", criterion_2, None),
    (3, "faithful substitutions", criterion_3, None),
    (4, "propositional/set-theoretic correspondence", criterion_4, 60),
    (5, "de Jongh certificates", criterion_5, None),
    (6, "frame characterisations of LC, BD(n), T(2)", criterion_6, None),
    (7, "end-node agreement with classical satisfaction", criterion_7, None),
    (8, "truncated IZF axioms", criterion_8, 300),
    (9, "excluded-middle demo", criterion_9, None),
    (10, "oracle equivalences", criterion_10, None),
]


def run_criterion(number: int) -> CriterionResult:
    for n, name, fn, limit in CRITERIA:
        if n == number:
            start = time.perf_counter()
            notes: list[str] = []
            try:
                details = fn(notes) if "notes" in inspect.signature(fn).parameters else fn()
            except Exception as exc:  # a crash is a failure, reported like one
                details = [f"{type(exc).__name__}: {exc}"]
            seconds = time.perf_counter() - start
            passed = not details and (limit is None or seconds < limit)
            if details == [] and not passed:
                details = [f"took {seconds:.1f} s, over the {limit:.0f} s target"]
            return CriterionResult(n, name, passed, seconds, limit, details, notes)
    raise KeyError(number)


def run_all(report: Callable[[CriterionResult], None] | None = None) -> list[CriterionResult]:
    results = []
    for n, *_ in CRITERIA:
        result = run_criterion(n)
        if report is not None:
            report(result)
        results.append(result)
    return results


__all__ = ["CriterionResult", "CRITERIA", "run_criterion", "run_all", "sweep_models", "PIPELINE_CASES"]
