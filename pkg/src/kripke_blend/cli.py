"""Command-line front end: ``kripke-blend <verb> ...``.

Exit codes: 0 when a verdict or result was produced, 1 when a check ran and
failed, 2 for usage errors and exhausted budgets.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import acceptance
from .blended import DEFAULT_ELEMENT_BUDGET, BlendError, construct, report
from .dejongh import (
    Certificate, DistinguisherError, FaithfulnessError, chi, counting_check, default_heights,
    dejongh_countermodel, excluded_middle_demo, faithful_substitution, psi,
)
from .formulas import (
    ParseError, depth, free_vars, is_propositional, letters, parse_prop, parse_set, quantifier_depth,
    to_text,
)
from .frames import Frame, FrameError, node_signature, signature_injective, upset_count
from .izf import AXIOMS, FAILED, izf_check, standard_battery
from .propositional import (
    DEFAULT_VALUATION_BUDGET, ResourceError, Valuation, axiom, logic_class, logic_member, parse_logic,
    truth_set, valid_in_frame,
)
from .universes import BudgetExceeded, UniverseError, build_vk, eval_classical, to_nested

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    rank: int = 2
    budget: int = DEFAULT_ELEMENT_BUDGET
    valuation_budget: int = DEFAULT_VALUATION_BUDGET
    samples: int = 100
    seed: int = 0
    format: str = "text"
    jobs: int = 1

    def __post_init__(self) -> None:
        for name in ("rank", "budget", "valuation_budget", "jobs"):
            if getattr(self, name) < 1:
                raise UsageError(f"--{name.replace('_', '-')} must be positive")
        if self.samples < 0:
            raise UsageError("--samples must be non-negative")

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> RunConfig:
        return cls(args.rank, args.budget, args.valuation_budget, args.samples, args.seed,
                   args.format, args.jobs)


def _default_budget() -> int:
    raw = os.environ.get("KRIPKE_BLEND_BUDGET")
    if raw is None:
        return DEFAULT_ELEMENT_BUDGET
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"KRIPKE_BLEND_BUDGET must be an integer, got {raw!r}") from None


# ---------------------------------------------------------------- argument helpers

def load_frame(spec: str) -> Frame:
    """A JSON file, inline JSON, or one of ``chain:N``, ``fork:K``, ``parents:-,0,0``."""
    if spec.startswith("chain:"):
        return Frame.chain(int(spec[6:]))
    if spec.startswith("fork:"):
        return Frame.fork(int(spec[5:]))
    if spec.startswith("parents:"):
        items = spec[8:].split(",")
        return Frame.from_parents([None if p.strip() in ("-", "") else int(p) for p in items])
    path = Path(spec)
    text = path.read_text() if path.exists() else spec
    try:
        return Frame.from_json(text)
    except json.JSONDecodeError:
        raise UsageError(f"--frame: {spec!r} is neither a file, JSON, nor a shorthand") from None


def _node(frame: Frame, text: str):
    for v in frame.nodes:
        if str(v) == text:
            return v
    raise UsageError(f"no node {text!r} in the frame")


def load_valuation(frame: Frame, spec: str) -> Valuation:
    path = Path(spec)
    data = json.loads(path.read_text() if path.exists() else spec)
    return Valuation(frame, {p: [_node(frame, str(v)) for v in nodes] for p, nodes in data.items()})


def _heights(frame: Frame, spec: str | None) -> dict:
    if spec is None:
        return default_heights(frame)
    ks = [int(k) for k in spec.split(",")]
    if len(ks) != len(frame.ends):
        raise UsageError(f"--universes lists {len(ks)} heights for {len(frame.ends)} end-nodes")
    return dict(zip(frame.ends, ks))


def _model(args, cfg: RunConfig):
    frame = load_frame(args.frame)
    return construct(frame, _heights(frame, args.universes), cfg.rank, cfg.budget)


def _nodes(frame: Frame, nodes) -> list:
    return [v for v in frame.nodes if v in nodes]


# ---------------------------------------------------------------- verbs

def cmd_parse(args, cfg):
    phi = parse_set(args.formula) if args.set else parse_prop(args.formula)
    out = {"formula": to_text(phi), "depth": depth(phi)}
    if is_propositional(phi):
        out["letters"] = sorted(letters(phi))
    else:
        out["free_variables"] = sorted(free_vars(phi))
        out["quantifier_depth"] = quantifier_depth(phi)
    return out, EXIT_OK


def cmd_frame(args, cfg):
    frame = load_frame(args.frame)
    return {
        "frame": frame.to_json(),
        "depth": frame.depth,
        "ends": list(frame.ends),
        "upset_counts": {str(v): upset_count(frame, v) for v in frame.nodes},
        "signatures": {str(v): [node_signature(frame, v)[0], sorted(node_signature(frame, v)[1])]
                       for v in frame.nodes},
        "signature_injective": signature_injective(frame),
        "canonical_code": frame.canonical_code,
    }, EXIT_OK


def cmd_force(args, cfg):
    frame = load_frame(args.frame)
    V = load_valuation(frame, args.valuation)
    phi = parse_prop(args.formula)
    nodes = truth_set(frame, V, phi)
    out = {"formula": to_text(phi), "truth_set": _nodes(frame, nodes)}
    if args.node is not None:
        out["forced"] = _node(frame, args.node) in nodes
    return out, EXIT_OK


def cmd_valid(args, cfg):
    frame = load_frame(args.frame)
    phi = parse_prop(args.formula)
    res = valid_in_frame(frame, phi, cfg.valuation_budget)
    if res is True:
        return {"verdict": "valid", "formula": to_text(phi)}, EXIT_OK
    return {"verdict": "countermodel", "formula": to_text(phi), "countermodel": res.to_json()}, EXIT_OK


def cmd_axiom(args, cfg):
    name, n = logic_class_name(args.logic)
    return {"logic": args.logic, "axiom": to_text(axiom(name, n))}, EXIT_OK


def logic_class_name(spec: str):
    name, n = parse_logic(spec)
    if name not in ("LC", "T", "BD"):
        raise UsageError(f"no single axiom for {spec!r}; use lc, t(n) or bd(n)")
    return name, n


def cmd_logic_member(args, cfg):
    phi = parse_prop(args.formula)
    kind, n = logic_class(args.logic)
    verdict = logic_member(kind, phi, args.bound, n, cfg.valuation_budget, cfg.jobs)
    return {"logic": args.logic, "formula": to_text(phi), "bound": args.bound, **verdict.to_json()}, EXIT_OK


def cmd_universe(args, cfg):
    M = build_vk(args.k, max(cfg.budget, 1))
    out = {"k": args.k, "size": len(M), "height": M.height}
    if args.list:
        out["elements"] = [to_nested(a) for a in M.carrier]
    if args.formula is not None:
        phi = parse_set(args.formula)
        out["formula"] = to_text(phi)
        out["satisfied"] = eval_classical(M, phi)
    return out, EXIT_OK


def cmd_blend(args, cfg):
    B = _model(args, cfg)
    out = report(B)
    if args.formula is not None:
        phi = parse_set(args.formula)
        out["formula"] = to_text(phi)
        out["truth_set"] = _nodes(B.frame, B.truth_set(phi))
    code = EXIT_OK if not out["transition_violations"] and not out["condition_violations"] else EXIT_FAILED
    return out, code


def cmd_izf_check(args, cfg):
    B = _model(args, cfg)
    if args.axiom == "all":
        verdicts = standard_battery(B)
    else:
        verdicts = [izf_check(B, args.axiom, args.margin, args.formula)]
    out = {"rank": B.R, "verdicts": [v.to_json() for v in verdicts]}
    return out, EXIT_FAILED if any(v.status == FAILED for v in verdicts) else EXIT_OK


def cmd_psi(args, cfg):
    phi = psi(args.n)
    out = {"n": args.n, "psi": to_text(phi)}
    if args.frame is not None:
        B = _model(args, cfg)
        out["truth_set"] = _nodes(B.frame, B.truth_set(phi))
        out["upset_counts"] = {str(v): upset_count(B.frame, v) for v in B.frame.nodes}
        if args.check:
            rep = counting_check(B)
            out["counting_check"] = rep.to_json()
            return out, EXIT_OK if rep.ok else EXIT_FAILED
    return out, EXIT_OK


def cmd_chi(args, cfg):
    B = _model(args, cfg)
    nodes = [_node(B.frame, args.node)] if args.node is not None else list(B.frame.nodes)
    out, bad = {}, False
    for v in nodes:
        phi = chi(B, v)
        ts = _nodes(B.frame, B.truth_set(phi))
        cone = list(B.frame.up(v))
        bad |= ts != cone
        out[str(v)] = {"chi": to_text(phi), "truth_set": ts, "cone": cone}
    return {"heights": {str(e): B.height(e) for e in B.frame.ends}, "nodes": out}, \
        EXIT_FAILED if bad else EXIT_OK


def cmd_faithful(args, cfg):
    B = _model(args, cfg)
    V = load_valuation(B.frame, args.valuation)
    sigma = faithful_substitution(B, V)
    return {
        "valuation": V.to_json(),
        "sigma": sigma.to_json(),
        "truth_sets": {p: _nodes(B.frame, B.truth_set(sigma[p])) for p in sorted(sigma)},
    }, EXIT_OK


def cmd_dejongh(args, cfg):
    phi = parse_prop(args.formula)
    res = dejongh_countermodel(args.logic, phi, args.bound, cfg.rank, cfg.budget,
                               cfg.valuation_budget, cfg.jobs)
    code = EXIT_OK if not isinstance(res, Certificate) or res.ok else EXIT_FAILED
    return res.to_json(), code


def cmd_em_demo(args, cfg):
    out = excluded_middle_demo(rank=cfg.rank)
    return out, EXIT_OK if out["ok"] else EXIT_FAILED


def cmd_selftest(args, cfg):
    wanted = args.only or [n for n, *_ in acceptance.CRITERIA]
    results = []
    for n in wanted:
        r = acceptance.run_criterion(n)
        if cfg.format == "text":
            print(r.line(), flush=True)
            for d in r.details[:5] + r.notes:
                print(f"        {d}", flush=True)
        results.append(r)
    ok = all(r.passed for r in results)
    if cfg.format == "text":
        print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed")
        return None, EXIT_OK if ok else EXIT_FAILED
    return {"passed": ok, "criteria": [r.to_json() for r in results]}, EXIT_OK if ok else EXIT_FAILED


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--rank", type=int, default=2, help="rank cutoff R for blended models")
    common.add_argument("--budget", type=int, default=None,
                        help="element budget per domain stratum (default 10^6 or $KRIPKE_BLEND_BUDGET)")
    common.add_argument("--valuation-budget", type=int, default=DEFAULT_VALUATION_BUDGET)
    common.add_argument("--samples", type=int, default=100)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for frame sweeps")

    parser = argparse.ArgumentParser(prog="kripke-blend", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True, metavar="VERB")

    def verb(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(fn=fn)
        return p

    def model_args(p, frame_required=True):
        p.add_argument("--frame", required=frame_required,
                       help="JSON file, inline JSON, or chain:N / fork:K / parents:-,0,0")
        p.add_argument("--universes", help="comma-separated heights k_e of the end universes V_k")

    p = verb("parse", cmd_parse, "parse and normalise a formula")
    p.add_argument("--formula", required=True)
    p.add_argument("--set", action="store_true", help="parse in the language of set theory")

    p = verb("frame", cmd_frame, "describe a frame: ends, depth, upset counts")
    p.add_argument("--frame", required=True)

    p = verb("force", cmd_force, "truth set of a propositional formula")
    p.add_argument("--frame", required=True)
    p.add_argument("--valuation", required=True, help='JSON such as {"p": [1]} or a file')
    p.add_argument("--formula", required=True)
    p.add_argument("--node")

    p = verb("valid", cmd_valid, "validity of a formula on a frame, or a countermodel")
    p.add_argument("--frame", required=True)
    p.add_argument("--formula", required=True)

    p = verb("axiom", cmd_axiom, "print the axiom of lc, t(n) or bd(n)")
    p.add_argument("--logic", required=True)

    p = verb("logic-member", cmd_logic_member, "sweep a logic's frame class up to a bound")
    p.add_argument("--logic", required=True, help="ipc, lc, t(n) or bd(n)")
    p.add_argument("--formula", required=True)
    p.add_argument("--bound", type=int, default=4)

    p = verb("universe", cmd_universe, "the level V_k")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--list", action="store_true", help="list the elements as nested arrays")
    p.add_argument("--formula", help="a sentence to evaluate classically")

    p = verb("blend", cmd_blend, "build a blended model and report its domains")
    model_args(p)
    p.add_argument("--formula", help="a sentence whose truth set to report")

    p = verb("izf-check", cmd_izf_check, "truncated IZF axiom checks")
    model_args(p)
    p.add_argument("--axiom", required=True, choices=AXIOMS + ("all",))
    p.add_argument("--margin", type=int)
    p.add_argument("--formula", help="the formula of a scheme instance")

    p = verb("psi", cmd_psi, "the upset-counting sentence psi_n")
    p.add_argument("--n", type=int, required=True)
    model_args(p, frame_required=False)
    p.add_argument("--check", action="store_true", help="also run the counting check on the model")

    p = verb("chi", cmd_chi, "node-identifying sentences and their truth sets")
    model_args(p)
    p.add_argument("--node")

    p = verb("faithful", cmd_faithful, "faithful substitution for a valuation")
    model_args(p)
    p.add_argument("--valuation", required=True)

    p = verb("dejongh", cmd_dejongh, "countermodel certificate for a non-theorem of a logic")
    p.add_argument("--logic", required=True)
    p.add_argument("--formula", required=True)
    p.add_argument("--bound", type=int, default=4)

    verb("em-demo", cmd_em_demo, "a fork on which excluded middle fails for a sentence")

    p = verb("selftest", cmd_selftest, "run the acceptance suite")
    p.add_argument("--only", type=int, nargs="*", help="criterion numbers to run")
    return parser


def _render(out, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(out, indent=2, sort_keys=True)
    return _text(out)


def _text(out, indent: int = 0) -> str:
    pad = "  " * indent
    lines = []
    if isinstance(out, dict):
        for k, v in out.items():
            if isinstance(v, (dict, list)) and v and not _flat(v):
                lines.append(f"{pad}{k}:")
                lines.append(_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {json.dumps(v) if not isinstance(v, str) else v}")
    elif isinstance(out, list):
        for v in out:
            if isinstance(v, (dict, list)) and not _flat(v):
                lines.append(f"{pad}-")
                lines.append(_text(v, indent + 1))
            else:
                lines.append(f"{pad}- {json.dumps(v) if not isinstance(v, str) else v}")
    else:
        lines.append(f"{pad}{out}")
    return "\n".join(lines)


def _flat(v) -> bool:
    items = v.values() if isinstance(v, dict) else v
    return all(not isinstance(x, (dict, list)) or not x for x in items) and len(json.dumps(v)) < 80


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.budget is None:
            args.budget = _default_budget()
        cfg = RunConfig.from_args(args)
        out, code = args.fn(args, cfg)
    except (ResourceError, BudgetExceeded) as exc:
        print(f"kripke-blend: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DistinguisherError as exc:
        print(f"kripke-blend: end-node heights must be distinct: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FaithfulnessError as exc:
        print(f"kripke-blend: internal check failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except (UsageError, ParseError, FrameError, BlendError, UniverseError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"kripke-blend: error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    if out is not None:
        print(_render(out, cfg.format))
    return code


if __name__ == "__main__":
    sys.exit(main())
