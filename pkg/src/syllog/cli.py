"""Command-line interface.

Exit codes: 0 satisfiable or accepted, 1 unsatisfiable or rejected,
2 capped (no definite answer), 3 usage, parse or input error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__

EXIT_OK, EXIT_NO, EXIT_CAPPED, EXIT_USAGE = 0, 1, 2, 3
_STATUS_EXIT = {"SAT": EXIT_OK, "UNSAT": EXIT_NO, "CAPPED": EXIT_CAPPED}


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# helpers


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"{path}: {e.strerror}") from None


def _formula(path: str):
    from .syntax import parse

    return parse(_read(path))


def _var(text: str, sort: int):
    from .syntax import ModelError, parse_var_name

    try:
        v = parse_var_name(text)
    except ModelError as e:
        raise UsageError(str(e)) from None
    if v.sort != sort:
        raise UsageError(f"{text} must be a sort-{sort} variable")
    return v


def _designated(args) -> dict:
    return {
        "universe": _var(args.universe_var, 1),
        "b2": _var(args.b2_var, 2),
        "b3": _var(args.b3_var, 3),
    }


def _budget(args):
    return None if args.budget == 0 else args.budget


def _emit(args, doc: dict, text: str) -> None:
    if args.json:
        print(json.dumps(doc, sort_keys=True))
    else:
        print(text, end="" if text.endswith("\n") else "\n")


def _verdict_text(verdict) -> str:
    from .syntax import print_model

    out = verdict.status + "\n"
    if verdict.model is not None:
        out += print_model(verdict.model)
    return out


# --------------------------------------------------------------------------
# subcommands; each returns an exit code


def cmd_check(args) -> int:
    from .fragment import in_h_fragment, is_4lqsr

    f = _formula(args.file)
    result = in_h_fragment(f, args.h, **_designated(args)) if args.h else is_4lqsr(f)
    doc = {"ok": result.ok, "diagnostics": [d.to_json() for d in result.diagnostics]}
    for d in result.diagnostics:
        print(f"{d.rule} at {list(d.path)}: {d.message}", file=sys.stderr)
    _emit(args, doc, "accepted" if result.ok else "rejected")
    return EXIT_OK if result.ok else EXIT_NO


def cmd_normalize(args) -> int:
    from .normalize import DnfStats, FragmentViolation, normalize
    from .syntax import to_text

    f = _formula(args.file)
    stats = DnfStats()
    out = []
    try:
        for i, nc in enumerate(normalize(f, stats)):
            if args.limit and i >= args.limit:
                break
            out.append(nc)
    except FragmentViolation as e:
        for d in e.result.diagnostics:
            print(f"{d.rule} at {list(d.path)}: {d.message}", file=sys.stderr)
        _emit(args, {"ok": False, "diagnostics": [d.to_json() for d in e.result.diagnostics]}, "rejected")
        return EXIT_NO
    doc = {
        "ok": True,
        "expansions": stats.expansions,
        "conjunctions": [
            {"formula": to_text(nc.formula()), "fresh": [str(v) for v in nc.fresh_vars]} for nc in out
        ],
    }
    _emit(args, doc, "\n".join(to_text(nc.formula()) for nc in out))
    return EXIT_OK


def cmd_solve(args) -> int:
    from .core import free_vars
    from .solver import oracle_sat

    f = _formula(args.file)
    high = any(v.sort >= 2 for v in free_vars(f))
    if args.max_domain >= 4 and high and not args.i_know_this_is_huge:
        raise UsageError(
            "searching domains of 4 or more elements with sort-2/3 variables enumerates "
            "families of 2^16 sets; pass --i-know-this-is-huge to proceed"
        )
    verdict = oracle_sat(
        f,
        args.max_domain,
        method=args.method,
        budget=_budget(args),
        member_cap=args.member_cap,
    )
    _emit(args, verdict.to_json(), _verdict_text(verdict))
    return _STATUS_EXIT[verdict.status]


def cmd_solve_h(args) -> int:
    from .fragment import NotInHFragment
    from .solver import solve_h

    f = _formula(args.file)
    try:
        verdict = solve_h(
            f,
            args.h,
            max_domain=args.max_domain,
            budget=_budget(args),
            **_designated(args),
        )
    except NotInHFragment as e:
        for d in e.diagnostics:
            print(f"{d.rule} at {list(d.path)}: {d.message}", file=sys.stderr)
        return EXIT_USAGE
    _emit(args, verdict.to_json(), _verdict_text(verdict))
    return _STATUS_EXIT[verdict.status]


def _emit_schema(args):
    from .builders import SCHEMA_NAMES, pow_lt_h, pow_star, schema, unordered_product
    from .builders import BoolOpKind, RelationProperty, boolean_op, inverse_relation, relation_property
    from .core import conj
    from .fragment import shell

    name = args.schema.lower()
    vs = args.vars
    if name == "shell":
        return conj(*shell(args.h or 2, **_designated(args)))
    if name == "random-h":
        from .corpus import random_h_formula

        return random_h_formula(random.Random(args.seed), args.h or 2)
    if name == "pow-lt-h":
        X2 = _var(vs[0], 2) if vs else _var("X^2", 2)
        X1 = _var(vs[1], 1) if len(vs) > 1 else _var("X^1", 1)
        return pow_lt_h(X2, X1, args.h or 2)
    if name in ("unordered-product", "pow-star"):
        if len(vs) < 2:
            raise UsageError(f"{name} needs the result variable and at least one argument")
        build = unordered_product if name == "unordered-product" else pow_star
        return build(_var(vs[0], 2), [_var(v, 1) for v in vs[1:]])
    if name not in SCHEMA_NAMES:
        known = ", ".join(SCHEMA_NAMES + ["pow-lt-h", "unordered-product", "pow-star", "shell", "random-h", "random-modal"])
        raise UsageError(f"unknown schema {args.schema!r}; known: {known}")
    if not vs:
        return schema(name)
    rels = [_var(v, 3) for v in vs]
    if name == "inverse":
        return inverse_relation(*rels[:2])
    if name in {k.value for k in RelationProperty}:
        return relation_property(name, rels[0])
    op = BoolOpKind(name)
    if op is BoolOpKind.Complement:
        return boolean_op(op, rels[0], rels[1])
    if op is BoolOpKind.Inclusion:
        return boolean_op(op, None, rels[0], rels[1])
    return boolean_op(op, rels[0], rels[1], rels[2])


def cmd_emit(args) -> int:
    from .syntax import to_text

    if args.schema.lower() == "random-modal":
        from .modal import enumerate_modal, modal_to_text

        pool = list(enumerate_modal(args.size, max_depth=2))
        text = modal_to_text(random.Random(args.seed).choice(pool))
        _emit(args, {"formula": text}, text)
        return EXIT_OK
    try:
        f = _emit_schema(args)
    except (ValueError, IndexError) as e:
        raise UsageError(str(e)) from None
    text = to_text(f)
    _emit(args, {"formula": text}, text)
    return EXIT_OK


def _modal(path: str):
    from .modal import parse_modal

    return parse_modal(_read(path))


def cmd_translate_k45(args) -> int:
    from .modal import translate_k45
    from .syntax import to_text

    tr = translate_k45(_modal(args.file), full_relation=args.full_relation, **_designated(args))
    doc = {
        "formula": to_text(tr.formula),
        "phi_var": str(tr.phi_var),
        "relation_var": str(tr.relation_var),
        "letter_vars": {p: str(v) for p, v in sorted(tr.letter_vars.items())},
        "conjuncts": [to_text(c) for c in tr.conjuncts()],
    }
    _emit(args, doc, to_text(tr.formula))
    return EXIT_OK


def _solve_k45_file(path: str, budget, full_relation: bool) -> dict:
    from .modal import decide_k45

    return decide_k45(_modal(path), budget=budget, full_relation=full_relation).to_json()


def cmd_solve_k45(args) -> int:
    paths = args.files
    budget = _budget(args)
    if args.jobs > 1 and len(paths) > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            docs = list(pool.map(_solve_k45_file, paths, [budget] * len(paths), [args.full_relation] * len(paths)))
    else:
        docs = [_solve_k45_file(p, budget, args.full_relation) for p in paths]
    code = EXIT_OK
    for path, doc in zip(paths, docs):
        if len(paths) > 1 and not args.json:
            print(f"{path}: ", end="")
        if args.json:
            print(json.dumps(doc if len(paths) == 1 else {"file": path, **doc}, sort_keys=True))
        else:
            print(doc["status"])
            if "kripke" in doc.get("stats", {}):
                print(json.dumps({"kripke": doc["stats"]["kripke"], "world": doc["stats"]["world"]}))
        code = max(code, _STATUS_EXIT[doc["status"]])
    return code


def cmd_artifacts(args) -> int:
    from .core import Interpretation, evaluate
    from .grounding import find_model
    from .normalize import normalize
    from .smallmodel import build_universe, compute_bound, relativize, verify_properties_abc
    from .syntax import ModelError, parse_model, to_text

    f = _formula(args.file)
    try:
        model = parse_model(_read(args.model))
    except ModelError as e:
        raise UsageError(f"{args.model}: {e}") from None
    for nc in normalize(f):
        # pick values for the fresh variables that make this conjunction true
        ext, _ = find_model(list(nc.literals), len(model.domain), fixed=model.assign, budget=_budget(args))
        if ext is None:
            continue
        ext = Interpretation(model.domain, ext.assign, model.labels)
        arts = build_universe(ext, nc)
        small = relativize(ext, arts)
        holds = evaluate(small, nc.formula(), family_cap=None)
        abc = verify_properties_abc(ext, arts)
        budget = compute_bound(nc)
        doc = {
            "conjunction": to_text(nc.formula()),
            "artifacts": arts.to_json(),
            "labels": {str(e): model.label(e) for e in model.domain},
            "bound": budget.to_json(),
            "relativized_holds": holds,
            "properties": {"ok": abc.ok, "diagnostics": [d.to_json() for d in abc.diagnostics]},
        }
        if args.emit_artifacts:
            Path(args.emit_artifacts).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        text = (
            f"D* = {sorted(arts.Dstar)} (|D*| = {len(arts.Dstar)}, bound {budget.bound}, "
            f"construction bound {budget.construction_bound})\n"
            f"relativized model satisfies the conjunction: {holds}"
        )
        _emit(args, doc, text)
        return EXIT_OK if holds else EXIT_NO
    print("the model satisfies no normalized conjunction of the formula", file=sys.stderr)
    _emit(args, {"ok": False}, "no conjunction satisfied")
    return EXIT_NO


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="syllog", description="Satisfiability tools for stratified set-theoretic formulae.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output on stdout")
    common.add_argument("--budget", type=int, default=2_000_000, help="grounding work limit (0 = unlimited)")
    common.add_argument("--universe-var", default="U^1", help="designated universe variable")
    common.add_argument("--b2-var", default="B^2", help="designated sort-2 bounding variable")
    common.add_argument("--b3-var", default="B^3", help="designated sort-3 bounding variable")

    c = sub.add_parser("check", parents=[common], help="fragment membership")
    c.add_argument("file")
    c.add_argument("--h", type=int, default=None, help="check the bounded fragment for this h")
    c.set_defaults(run=cmd_check)

    c = sub.add_parser("normalize", parents=[common], help="normalized conjunctions")
    c.add_argument("file")
    c.add_argument("--limit", type=int, default=0, help="stop after this many conjunctions")
    c.set_defaults(run=cmd_normalize)

    c = sub.add_parser("solve", parents=[common], help="bounded model search on any formula")
    c.add_argument("file")
    c.add_argument("--max-domain", type=int, default=3)
    c.add_argument("--method", choices=("ground", "enumerate"), default="ground")
    c.add_argument("--member-cap", type=int, default=None, help="enumerate: members per sort-2/3 value")
    c.add_argument("--i-know-this-is-huge", action="store_true", help="allow searches over 4+ elements with sort-2/3 variables")
    c.set_defaults(run=cmd_solve)

    c = sub.add_parser("solve-h", parents=[common], help="decide a bounded-fragment formula")
    c.add_argument("file")
    c.add_argument("--h", type=int, default=2)
    c.add_argument("--max-domain", type=int, default=4)
    c.set_defaults(run=cmd_solve_h)

    c = sub.add_parser("emit", parents=[common], help="print a builder schema")
    c.add_argument("schema", help="schema name, e.g. transitive, union, inverse, pow-lt-h, shell, random-h")
    c.add_argument("vars", nargs="*", help="variables to use instead of the defaults")
    c.add_argument("--h", type=int, default=None)
    c.add_argument("--seed", type=int, default=0, help="seed for random-h / random-modal")
    c.add_argument("--size", type=int, default=7, help="random-modal: maximal formula size")
    c.set_defaults(run=cmd_emit)

    for name, run, many in (("translate-k45", cmd_translate_k45, False), ("solve-k45", cmd_solve_k45, True)):
        c = sub.add_parser(name, parents=[common], help="K45 translation" if not many else "decide K45 formulae")
        if many:
            c.add_argument("files", nargs="+")
            c.add_argument("--jobs", type=int, default=1, help="worker processes for several files")
        else:
            c.add_argument("file")
        c.add_argument("--full-relation", action="store_true", help="use the biconditional relation axiom")
        c.set_defaults(run=run)

    c = sub.add_parser("artifacts", parents=[common], help="small-universe construction for a model")
    c.add_argument("file")
    c.add_argument("model", help="model JSON")
    c.add_argument("--emit-artifacts", metavar="PATH", default=None, help="write the artifacts JSON here")
    c.set_defaults(run=cmd_artifacts)
    return p


def run(argv: list[str] | None = None) -> int:
    from .core import FormulaError
    from .fragment import UnsupportedFragmentError
    from .normalize import FragmentViolation
    from .syntax import ParseError

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    try:
        return args.run(args)
    except ParseError as e:
        for d in e.diagnostics:
            print(d.render(), file=sys.stderr)
        return EXIT_USAGE
    except FragmentViolation as e:
        print(f"fragment violation: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, FormulaError, UnsupportedFragmentError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
