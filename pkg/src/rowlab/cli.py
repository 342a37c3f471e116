"""Command-line frontend.

One command per process: parse, check, infer, evaluate, erase, translate
between calculi, or verify metatheory properties on generated terms.

Exit codes: 0 success, 1 user error (parse, type, kind, rank, unknown
calculus, missing translation), 2 property failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .config import PRESETS, preset
from .dynamics import (
    DynamicsError,
    erase,
    reduction_trace,
    relations_for,
)
from .harness import run_property
from .infer import InferError, infer
from .parser import ParseError, parse_file_str
from .pretty import show_scheme, show_term, show_type
from .statics import StaticError, type_check
from .translate import TranslationError, translation_for

PROPERTIES = (
    "type-preservation",
    "simulation",
    "reflection",
    "erasure",
    "substitution",
    "subject-reduction",
    "preorder-correspondence",
)


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2))
    else:
        print(text)


def _load(args):
    delta, gamma, term = parse_file_str(_read(args.file))
    return preset(args.calculus), delta, gamma, term


def _cmd_check(args) -> int:
    cfg, delta, gamma, term = _load(args)
    if cfg.rank1:
        scheme = infer(cfg, delta, gamma, term)
        shown = show_scheme(scheme)
    else:
        shown = show_type(type_check(cfg, delta, gamma, term).type)
    _emit(
        args,
        {"calculus": cfg.name, "term": show_term(term), "type": shown},
        shown,
    )
    return 0


def _cmd_infer(args) -> int:
    cfg, delta, gamma, term = _load(args)
    shown = show_scheme(infer(cfg, delta, gamma, term))
    _emit(
        args,
        {"calculus": cfg.name, "term": show_term(term), "scheme": shown},
        shown,
    )
    return 0


def _cmd_eval(args) -> int:
    cfg, delta, gamma, term = _load(args)
    if cfg.rank1:
        infer(cfg, delta, gamma, term)
    else:
        type_check(cfg, delta, gamma, term)
    if args.casts:
        rels = relations_for(cfg, full_upcast=True)
        subject = term
    else:
        rels = relations_for(cfg)
        # covariant and full configurations evaluate under erasure semantics
        subject = erase(term) if cfg.subtyping in ("covariant", "full") else term
    result, steps = reduction_trace(subject, rels, args.fuel)
    _emit(
        args,
        {
            "calculus": cfg.name,
            "term": show_term(term),
            "result": show_term(result),
            "steps": [s.tag for s in steps],
        },
        "\n".join(f"  {s.tag}" for s in steps) + ("\n" if steps and args.trace else "")
        + show_term(result)
        if args.trace
        else show_term(result),
    )
    return 0


def _cmd_erase(args) -> int:
    _, _, term = parse_file_str(_read(args.file))
    out = erase(term)
    _emit(args, {"term": show_term(term), "erased": show_term(out)}, show_term(out))
    return 0


def _cmd_translate(args) -> int:
    t = translation_for(args.source, args.target)
    src_cfg = preset(args.source)
    delta, gamma, term = parse_file_str(_read(args.file))
    deriv = type_check(src_cfg, delta, gamma, term)
    out = t.term(deriv, src_cfg)
    payload = {
        "translation": t.tid,
        "from": args.source,
        "to": args.target,
        "term": show_term(out),
    }
    if t.type_map is not None:
        payload["type"] = show_type(t.type_map(deriv.type))
    _emit(args, payload, show_term(out))
    return 0


def _cmd_verify(args) -> int:
    seed = args.seed
    if seed is None:
        seed = int(os.environ.get("ROWLAB_SEED", "0"))
    reports = []
    for prop in args.properties:
        reports.append(
            run_property(
                prop,
                translation=args.translation,
                config=args.calculus,
                count=args.count,
                seed=seed,
                depth=args.depth,
                max_size=args.max_size,
            )
        )
    if args.json:
        print(json.dumps([r.to_json() for r in reports], indent=2))
    else:
        for r in reports:
            print(r.summary())
            for case_id, term, expected, got in r.failures[:10]:
                print(f"  {case_id}: {term}")
                print(f"    expected {expected}")
                print(f"    got      {got}")
    return 0 if all(r.passed for r in reports) else 2


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="rowlab",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = top.add_subparsers(dest="command", required=True)

    def with_common(p, calculus=True):
        if calculus:
            p.add_argument(
                "--calculus",
                required=True,
                metavar="ID",
                help=f"one of: {', '.join(sorted(PRESETS))}",
            )
        p.add_argument("--json", action="store_true", help="structured output")
        p.add_argument("file", help="source file (one term, optional -- env: headers)")

    p = sub.add_parser("check", help="type-check a term (infers in rank-1 calculi)")
    with_common(p)
    p.set_defaults(fn=_cmd_check)

    p = sub.add_parser("infer", help="print the principal type scheme")
    with_common(p)
    p.set_defaults(fn=_cmd_infer)

    p = sub.add_parser("eval", help="normalize a term")
    with_common(p)
    p.add_argument("--trace", action="store_true", help="print each step's rule")
    p.add_argument("--fuel", type=int, default=10_000, help="step budget")
    p.add_argument(
        "--casts",
        action="store_true",
        help="use structural cast rules instead of erasure semantics",
    )
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("erase", help="strip casts, annotations, and type operators")
    p.add_argument("--json", action="store_true", help="structured output")
    p.add_argument("file")
    p.set_defaults(fn=_cmd_erase)

    p = sub.add_parser("translate", help="translate a term between calculi")
    p.add_argument("--from", dest="source", required=True, metavar="ID")
    p.add_argument("--to", dest="target", required=True, metavar="ID")
    p.add_argument("--json", action="store_true", help="structured output")
    p.add_argument("file")
    p.set_defaults(fn=_cmd_translate)

    p = sub.add_parser("verify", help="run generated-term property checks")
    p.add_argument(
        "--property",
        dest="properties",
        action="append",
        required=True,
        choices=PROPERTIES,
        help="repeatable",
    )
    p.add_argument("--translation", metavar="TID")
    p.add_argument("--calculus", metavar="ID")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=None, help="default ROWLAB_SEED or 0")
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--max-size", type=int, default=8, dest="max_size")
    p.add_argument("--json", action="store_true", help="structured output")
    p.set_defaults(fn=_cmd_verify)

    return top


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (
        ParseError,
        StaticError,
        InferError,
        TranslationError,
        DynamicsError,
        KeyError,
        ValueError,
        OSError,
    ) as e:
        msg = e.args[0] if e.args else str(e)
        print(f"rowlab: error: {msg}", file=sys.stderr)
        return 1


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
