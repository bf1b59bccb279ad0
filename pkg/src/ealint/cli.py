"""Command-line interface: ``ealint infer | check | oracle``."""

from __future__ import annotations

import argparse
import json
import sys

from .constraints import all_constraints
from .decoration import decorate_assignment, decorate_term
from .lambda_core import NotSimplyTypable, ParseError, parse_simple_type, parse_term, principal_type
from .lp import SearchSpaceTooLarge, oracle_enumerate
from .pipeline import (InconsistentContext, VerificationFailure, check, infer,
                       infer_with_context)
from .pseudo_term import parse_eal_type, parse_pseudo_term

USAGE_ERROR = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _bindings(text: str | None, parse_type) -> list[tuple[str, object]]:
    """Parse ``"x:a->a, y:b"`` into a list of (name, type)."""
    if not text:
        return []
    out = []
    for item in text.split(","):
        if not item.strip():
            continue
        name, sep, ty = item.partition(":")
        if not sep or not name.strip():
            raise UsageError(f"expected name:type, got {item.strip()!r}")
        out.append((name.strip(), parse_type(ty.strip())))
    return out


def _source(args) -> str:
    if args.expr is not None:
        if args.file is not None:
            raise UsageError("give either a file or -e, not both")
        return args.expr
    if args.file is None:
        raise UsageError("no term given (use a file argument or -e)")
    try:
        with open(args.file, encoding="utf-8") as fh:
            lines = [ln for ln in fh.read().splitlines() if not ln.lstrip().startswith("#")]
    except OSError as exc:
        raise UsageError(str(exc)) from None
    return "\n".join(lines)


def _emit_result(res, emit: str) -> None:
    if emit == "json":
        print(json.dumps(res.to_json(), indent=2, ensure_ascii=False))
    elif emit in ("constraints", "lp"):
        if res.constraints is None:
            print(f"status: {res.status}\nreason: {res.message}")
        elif emit == "constraints":
            print(res.constraints.listing())
        else:
            print(res.constraints.to_lp())
    else:
        print(res.pretty())


def cmd_infer(args) -> int:
    m = parse_term(_source(args))
    extra = _bindings(args.context, parse_simple_type)
    res = infer_with_context(m, extra) if extra else infer(m)
    _emit_result(res, args.emit)
    return res.exit_code


def cmd_check(args) -> int:
    t = parse_pseudo_term(_source(args))
    gamma = dict(_bindings(args.types, parse_eal_type))
    res = check(t, gamma)
    _emit_result(res, args.emit)
    return res.exit_code


def cmd_oracle(args) -> int:
    m = parse_term(_source(args))
    try:
        theta, _ = principal_type(m)
    except NotSimplyTypable as exc:
        print(f"status: not-simply-typable\nreason: {exc}")
        return 2
    cs = all_constraints(decorate_term(m), decorate_assignment(theta))
    found = oracle_enumerate(cs, args.bound)
    if args.emit == "json":
        out = {"bound": args.bound, "witness": dict(found.point) if found else None}
        print(json.dumps(out, indent=2))
    elif found:
        print("witness: " + ", ".join(f"{p}={v}" for p, v in found.point.items()))
    else:
        print(f"no solution with all parameters in [-{args.bound}, {args.bound}]")
    return 0 if found else 1


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ealint", description="Sharing-free EAL type inference for lambda terms.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_source(sp):
        sp.add_argument("file", nargs="?", help="file holding the term")
        sp.add_argument("-e", "--expr", help="term given on the command line")

    inf = sub.add_parser("infer", help="infer an EAL typing for a lambda term")
    add_source(inf)
    inf.add_argument("--emit", choices=("pretty", "json", "constraints", "lp"), default="pretty")
    inf.add_argument("--context", help='extra hypotheses, e.g. "w:a->a, v:b"')
    inf.set_defaults(run=cmd_infer)

    chk = sub.add_parser("check", help="check a pseudo-term against EAL types")
    add_source(chk)
    chk.add_argument("--types", help='types of all variables, e.g. "x:!a, y:a -o a"')
    chk.add_argument("--emit", choices=("pretty", "json"), default="pretty")
    chk.set_defaults(run=cmd_check)

    orc = sub.add_parser("oracle", help="brute-force search for an integer solution")
    add_source(orc)
    orc.add_argument("--bound", type=int, default=3)
    orc.add_argument("--emit", choices=("pretty", "json"), default="pretty")
    orc.set_defaults(run=cmd_oracle)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except (UsageError, ParseError, InconsistentContext, SearchSpaceTooLarge, ValueError) as exc:
        print(f"ealint: error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except VerificationFailure as exc:
        print(f"ealint: internal error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
