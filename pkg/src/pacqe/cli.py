"""Command line interface: ``pacqe qe|decide|stats|count|check``."""
from __future__ import annotations

import argparse
import json
import sys

from . import faults
from .errors import CaseExplosion, IncompleteAssignment, OpenFormulaError, PacqeError
from .formula import free_vars, is_quantifier_free, params_report
from .oracle import CheckConfig, GenConfig, Inconclusive, Infinite, OracleConfig, count_line, differential_test
from .qe_ext import decide, eliminate_all, eliminate_single
from .syntax import parse_core, render

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"pacqe: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_ERROR)


def _read(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            src = fh.read()
    except OSError as exc:
        raise PacqeError(f"cannot read {path}: {exc.strerror}") from None
    return parse_core(src)


def _parse_assign(text: str | None) -> dict:
    out: dict = {}
    if not text:
        return out
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        name, sep, value = item.partition("=")
        if not sep:
            raise PacqeError(f"bad assignment item {item!r}; expected name=value")
        try:
            out[name.strip()] = int(value.strip())
        except ValueError:
            raise PacqeError(f"bad integer in assignment item {item!r}") from None
    return out


def cmd_qe(args) -> int:
    f = _read(args.file)
    if args.mode == "single":
        out = eliminate_single(f, max_cases=args.max_cases)
    else:
        out = eliminate_all(f, max_cases=args.max_cases)
    text = render(out) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.stats:
        print(json.dumps(params_report(out).to_json()), file=sys.stderr)
    return EXIT_OK


def cmd_decide(args) -> int:
    f = _read(args.file)
    print("true" if decide(f, max_cases=args.max_cases) else "false")
    return EXIT_OK


def cmd_stats(args) -> int:
    f = _read(args.file)
    if not is_quantifier_free(f):
        f = eliminate_all(f) if args.eliminate else f
    print(json.dumps(params_report(f).to_json()))
    return EXIT_OK


def cmd_count(args) -> int:
    f = _read(args.file)
    nu = _parse_assign(args.assign)
    missing = sorted(free_vars(f) - {args.var} - set(nu))
    if missing:
        raise IncompleteAssignment(missing[0])
    res = count_line(f, args.var, nu, OracleConfig(window=args.window))
    if isinstance(res, Inconclusive):
        print(f"inconclusive: {res.reason}")
        return EXIT_FAIL
    print("inf" if isinstance(res, Infinite) else res.n)
    return EXIT_OK


def cmd_check(args) -> int:
    gen = GenConfig(vars=args.vars, coef_bound=args.coef_bound, mod_bound=args.mod_bound, max_atoms=args.atoms,
                    kind=args.kind, depth=args.depth)
    cfg = CheckConfig(trials=args.trials, samples=args.samples, seed=args.seed, gen=gen,
                      oracle=OracleConfig(window=args.window, box=args.assign_box, samples=args.samples,
                                          seed=args.seed),
                      max_cases=args.max_cases, fail_fast=args.fail_fast)
    if args.inject_fault:
        with faults.inject(*args.inject_fault):
            report = differential_test(cfg)
        report["injected_faults"] = sorted(args.inject_fault)
    else:
        report = differential_test(cfg)
    print(json.dumps(report, sort_keys=False))
    return EXIT_OK if report["mismatches"] == 0 else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pacqe", description="Quantifier elimination for Presburger arithmetic with counting quantifiers.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    q = sub.add_parser("qe", help="eliminate all quantifiers and print the result")
    q.add_argument("file")
    q.add_argument("--out")
    q.add_argument("--mode", choices=("full", "single"), default="full")
    q.add_argument("--max-cases", type=int, default=None)
    q.add_argument("--stats", action="store_true", help="print the parameter report of the output to stderr")
    q.set_defaults(func=cmd_qe)

    d = sub.add_parser("decide", help="decide a sentence; prints true or false")
    d.add_argument("file")
    d.add_argument("--max-cases", type=int, default=None)
    d.set_defaults(func=cmd_decide)

    s = sub.add_parser("stats", help="print the parameter report of a formula as JSON")
    s.add_argument("file")
    s.add_argument("--eliminate", action="store_true", help="report on the eliminated formula instead")
    s.set_defaults(func=cmd_stats)

    c = sub.add_parser("count", help="count the values of one variable satisfying a formula")
    c.add_argument("file")
    c.add_argument("--var", required=True)
    c.add_argument("--assign", default="")
    c.add_argument("--window", type=int, default=256)
    c.set_defaults(func=cmd_count)

    k = sub.add_parser("check", help="differential test of the eliminator against the oracle")
    k.add_argument("--trials", type=int, default=100)
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--vars", type=int, default=3)
    k.add_argument("--coef-bound", type=int, default=5)
    k.add_argument("--mod-bound", type=int, default=4)
    k.add_argument("--assign-box", type=int, default=30)
    k.add_argument("--samples", type=int, default=200)
    k.add_argument("--atoms", type=int, default=4, help="maximum atoms per body")
    k.add_argument("--kind", choices=("exists", "count-geq", "count-eq", "count-geq-const", "count-mod"))
    k.add_argument("--depth", type=int, choices=(1, 2), default=2)
    k.add_argument("--window", type=int, default=256)
    k.add_argument("--max-cases", type=int, default=20000)
    k.add_argument("--inject-fault", action="append", choices=faults.ALL)
    k.add_argument("--fail-fast", action="store_true")
    k.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OpenFormulaError as exc:
        print(f"pacqe: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except CaseExplosion as exc:
        print(f"pacqe: case explosion guard: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (PacqeError, ValueError) as exc:
        print(f"pacqe: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
