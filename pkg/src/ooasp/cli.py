"""Command-line front end: ``ooasp validate|complete|check-model|reconcile|export``.

Exit codes: 0 success, 1 violations found (validate), 2 unreadable or
inconsistent input, 20 nothing found within the bounds, 21 the partial
input has violations no addition of facts can repair, 64 bad usage.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from .completion import (
    INPUT_INVALID,
    UNSAT_WITHIN_BOUNDS,
    CompletionConfig,
    CompletionError,
    check_model_consistency,
    complete,
)
from .constraints import ConstraintSyntaxError, read_constraint_file
from .ddl import DDLError, Workspace, load_files, serialize_facts
from .dot import changeset_dot, instantiation_dot
from .model import IllFormedModel, Instantiation, UnknownIdentifier
from .reconciliation import CostTable, CostTableError, reconcile
from .validation import COMPLETE, MODES, ModelMismatch, report_json, validate

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_INPUT = 2
EXIT_UNSAT = 20
EXIT_INPUT_INVALID = 21
EXIT_USAGE = 64

_INPUT_ERRORS = (DDLError, ConstraintSyntaxError, IllFormedModel, UnknownIdentifier,
                 ModelMismatch, CompletionError, CostTableError, OSError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _class_count(text: str) -> tuple[str, int]:
    cls, sep, n = text.rpartition("=")
    if not sep or not cls:
        raise argparse.ArgumentTypeError(f"expected CLASS=N, got {text!r}")
    try:
        value = int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer count in {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"count must be non-negative in {text!r}")
    return cls, value


def _int_range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("..")
    try:
        if not sep:
            raise ValueError
        bounds = int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO..HI, got {text!r}") from None
    if bounds[0] > bounds[1]:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return bounds


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ooasp", description="Validate, complete and reconcile OOASP-DDL instantiations.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, inst=True):
        sp.add_argument("-m", "--model", action="append", required=True, metavar="FILE",
                        help="model fact file (repeatable)")
        if inst:
            sp.add_argument("-i", "--inst", required=True, metavar="FILE",
                            help="instantiation fact file")
            sp.add_argument("--inst-id", help="instantiation to use when the file holds several")
        sp.add_argument("-c", "--constraints", action="append", default=[], metavar="FILE",
                        help="constraint rule file (repeatable)")

    def bounds(sp):
        sp.add_argument("--max-new", action="append", type=_class_count, default=[],
                        metavar="CLASS=N", help="create at most N new objects of CLASS")
        sp.add_argument("--min-new", action="append", type=_class_count, default=[],
                        metavar="CLASS=N", help="create at least N new objects of CLASS")
        sp.add_argument("--int-domain", type=_int_range, metavar="LO..HI",
                        help="domain for integer attributes without declared bounds")
        sp.add_argument("--id-base", type=int, metavar="N", help="first id for new objects")

    v = sub.add_parser("validate", help="list every violation of an instantiation")
    common(v)
    v.add_argument("--mode", choices=MODES, default=COMPLETE)
    v.add_argument("-o", "--output", metavar="FILE", help="violation facts (default: stdout)")
    v.add_argument("--json", metavar="FILE", help="write a JSON report")

    c = sub.add_parser("complete", help="extend an instantiation into a valid one")
    common(c)
    bounds(c)
    c.add_argument("--solutions", type=int, default=1, metavar="K")
    c.add_argument("-o", "--output", metavar="FILE", help="solution facts (default: stdout)")
    c.add_argument("--dot", metavar="FILE", help="write solutions as DOT graphs")

    k = sub.add_parser("check-model", help="search for a witness instantiation of a model")
    common(k, inst=False)
    bounds(k)
    k.add_argument("--model-id", help="model to check when the files declare several")
    k.add_argument("-o", "--output", metavar="FILE", help="witness facts (default: stdout)")
    k.add_argument("--dot", metavar="FILE")

    r = sub.add_parser("reconcile", help="cheapest repair of a legacy instantiation")
    r.add_argument("--old-inst", required=True, metavar="FILE", help="legacy instantiation")
    r.add_argument("--old-model", action="append", default=[], metavar="FILE",
                   help="model files of the legacy instantiation (optional)")
    r.add_argument("--new-model", required=True, metavar="FILE", help="target model")
    r.add_argument("--inst-id")
    r.add_argument("--model-id", help="target model when the file declares several")
    r.add_argument("-c", "--constraints", action="append", default=[], metavar="FILE")
    r.add_argument("--costs", metavar="FILE", help="cost table, lines 'action kind cost'")
    bounds(r)
    r.add_argument("--no-tie-break", action="store_true",
                   help="return the first optimum instead of the canonical one")
    r.add_argument("-o", "--output", metavar="FILE", help="result facts (default: stdout)")
    r.add_argument("--json", metavar="FILE", help="write the change set as JSON")
    r.add_argument("--dot", metavar="FILE", help="write a DOT diff graph")

    e = sub.add_parser("export", help="render an instantiation as a DOT graph")
    e.add_argument("-m", "--model", action="append", default=[], metavar="FILE")
    e.add_argument("-i", "--inst", required=True, metavar="FILE")
    e.add_argument("--inst-id")
    e.add_argument("--dot", metavar="FILE", help="output file (default: stdout)")
    return p


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _numbered(path: str, k: int, total: int) -> str:
    if total == 1:
        return path
    p = Path(path)
    return str(p.with_name(f"{p.stem}-{k}{p.suffix}"))


def _rules(paths: list[str]) -> list:
    rules = []
    for p in paths:
        rules += read_constraint_file(p)
    return rules


def _config(args, max_solutions: int = 1) -> CompletionConfig:
    try:
        return CompletionConfig(max_new_per_class=dict(args.max_new),
                                min_new_per_class=dict(args.min_new),
                                default_int_domain=args.int_domain,
                                id_base=args.id_base, max_solutions=max_solutions)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _load_instance(model_files, inst_file, inst_id) -> tuple[Workspace, Instantiation]:
    ws = load_files(*model_files, inst_file)
    inst = ws.instantiation(inst_id)
    ws.model(inst.model_id)
    return ws, inst


def cmd_validate(args) -> int:
    ws, inst = _load_instance(args.model, args.inst, args.inst_id)
    report = validate(ws.model(inst.model_id), inst, _rules(args.constraints), args.mode)
    _write(args.output, serialize_facts(report.sorted()))
    if args.json:
        _write(args.json, json.dumps(report_json(report, inst, ws.locations), indent=2) + "\n")
    for note in report.notes:
        print(f"note: {note}", file=sys.stderr)
    return EXIT_OK if report.valid else EXIT_VIOLATIONS


def _emit_solutions(args, solutions: list[Instantiation], existing: set[int]) -> None:
    if args.output is None:
        for n, s in enumerate(solutions, 1):
            if len(solutions) > 1:
                sys.stdout.write(f"% solution {n}\n")
            sys.stdout.write(serialize_facts(s))
    else:
        for n, s in enumerate(solutions, 1):
            _write(_numbered(args.output, n, len(solutions)), serialize_facts(s))
    if args.dot:
        for n, s in enumerate(solutions, 1):
            _write(_numbered(args.dot, n, len(solutions)), instantiation_dot(s, existing))


def _status_exit(status: str, report=None) -> int:
    if status == INPUT_INVALID:
        print("input instantiation has violations that adding facts cannot repair:", file=sys.stderr)
        for v in report.sorted() if report else ():
            print(f"  {v}", file=sys.stderr)
        return EXIT_INPUT_INVALID
    if status == UNSAT_WITHIN_BOUNDS:
        print("no solution within the given bounds", file=sys.stderr)
        return EXIT_UNSAT
    return EXIT_OK


def cmd_complete(args) -> int:
    if args.solutions < 1:
        raise UsageError("--solutions must be at least 1")
    ws, inst = _load_instance(args.model, args.inst, args.inst_id)
    res = complete(ws.model(inst.model_id), inst, _rules(args.constraints),
                   _config(args, args.solutions))
    if res.sat:
        _emit_solutions(args, res.solutions, {o for o, _ in inst.isa})
    return _status_exit(res.status, res.report)


def cmd_check_model(args) -> int:
    ws = load_files(*args.model)
    res = check_model_consistency(ws.model(args.model_id), _rules(args.constraints), _config(args))
    if res.consistent:
        _emit_solutions(args, [res.witness], set())
        print("consistent", file=sys.stderr)
        return EXIT_OK
    return _status_exit(res.completion.status, res.completion.report)


def cmd_reconcile(args) -> int:
    old = load_files(*args.old_model, args.old_inst)
    legacy = old.instantiation(args.inst_id)
    target = load_files(args.new_model).model(args.model_id)
    costs = CostTable.read(args.costs) if args.costs else CostTable()
    changes = reconcile(legacy, target, _rules(args.constraints), costs, _config(args),
                        tie_break=not args.no_tie_break)
    if changes is None:
        print("no valid instantiation within the given bounds", file=sys.stderr)
        return EXIT_UNSAT
    _write(args.output, serialize_facts(changes.result))
    if args.json:
        _write(args.json, json.dumps(changes.to_json(), indent=2) + "\n")
    if args.dot:
        _write(args.dot, changeset_dot(changes))
    print(f"total cost {changes.total_cost}: {len(changes.deleted)} deleted, "
          f"{len(changes.created)} created, {len(changes.reused)} reused", file=sys.stderr)
    return EXIT_OK


def cmd_export(args) -> int:
    ws = load_files(*args.model, args.inst)
    inst = ws.instantiation(args.inst_id)
    _write(args.dot, instantiation_dot(inst, {o for o, _ in inst.isa}))
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "complete": cmd_complete, "check-model": cmd_check_model,
            "reconcile": cmd_reconcile, "export": cmd_export}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"ooasp: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except _INPUT_ERRORS as e:
        print(f"ooasp: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
