"""Reader and writer for OOASP-DDL fact files.

Grammar: ``pred(arg, ..., arg).`` where an argument is a double-quoted
string, a decimal integer, or (inside ``ooasp_cv`` only) a functor term
``name(arg, ...)``.  ``%`` starts a comment that runs to the end of the line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any

from .model import (
    INSTANCE_PREDICATES,
    MODEL_PREDICATES,
    PREDICATES,
    VIOLATION_PREDICATE,
    Fact,
    IllFormedModel,
    Instantiation,
    Model,
    Term,
    Violation,
    arg_key,
    build_model,
)


class DDLError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0, source: str | None = None):
        self.message, self.line, self.column, self.source = message, line, column, source
        super().__init__(str(self))

    def __str__(self) -> str:
        where = f"{self.source or '<input>'}:{self.line}:{self.column}: " if self.line else ""
        return where + self.message


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>%[^\n]*)
  | (?P<string>"[^"\n]*")
  | (?P<int>-?[0-9]+)
  | (?P<ident>[a-z_][A-Za-z0-9_]*)
  | (?P<punct>[(),.])
""", re.VERBOSE)


_FUNCTOR = re.compile(r"[a-z_][A-Za-z0-9_]*")


def tokenize(text: str, source: str | None = None):
    """Yield (kind, value, line, column) tokens, skipping whitespace and comments."""
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise DDLError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1, source)
        kind, value = m.lastgroup, m.group()
        if kind not in ("ws", "comment"):
            yield kind, value, line, pos - line_start + 1
        nl = value.count("\n")
        if nl:
            line += nl
            line_start = pos + value.rindex("\n") + 1
        pos = m.end()
    yield "eof", "", line, pos - line_start + 1


class _Parser:
    def __init__(self, text: str, source: str | None):
        self.source = source
        self.tokens = list(tokenize(text, source))
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self, kind: str, value: str | None = None):
        tok = self.tokens[self.i]
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = repr(value) if value else kind
            got = repr(tok[1]) if tok[0] != "eof" else "end of input"
            raise DDLError(f"expected {want}, found {got}", tok[2], tok[3], self.source)
        self.i += 1
        return tok

    def term(self):
        kind, value, line, col = self.peek()
        if kind == "string":
            self.i += 1
            return value[1:-1]
        if kind == "int":
            self.i += 1
            return int(value)
        if kind == "ident":
            self.i += 1
            if self.peek()[1] == "(":
                return Term(value, self.arglist())
            return Term(value)
        raise DDLError(f"expected a term, found {value or 'end of input'!r}", line, col, self.source)

    def arglist(self) -> tuple:
        self.take("punct", "(")
        args = [self.term()]
        while self.peek()[1] == ",":
            self.i += 1
            args.append(self.term())
        self.take("punct", ")")
        return tuple(args)

    def facts(self) -> list[Fact]:
        out = []
        while self.peek()[0] != "eof":
            _, pred, line, col = self.take("ident")
            if pred not in PREDICATES:
                raise DDLError(f"unknown predicate {pred!r}", line, col, self.source)
            args = self.arglist()
            self.take("punct", ".")
            _check_args(pred, args, line, col, self.source)
            out.append(Fact(pred, args, line, col))
        return out


def _check_args(pred: str, args: tuple, line: int, col: int, source: str | None) -> None:
    kinds = PREDICATES[pred]
    if len(args) != len(kinds):
        raise DDLError(f"{pred} expects {len(kinds)} arguments, got {len(args)}", line, col, source)
    for n, (kind, a) in enumerate(zip(kinds, args), 1):
        ok = {
            "s": isinstance(a, str),
            "i": isinstance(a, int),
            "o": isinstance(a, int),
            "v": isinstance(a, (int, str)),
            "t": isinstance(a, Term),
        }[kind]
        if not ok:
            if kind == "o":
                msg = f"{pred} argument {n}: object id must be an integer, got {a!r}"
            else:
                want = {"s": "a string", "i": "an integer", "v": "a string or integer",
                        "t": "a functor term"}[kind]
                msg = f"{pred} argument {n}: expected {want}, got {_fmt(a)}"
            raise DDLError(msg, line, col, source)
        if kind == "i" and pred in ("ooasp_assoc",) and a < 0:
            raise DDLError(f"{pred} argument {n}: cardinality must be non-negative", line, col, source)


@dataclass
class FactFile:
    facts: list[Fact] = field(default_factory=list)
    source: str | None = None

    @property
    def source_locations(self) -> list[tuple[int, int]]:
        return [(f.line, f.column) for f in self.facts]

    def __len__(self) -> int:
        return len(self.facts)


def parse_facts(text: str, source: str | None = None) -> FactFile:
    """Parse OOASP-DDL text into facts, in source order."""
    return FactFile(_Parser(text, source).facts(), source)


def read_fact_file(path) -> FactFile:
    with open(path, encoding="utf-8") as fh:
        return parse_facts(fh.read(), str(path))


# -- serialisation ----------------------------------------------------------

def _fmt(arg: Any) -> str:
    if isinstance(arg, bool):
        raise TypeError("booleans are written as the strings \"true\"/\"false\"")
    if isinstance(arg, int):
        return str(arg)
    if isinstance(arg, str):
        if '"' in arg or "\n" in arg:
            raise ValueError(f"identifier cannot be written without escapes: {arg!r}")
        return f'"{arg}"'
    if isinstance(arg, Term):
        if not _FUNCTOR.fullmatch(arg.name):
            raise ValueError(f"{arg.name!r} is not a valid functor name")
        return arg.name + ("(" + ",".join(_fmt(a) for a in arg.args) + ")" if arg.args else "")
    raise TypeError(f"cannot serialise {arg!r}")


def fact_sort_key(fact: Fact) -> tuple:
    return (fact.pred, tuple(arg_key(a) for a in fact.args))


def format_fact(fact: Fact) -> str:
    return f"{fact.pred}({','.join(_fmt(a) for a in fact.args)})."


def to_facts(item: Any) -> list[Fact]:
    if isinstance(item, (Model, Instantiation)):
        return item.to_facts()
    if isinstance(item, Fact):
        return [item]
    out = []
    for x in item:
        if isinstance(x, Fact):
            out.append(x)
        elif hasattr(x, "to_fact"):
            out.append(x.to_fact())
        else:
            out.extend(to_facts(x))
    return out


def serialize_facts(*items: Any) -> str:
    """Write models, instantiations, violation lists or raw facts in canonical order.

    Facts are sorted by predicate name then argument tuple, one per line;
    duplicates are written once.
    """
    facts = {f.key(): f for item in items for f in to_facts(item)}
    ordered = sorted(facts.values(), key=fact_sort_key)
    return "".join(format_fact(f) + "\n" for f in ordered)


# -- splitting a fact file into models and instantiations ---------------------

@dataclass
class Workspace:
    """Models, instantiations and violation atoms loaded from fact files."""

    models: dict[str, Model] = field(default_factory=dict)
    instantiations: dict[str, Instantiation] = field(default_factory=dict)
    violations: list[Violation] = field(default_factory=list)
    locations: dict[tuple, tuple[str | None, int, int]] = field(default_factory=dict)

    def model(self, model_id: str | None = None) -> Model:
        if model_id is None:
            if len(self.models) != 1:
                raise DDLError(f"expected exactly one model, found {sorted(self.models) or 'none'}")
            return next(iter(self.models.values()))
        try:
            return self.models[model_id]
        except KeyError:
            raise DDLError(f"model {model_id!r} is not declared") from None

    def instantiation(self, inst_id: str | None = None) -> Instantiation:
        if inst_id is None:
            if len(self.instantiations) != 1:
                raise DDLError("expected exactly one instantiation, found "
                               f"{sorted(self.instantiations) or 'none'}")
            return next(iter(self.instantiations.values()))
        try:
            return self.instantiations[inst_id]
        except KeyError:
            raise DDLError(f"instantiation {inst_id!r} is not declared") from None


def load(*files: FactFile) -> Workspace:
    """Split facts by predicate family into models and instantiations.

    Instance facts must name an instantiation declared by some
    ``ooasp_instantiation`` fact; instantiation ids are unique per workspace.
    """
    model_facts: dict[str, list[Fact]] = {}
    inst_model: dict[str, str] = {}
    inst_facts: dict[str, list[tuple[Fact, str | None]]] = {}
    ws = Workspace()
    for ff in files:
        for f in ff.facts:
            if f.pred in MODEL_PREDICATES:
                model_facts.setdefault(f.args[0], []).append(f)
            elif f.pred == "ooasp_instantiation":
                m, i = f.args
                if inst_model.get(i, m) != m:
                    raise DDLError(f"instantiation {i!r} declared for models {inst_model[i]!r} "
                                   f"and {m!r}", f.line, f.column, ff.source)
                inst_model[i] = m
                inst_facts.setdefault(i, [])
            elif f.pred in INSTANCE_PREDICATES:
                inst_facts.setdefault(f.args[0], []).append((f, ff.source))
            elif f.pred == VIOLATION_PREDICATE:
                if not isinstance(f.args[1], Term):
                    raise DDLError("ooasp_cv expects a functor term", f.line, f.column, ff.source)
                ws.violations.append(Violation.from_fact(f))
    for i, facts in inst_facts.items():
        if i not in inst_model:
            f, src = facts[0]
            raise DDLError(f"instance fact refers to undeclared instantiation {i!r}",
                           f.line, f.column, src)
    for m, facts in model_facts.items():
        ws.models[m] = build_model(facts, m)
    for i, m in inst_model.items():
        keys = []
        for f, src in inst_facts[i]:
            key = _instance_key(f)
            keys.append(key)
            ws.locations.setdefault((i,) + key, (src, f.line, f.column))
        inst = Instantiation.from_fact_keys(i, m, keys)
        if m in ws.models:
            inst = inst.normalized(ws.models[m])
        ws.instantiations[i] = inst
    return ws


def _instance_key(f: Fact) -> tuple:
    a = f.args
    if f.pred == "ooasp_isa":
        return ("isa", a[1], a[2])
    if f.pred == "ooasp_associated":
        return ("associated", a[1], a[2], a[3])
    return ("attribute_value", a[1], a[2], a[3])


def load_files(*paths) -> Workspace:
    return load(*(read_fact_file(p) for p in paths))


__all__ = [
    "DDLError", "FactFile", "IllFormedModel", "Term", "Violation", "Workspace", "arg_key", "fact_sort_key",
    "format_fact", "load", "load_files", "parse_facts", "read_fact_file", "serialize_facts",
]
