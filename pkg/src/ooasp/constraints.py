"""Domain-specific constraint rules.

A rule derives a violation atom whenever its body matches an instantiation::

    cv module_element_violated(M1,E1) :-
        associated("Element_module",E1,M1), isa(E1,"ElementA"), not isa(M1,"ModuleA").

The instantiation and model arguments of plain ASP are implicit; an optional
``model "v2"`` clause after the head restricts a rule to instantiations of
that model.  ``isa`` holds under the subclass closure.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Iterable, Iterator, Union

from .model import Instantiation, Model, UnknownIdentifier, Violation


class ConstraintSyntaxError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0, source: str | None = None):
        self.message, self.line, self.column, self.source = message, line, column, source
        where = f"{source or '<input>'}:{line}:{column}: " if line else ""
        super().__init__(where + message)


class UnsafeRule(ConstraintSyntaxError):
    pass


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Offset:
    """``Var + k`` / ``Var - k`` (k may be negative)."""

    var: Var
    k: int

    def __str__(self):
        return f"{self.var}{'+' if self.k >= 0 else '-'}{abs(self.k)}"


Term = Union[Var, Offset, int, str]

# atom argument layout: isa(obj, class), associated(assoc, o1, o2), value(attr, obj, val)
ATOMS = {"isa": 2, "associated": 3, "value": 3}
COMPARISONS = ("=", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple

    def __str__(self):
        return f"{self.pred}({','.join(_show(a) for a in self.args)})"


@dataclass(frozen=True)
class Literal:
    positive: bool
    atom: Atom

    def __str__(self):
        return ("" if self.positive else "not ") + str(self.atom)


@dataclass(frozen=True)
class Comparison:
    left: Term
    op: str
    right: Term

    def __str__(self):
        return f"{_show(self.left)} {self.op} {_show(self.right)}"


BodyLiteral = Union[Literal, Comparison]


@dataclass(frozen=True)
class ConstraintRule:
    kind: str
    head: tuple
    body: tuple
    scope: str | None = None

    def __str__(self):
        scope = f' model "{self.scope}"' if self.scope else ""
        head = ",".join(_show(a) for a in self.head)
        return f"cv {self.kind}({head}){scope} :- " + ", ".join(map(str, self.body)) + "."

    @property
    def has_negation(self) -> bool:
        return any(isinstance(b, Literal) and not b.positive for b in self.body)

    def applies_to(self, model_id: str) -> bool:
        return self.scope is None or self.scope == model_id


def _show(t) -> str:
    return f'"{t}"' if isinstance(t, str) else str(t)


def _vars(t) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, Offset):
        return {t.var.name}
    return set()


# -- parsing ------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>%[^\n]*)
  | (?P<string>"[^"\n]*")
  | (?P<int>[0-9]+)
  | (?P<var>[A-Z][A-Za-z0-9_]*)
  | (?P<ident>[a-z_][A-Za-z0-9_]*)
  | (?P<op>:-|!=|<=|>=|[=<>+\-(),.])
""", re.VERBOSE)


class _Parser:
    def __init__(self, text: str, source: str | None):
        self.source = source
        self.toks = []
        pos, line, start = 0, 1, 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None:
                raise ConstraintSyntaxError(f"unexpected character {text[pos]!r}",
                                            line, pos - start + 1, source)
            if m.lastgroup not in ("ws", "comment"):
                self.toks.append((m.lastgroup, m.group(), line, pos - start + 1))
            nl = m.group().count("\n")
            if nl:
                line += nl
                start = pos + m.group().rindex("\n") + 1
            pos = m.end()
        self.toks.append(("eof", "", line, pos - start + 1))
        self.i = 0

    def peek(self, k: int = 0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str, tok=None, cls=ConstraintSyntaxError):
        tok = tok or self.peek()
        return cls(msg, tok[2], tok[3], self.source)

    def take(self, kind: str, value: str | None = None):
        tok = self.peek()
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = repr(value) if value is not None else kind
            raise self.error(f"expected {want}, found {tok[1] or 'end of input'!r}")
        self.i += 1
        return tok

    def at(self, value: str) -> bool:
        return self.peek()[1] == value and self.peek()[0] != "string"

    def rules(self) -> list[ConstraintRule]:
        out = []
        while self.peek()[0] != "eof":
            out.append(self.rule())
        return out

    def rule(self) -> ConstraintRule:
        start = self.peek()
        tok = self.take("ident")
        if tok[1] != "cv":
            raise self.error("a rule starts with 'cv'", tok)
        kind = self.take("ident")[1]
        head = []
        self.take("op", "(")
        if not self.at(")"):
            head.append(self.plain_term())
            while self.at(","):
                self.i += 1
                head.append(self.plain_term())
        self.take("op", ")")
        scope = None
        if self.peek()[0] == "ident" and self.peek()[1] == "model":
            self.i += 1
            scope = self.take("string")[1][1:-1]
        self.take("op", ":-")
        body = [self.literal()]
        while self.at(","):
            self.i += 1
            body.append(self.literal())
        self.take("op", ".")
        rule = ConstraintRule(kind, tuple(head), tuple(body), scope)
        self.check_safety(rule, start)
        return rule

    def literal(self) -> BodyLiteral:
        tok = self.peek()
        if tok[0] == "ident" and tok[1] == "not":
            self.i += 1
            return Literal(False, self.atom())
        if tok[0] == "ident" and tok[1] in ATOMS:
            return Literal(True, self.atom())
        left = self.expr()
        op_tok = self.peek()
        if op_tok[1] not in COMPARISONS or op_tok[0] != "op":
            raise self.error(f"expected a comparison operator, found {op_tok[1]!r}")
        self.i += 1
        right = self.expr()
        for side, t in ((left, tok), (right, op_tok)):
            if isinstance(side, str):
                raise self.error(f"comparison over non-integer term {_show(side)}", t)
        return Comparison(left, op_tok[1], right)

    def atom(self) -> Atom:
        tok = self.take("ident")
        pred = tok[1]
        if pred not in ATOMS:
            raise self.error(f"unknown body predicate {pred!r}", tok)
        self.take("op", "(")
        args = [self.plain_term()]
        while self.at(","):
            self.i += 1
            args.append(self.plain_term())
        self.take("op", ")")
        if len(args) != ATOMS[pred]:
            raise self.error(f"{pred} expects {ATOMS[pred]} arguments, got {len(args)}", tok)
        ident_pos = 1 if pred == "isa" else 0
        if not isinstance(args[ident_pos], str):
            raise self.error(f"{pred}: the class/association/attribute must be a string", tok)
        obj_positions = (0,) if pred == "isa" else (1, 2) if pred == "associated" else (1,)
        for p in obj_positions:
            if isinstance(args[p], str):
                raise self.error(f"{pred}: object ids are integers, got {_show(args[p])}", tok)
        return Atom(pred, tuple(args))

    def plain_term(self) -> Term:
        kind, value, _, _ = tok = self.peek()
        if kind == "var":
            self.i += 1
            return Var(value)
        if kind == "string":
            self.i += 1
            return value[1:-1]
        if kind == "int" or (value == "-" and self.peek(1)[0] == "int"):
            return self.integer()
        raise self.error(f"expected a term, found {value or 'end of input'!r}", tok)

    def integer(self) -> int:
        sign = 1
        if self.at("-"):
            self.i += 1
            sign = -1
        return sign * int(self.take("int")[1])

    def expr(self) -> Term:
        t = self.plain_term()
        if self.at("+") or self.at("-"):
            op = self.peek()
            if not isinstance(t, Var):
                raise self.error("arithmetic is only supported as Var +/- integer", op)
            self.i += 1
            k = self.integer()
            return Offset(t, k if op[1] == "+" else -k)
        return t

    def check_safety(self, rule: ConstraintRule, tok) -> None:
        bound: set[str] = set()
        for b in rule.body:
            if isinstance(b, Literal) and b.positive:
                for a in b.atom.args:
                    bound |= _vars(a)
        needs = [(a, "the head") for a in rule.head]
        for b in rule.body:
            if isinstance(b, Literal) and not b.positive:
                needs += [(a, "a negated literal") for a in b.atom.args]
            elif isinstance(b, Comparison):
                needs += [(b.left, "a comparison"), (b.right, "a comparison")]
        for term, where in needs:
            if isinstance(term, Offset) and where == "the head":
                raise self.error("arithmetic is not allowed in rule heads", tok)
            for v in sorted(_vars(term)):
                if v not in bound:
                    raise self.error(f"unsafe rule {rule.kind}: variable {v} occurs in {where} "
                                     "but in no positive body atom", tok, UnsafeRule)


def parse_constraints(text: str, source: str | None = None) -> list[ConstraintRule]:
    """Parse constraint rules, checking safety of every rule."""
    return _Parser(text, source).rules()


def read_constraint_file(path) -> list[ConstraintRule]:
    with open(path, encoding="utf-8") as fh:
        return parse_constraints(fh.read(), str(path))


# -- evaluation ---------------------------------------------------------------

class FactView:
    """Read access to instance facts for rule evaluation.

    Positive literals match facts that certainly hold; a negated literal
    holds when its atom cannot possibly hold.  For a fixed instantiation both
    notions coincide.
    """

    def __init__(self, model: Model, inst: Instantiation):
        self.model = model
        self.isa_index: dict[str, set[int]] = {}
        for o, c in inst.isa:
            for a in model.ancestors(c) if c in model.classes else (c,):
                self.isa_index.setdefault(a, set()).add(o)
        self.link_index: dict[str, set[tuple[int, int]]] = {}
        for a, o1, o2 in inst.links:
            self.link_index.setdefault(a, set()).add((o1, o2))
        self.value_index: dict[str, set[tuple[int, Any]]] = {}
        for at, o, v in inst.values:
            self.value_index.setdefault(at, set()).add((o, v))

    def isa_objects(self, cls: str) -> Iterable[int]:
        return self.isa_index.get(cls, ())

    def has_isa(self, obj: int, cls: str) -> bool:
        return obj in self.isa_index.get(cls, ())

    def links(self, assoc: str) -> Iterable[tuple[int, int]]:
        return self.link_index.get(assoc, ())

    def has_link(self, assoc: str, o1: int, o2: int) -> bool:
        return (o1, o2) in self.link_index.get(assoc, ())

    def values(self, attr: str) -> Iterable[tuple[int, Any]]:
        return self.value_index.get(attr, ())

    def has_value(self, attr: str, obj: int, val: Any) -> bool:
        return (obj, val) in self.value_index.get(attr, ())

    # negation is checked against possibly-true facts
    maybe_isa = has_isa
    maybe_link = has_link
    maybe_value = has_value


def _resolve(t, env: dict[str, Any]):
    if isinstance(t, Var):
        return env[t.name]
    if isinstance(t, Offset):
        v = env[t.var.name]
        return v + t.k if isinstance(v, int) else None
    return t


def _compare(left, op: str, right) -> bool:
    if left is None or right is None:
        return False
    if op == "=":
        return left == right
    if op == "!=":
        return left != right
    if not (isinstance(left, int) and isinstance(right, int)):
        return False
    return {"<": left < right, "<=": left <= right, ">": left > right, ">=": left >= right}[op]


def _unify(args: tuple, values: tuple, env: dict[str, Any]) -> dict[str, Any] | None:
    out = env
    for a, v in zip(args, values):
        if isinstance(a, Var):
            if a.name in out:
                if out[a.name] != v:
                    return None
            else:
                if out is env:
                    out = dict(env)
                out[a.name] = v
        elif a != v or type(a) is not type(v):
            return None
    return out


def _ground(t, env) -> bool:
    return all(v in env for v in _vars(t))


def _check(lit: BodyLiteral, env: dict[str, Any], view) -> bool:
    if isinstance(lit, Comparison):
        return _compare(_resolve(lit.left, env), lit.op, _resolve(lit.right, env))
    args = tuple(_resolve(a, env) for a in lit.atom.args)
    p = lit.atom.pred
    if p == "isa":
        holds = view.maybe_isa(args[0], args[1])
    elif p == "associated":
        holds = view.maybe_link(*args)
    else:
        holds = view.maybe_value(*args)
    return not holds


def _matches(atom: Atom, env: dict[str, Any], view) -> Iterator[dict[str, Any]]:
    a = atom.args
    if atom.pred == "isa":
        obj, cls = a
        if _ground(obj, env):
            if view.has_isa(_resolve(obj, env), cls):
                yield env
            return
        for o in view.isa_objects(cls):
            e = _unify((obj,), (o,), env)
            if e is not None:
                yield e
    elif atom.pred == "associated":
        for o1, o2 in view.links(a[0]):
            e = _unify(a[1:], (o1, o2), env)
            if e is not None:
                yield e
    else:
        for o, v in view.values(a[0]):
            e = _unify(a[1:], (o, v), env)
            if e is not None:
                yield e


def _join(pending: list[BodyLiteral], env: dict[str, Any], view) -> Iterator[dict[str, Any]]:
    # filters first, as soon as their variables are bound
    rest = []
    for lit in pending:
        is_filter = isinstance(lit, Comparison) or not lit.positive
        if is_filter and all(_ground(t, env) for t in _lit_terms(lit)):
            if not _check(lit, env, view):
                return
        else:
            rest.append(lit)
    if not rest:
        yield env
        return
    idx = next((i for i, lit in enumerate(rest) if isinstance(lit, Literal) and lit.positive), None)
    if idx is None:
        return  # unreachable for safe rules
    lit = rest[idx]
    others = rest[:idx] + rest[idx + 1:]
    for e in _matches(lit.atom, env, view):
        yield from _join(others, e, view)


def _lit_terms(lit: BodyLiteral) -> tuple:
    return (lit.left, lit.right) if isinstance(lit, Comparison) else lit.atom.args


def fact_atom(key: tuple) -> tuple[str, tuple]:
    """Map an instance fact key to the DSL atom it can match."""
    if key[0] == "isa":
        return "isa", (key[2], key[1])
    if key[0] == "associated":
        return "associated", key[1:]
    return "value", key[1:]


def derive(rule: ConstraintRule, view, inst_id: str, seed: tuple | None = None,
           seed_positive: bool = True) -> set[Violation]:
    """Ground violations of one rule.

    With a seed fact key only bindings in which some literal of the given
    polarity is matched by that fact are produced; this is how the search
    checks the consequences of a single decision.
    """
    out: set[Violation] = set()
    if seed is None:
        starts = [(list(rule.body), {})]
    else:
        starts = []
        pred, sargs = fact_atom(seed)
        for i, lit in enumerate(rule.body):
            if not isinstance(lit, Literal) or lit.positive != seed_positive:
                continue
            if lit.atom.pred != pred:
                continue
            if pred == "isa":
                # a seeded isa fact matches every ancestor class
                if lit.atom.args[1] not in view.model.ancestors(seed[1]):
                    continue
                env = _unify(lit.atom.args[:1], sargs[:1], {})
            else:
                env = _unify(lit.atom.args, sargs, {})
            if env is None:
                continue
            rest = list(rule.body[:i] + rule.body[i + 1:])
            if not seed_positive:
                rest.append(lit)  # re-checked once its variables are bound
            starts.append((rest, env))
    for body, env in starts:
        for e in _join(body, env, view):
            out.add(Violation(inst_id, rule.kind, tuple(_resolve(h, e) for h in rule.head)))
    return out


def check_references(rules: Iterable[ConstraintRule], model: Model) -> None:
    """Raise UnknownIdentifier if an applicable rule names something the model lacks."""
    for rule in rules:
        if not rule.applies_to(model.model_id):
            continue
        for lit in rule.body:
            if not isinstance(lit, Literal):
                continue
            a = lit.atom
            if a.pred == "isa" and a.args[1] not in model.classes:
                raise UnknownIdentifier(f"rule {rule.kind}: class {a.args[1]!r} is not declared "
                                        f"in model {model.model_id!r}")
            if a.pred == "associated" and not model.has_association(a.args[0]):
                raise UnknownIdentifier(f"rule {rule.kind}: association {a.args[0]!r} is not "
                                        f"declared in model {model.model_id!r}")
            if a.pred == "value" and not model.has_attribute(a.args[0]):
                raise UnknownIdentifier(f"rule {rule.kind}: attribute {a.args[0]!r} is not "
                                        f"declared in model {model.model_id!r}")


def evaluate_constraints(rules: Iterable[ConstraintRule], model: Model,
                         inst: Instantiation) -> set[Violation]:
    """All violation atoms derivable by the rules over the instantiation."""
    rules = [r for r in rules if r.applies_to(inst.model_id)]
    check_references(rules, model)
    view = FactView(model, inst)
    out: set[Violation] = set()
    for rule in rules:
        out |= derive(rule, view, inst.inst_id)
    return out
