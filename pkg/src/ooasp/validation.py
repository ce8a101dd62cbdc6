"""Validation: every integrity and domain-specific violation of an instantiation.

Integrity checks generated from the model:

* ``mincardviolated(O,A)`` / ``maxcardviolated(O,A)`` -- object O at an endpoint
  of association A has too few / too many correctly typed partners.  Minimum
  checks are skipped in partial mode.
* ``assoc_type_violated(A,O1,O2)`` -- a link endpoint is not an instance of the
  declared endpoint class.  Such links do not count towards cardinalities.
* ``dangling_reference(O)`` -- a link or value names an object without isa fact.
* ``attr_unknown_value_type(O,AT,V)`` -- AT is not an attribute of O's class or
  V has the wrong base type; ``attr_range_violated`` / ``attr_enum_violated``
  for values outside the declared domain.
* ``attr_missing(O,AT)`` (complete mode only) and ``attr_multiple(O,AT)``.
* ``multiple_classification(O)`` -- O is declared in two unrelated classes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .constraints import ConstraintRule, evaluate_constraints
from .model import Instantiation, Model, UnknownIdentifier, Violation

PARTIAL = "partial"
COMPLETE = "complete"
MODES = (PARTIAL, COMPLETE)

INTEGRITY_KINDS = (
    "mincardviolated", "maxcardviolated", "assoc_type_violated", "dangling_reference",
    "attr_unknown_value_type", "attr_range_violated", "attr_enum_violated",
    "attr_missing", "attr_multiple", "multiple_classification",
)
# the only integrity violations adding facts can repair
GAP_KINDS = ("mincardviolated", "attr_missing")


class ModelMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ValidationReport:
    violations: frozenset[Violation]
    mode: str = COMPLETE
    notes: tuple[str, ...] = field(default=(), compare=False)

    @property
    def valid(self) -> bool:
        return not self.violations

    def sorted(self) -> list[Violation]:
        return sorted(self.violations, key=Violation.sort_key)

    def of_kind(self, kind: str) -> list[Violation]:
        return [v for v in self.sorted() if v.kind == kind]


def class_closure(model: Model, inst: Instantiation) -> dict[int, set[str]]:
    """Object -> every class it is an instance of, superclasses included."""
    out: dict[int, set[str]] = {}
    for o, c in inst.isa:
        if c not in model.classes:
            raise UnknownIdentifier(f"instantiation {inst.inst_id!r}: object {o} has class {c!r} "
                                    f"which is not declared in model {model.model_id!r}")
        out.setdefault(o, set()).update(model.ancestors(c))
    return out


def integrity_violations(model: Model, inst: Instantiation, mode: str = COMPLETE) -> set[Violation]:
    i = inst.inst_id
    closure = class_closure(model, inst)
    out: set[Violation] = set()

    for o in {o for o, _ in inst.isa}:
        cs = sorted(inst.classes_of(o))
        if any(a not in model.ancestors(b) and b not in model.ancestors(a)
               for n, a in enumerate(cs) for b in cs[n + 1:]):
            out.add(Violation(i, "multiple_classification", (o,)))

    partners: dict[tuple[int, str, int], set[int]] = {}
    for a_id, o1, o2 in inst.links:
        assoc = model.association(a_id)
        missing = [o for o in (o1, o2) if o not in closure]
        if missing:
            out.update(Violation(i, "dangling_reference", (o,)) for o in missing)
            continue
        if assoc.class1 not in closure[o1] or assoc.class2 not in closure[o2]:
            out.add(Violation(i, "assoc_type_violated", (a_id, o1, o2)))
            continue
        partners.setdefault((o1, a_id, 1), set()).add(o2)
        partners.setdefault((o2, a_id, 2), set()).add(o1)

    for assoc in model.associations:
        for side in (1, 2):
            lo, hi = assoc.bounds(side)
            cls = assoc.endpoint(side)
            for o, classes in closure.items():
                if cls not in classes:
                    continue
                n = len(partners.get((o, assoc.assoc_id, side), ()))
                if mode == COMPLETE and lo > 0 and n < lo:
                    out.add(Violation(i, "mincardviolated", (o, assoc.assoc_id)))
                if n > hi:
                    out.add(Violation(i, "maxcardviolated", (o, assoc.assoc_id)))

    seen: dict[tuple[int, str], set] = {}
    for at, o, v in inst.values:
        if not model.has_attribute(at):
            raise UnknownIdentifier(f"instantiation {inst.inst_id!r}: attribute {at!r} is not "
                                    f"declared in model {model.model_id!r}")
        if o not in closure:
            out.add(Violation(i, "dangling_reference", (o,)))
            continue
        seen.setdefault((o, at), set()).add(v)
        decl = next((d for d in sorted(model.attributes, key=lambda d: d.owner_class)
                     if d.attr_id == at and d.owner_class in closure[o]), None)
        if decl is None or not decl.accepts_type(v):
            out.add(Violation(i, "attr_unknown_value_type", (o, at, v)))
        elif decl.base_type == "integer" and not decl.in_range(v):
            out.add(Violation(i, "attr_range_violated", (o, at, v)))
        elif decl.base_type == "string" and decl.enum_values and v not in decl.enum_values:
            out.add(Violation(i, "attr_enum_violated", (o, at, v)))
    for (o, at), vals in seen.items():
        if len(vals) > 1:
            out.add(Violation(i, "attr_multiple", (o, at)))

    if mode == COMPLETE:
        for o, classes in closure.items():
            for decl in model.attributes:
                if decl.owner_class in classes and (o, decl.attr_id) not in seen:
                    out.add(Violation(i, "attr_missing", (o, decl.attr_id)))
    return out


def validate(model: Model, inst: Instantiation, rules: Iterable[ConstraintRule] = (),
             mode: str = COMPLETE) -> ValidationReport:
    """Derive every violation of `inst` against `model` and the rules."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if inst.model_id != model.model_id:
        raise ModelMismatch(f"instantiation {inst.inst_id!r} belongs to model {inst.model_id!r}, "
                            f"not {model.model_id!r}")
    violations = integrity_violations(model, inst, mode)
    violations |= evaluate_constraints(rules, model, inst)
    notes = tuple(f"object {o} is an instance of non-leaf class {c!r}"
                  for o, c in sorted(inst.isa) if not model.is_leaf(c))
    return ValidationReport(frozenset(violations), mode, notes)


_MESSAGES = {
    "mincardviolated": "object {0} has fewer partners in association {1} than required",
    "maxcardviolated": "object {0} has more partners in association {1} than allowed",
    "assoc_type_violated": "link {0}({1},{2}) connects objects of the wrong classes",
    "dangling_reference": "object {0} is referenced but has no class",
    "attr_unknown_value_type": "value {2!r} is not a valid {1} of object {0}",
    "attr_range_violated": "value {2} of {1} of object {0} is out of range",
    "attr_enum_violated": "value {2!r} of {1} of object {0} is not an allowed literal",
    "attr_missing": "object {0} has no value for attribute {1}",
    "attr_multiple": "object {0} has several values for attribute {1}",
    "multiple_classification": "object {0} is declared in unrelated classes",
}


def describe(v: Violation) -> str:
    template = _MESSAGES.get(v.kind)
    if template is None:
        return f"domain constraint {v.kind} violated by {', '.join(map(str, v.args))}"
    return template.format(*v.args)


def report_json(report: ValidationReport, inst: Instantiation,
                locations: dict | None = None) -> dict:
    """Structured report; locations maps (inst_id, *fact_key) -> (file, line, column)."""
    locations = locations or {}
    by_object: dict[int, list] = {}
    for key, loc in locations.items():
        if key[0] == inst.inst_id and key[1] == "isa":
            by_object.setdefault(key[3], []).append(loc)
    items = []
    for v in report.sorted():
        locs = []
        for a in v.args:
            if isinstance(a, int) and not isinstance(a, bool):
                locs += [{"file": f, "line": ln, "column": col}
                         for f, ln, col in sorted(by_object.get(a, []), key=str)]
        items.append({"kind": v.kind, "args": list(v.args), "message": describe(v),
                      "locations": locs})
    return {
        "schema": "ooasp-validation-report/1",
        "instantiation": inst.inst_id,
        "model": inst.model_id,
        "mode": report.mode,
        "valid": report.valid,
        "violations": items,
        "notes": list(report.notes),
    }
