"""Completion: extend a partial instantiation into a valid one by adding facts."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any, Iterable

from .canon import canonical_key, canonicalize, fact_key_order
from .constraints import ConstraintRule, check_references
from .model import Instantiation, Model, UnknownIdentifier
from .search import Search, Slot, Universe
from .validation import INTEGRITY_KINDS, PARTIAL, ModelMismatch, ValidationReport, validate

SAT = "sat"
UNSAT_WITHIN_BOUNDS = "unsat_within_bounds"
INPUT_INVALID = "input_invalid"


class CompletionError(ValueError):
    """The search space cannot be built (unbounded domain, bad bounds, unknown ids)."""


@dataclass
class CompletionConfig:
    max_new_per_class: dict[str, int] = field(default_factory=dict)
    default_int_domain: tuple[int, int] | None = None
    max_solutions: int = 1
    id_base: int | None = None
    # lower bounds on created objects, e.g. to ask for a non-empty witness
    min_new_per_class: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.max_solutions < 1:
            raise ValueError("max_solutions must be at least 1")
        for name in ("max_new_per_class", "min_new_per_class"):
            for cls, n in getattr(self, name).items():
                if not isinstance(n, int) or n < 0:
                    raise ValueError(f"{name}[{cls!r}] must be a non-negative integer")
        for cls, n in self.min_new_per_class.items():
            if n > self.max_new_per_class.get(cls, 0):
                raise ValueError(f"min_new_per_class[{cls!r}] exceeds max_new_per_class")
        if self.default_int_domain is not None:
            lo, hi = self.default_int_domain
            if lo > hi:
                raise ValueError("default_int_domain is empty")


@dataclass
class CompletionResult:
    solutions: list[Instantiation]
    cause: str | None = None
    report: ValidationReport | None = None
    stats: dict[str, Any] = field(default_factory=dict)
    new_objects: list[set[int]] = field(default_factory=list)

    @property
    def status(self) -> str:
        return self.cause or SAT

    @property
    def sat(self) -> bool:
        return bool(self.solutions)


def allocate_slots(model: Model, config: CompletionConfig, id_base: int) -> list[Slot]:
    slots = []
    next_id = id_base
    for cls in sorted(config.max_new_per_class):
        if cls not in model.classes:
            raise CompletionError(f"bound given for undeclared class {cls!r}")
        if not model.is_leaf(cls):
            raise CompletionError(f"only leaf classes can have new objects; {cls!r} has subclasses")
        for n in range(config.max_new_per_class[cls]):
            slots.append(Slot(next_id, cls, n))
            next_id += 1
    return slots


def default_id_base(inst: Instantiation, config: CompletionConfig) -> int:
    if config.id_base is not None:
        return config.id_base
    return max(inst.referenced_ids(), default=0) + 1


def attribute_domain(decl, config: CompletionConfig) -> list:
    dom = decl.domain(config.default_int_domain)
    if dom is None:
        raise CompletionError(f"attribute {decl.owner_class}.{decl.attr_id} has no finite domain; "
                              "declare bounds/enum values or pass a default integer domain")
    return dom


def candidate_facts(model: Model, objects: dict[int, set[str]], config: CompletionConfig,
                    skip_value_groups: set[tuple[int, str]] = frozenset()) -> list[tuple]:
    """Every correctly typed link and every in-domain value over the given objects.

    objects maps object id -> declared classes; value groups listed in
    skip_value_groups (object, attribute) get no candidates.
    """
    closure = {o: set().union(*(model.ancestors(c) for c in cs if c in model.classes))
               for o, cs in objects.items()}
    out = []
    for a in sorted(model.associations, key=lambda a: a.assoc_id):
        left = sorted(o for o in objects if a.class1 in closure[o])
        right = sorted(o for o in objects if a.class2 in closure[o])
        out += [("associated", a.assoc_id, o1, o2) for o1 in left for o2 in right]
    for o in sorted(objects):
        seen = set()
        for d in sorted(model.attributes, key=lambda d: (d.attr_id, d.owner_class)):
            if d.owner_class not in closure[o] or d.attr_id in seen:
                continue
            seen.add(d.attr_id)
            if (o, d.attr_id) in skip_value_groups:
                continue
            out += [("attribute_value", d.attr_id, o, v) for v in attribute_domain(d, config)]
    return out


def hard_violations(report: ValidationReport, rules: Iterable[ConstraintRule]) -> set:
    """Partial-mode violations that no amount of added facts can remove.

    Integrity violations other than minimum-cardinality and missing-value gaps
    only grow with more facts; so do atoms of rules without negation.
    """
    monotone_kinds = {r.kind for r in rules if not r.has_negation}
    negating_kinds = {r.kind for r in rules if r.has_negation}
    out = set()
    for v in report.violations:
        if v.kind in INTEGRITY_KINDS or (v.kind in monotone_kinds and v.kind not in negating_kinds):
            out.add(v)
    return out


def complete(model: Model, inst: Instantiation, rules: Iterable[ConstraintRule] = (),
             config: CompletionConfig | None = None) -> CompletionResult:
    """Find up to config.max_solutions valid extensions of `inst`.

    Solutions are canonicalised (new objects renamed from the id base) and
    pairwise non-isomorphic.
    """
    started = time.perf_counter()
    config = config or CompletionConfig()
    if inst.model_id != model.model_id:
        raise ModelMismatch(f"instantiation {inst.inst_id!r} belongs to model {inst.model_id!r}, "
                            f"not {model.model_id!r}")
    rules = [r for r in rules if r.applies_to(model.model_id)]
    check_references(rules, model)
    try:
        report = validate(model, inst, rules, PARTIAL)
    except UnknownIdentifier as e:
        raise CompletionError(str(e)) from None
    if hard_violations(report, rules):
        return CompletionResult([], INPUT_INVALID, report,
                                {"nodes": 0, "seconds": time.perf_counter() - started})

    id_base = default_id_base(inst, config)
    slots = allocate_slots(model, config, id_base)
    clash = {s.obj for s in slots} & inst.referenced_ids()
    if clash:
        raise CompletionError(f"id base {id_base} collides with existing objects {sorted(clash)}")
    objects: dict[int, set[str]] = {}
    for o, c in inst.isa:
        objects.setdefault(o, set()).add(c)
    for s in slots:
        objects[s.obj] = {s.cls}
    has_value = {(o, at) for at, o, _ in inst.values}
    fixed = inst.fact_keys()
    cands = [k for k in candidate_facts(model, objects, config, has_value) if k not in fixed]
    cands += [("isa", s.cls, s.obj) for s in slots]
    universe = Universe(model, rules, inst.inst_id, {o: set(cs) for o, cs in objects.items()
                                                      if o not in {s.obj for s in slots}},
                        slots=slots, fixed_true=fixed, candidates=_decision_order(cands),
                        min_new=dict(config.min_new_per_class))
    search = Search(universe)
    slot_ids = {s.obj for s in slots}
    solutions, new_sets, seen = [], [], set()
    gen = search.solutions()
    try:
        for sol, _ in gen:
            created = {o for o, _ in sol.isa} & slot_ids
            canon = canonicalize(sol, created, id_base)
            key = canonical_key(canon)
            if key in seen:
                continue
            seen.add(key)
            solutions.append(canon)
            new_sets.append({o for o, _ in canon.isa} - {o for o, _ in inst.isa})
            if len(solutions) >= config.max_solutions:
                break
    finally:
        gen.close()
    stats = {"nodes": search.stats.nodes, "leaves": search.stats.leaves,
             "seconds": time.perf_counter() - started}
    if not solutions:
        return CompletionResult([], UNSAT_WITHIN_BOUNDS, report, stats)
    return CompletionResult(solutions, None, report, stats, new_sets)


def _decision_order(keys: list[tuple]) -> list[tuple]:
    rank = {"isa": 0, "associated": 1, "attribute_value": 2}
    # values keep their domain order within an (object, attribute) group
    return sorted(keys, key=lambda k: (rank[k[0]],) + (tuple(fact_key_order(k[1:])) if k[0] != "attribute_value"
                                                         else (k[2], k[1])))


@dataclass
class ConsistencyResult:
    consistent: bool
    witness: Instantiation | None
    completion: CompletionResult

    @property
    def status(self) -> str:
        return "consistent" if self.consistent else "no_witness_within_bounds"


def check_model_consistency(model: Model, rules: Iterable[ConstraintRule] = (),
                            config: CompletionConfig | None = None,
                            inst_id: str = "c0") -> ConsistencyResult:
    """Complete the empty instantiation; the first solution is the witness."""
    empty = Instantiation(inst_id, model.model_id)
    res = complete(model, empty, rules, config)
    return ConsistencyResult(res.sat, res.solutions[0] if res.solutions else None, res)


__all__ = [
    "CompletionConfig", "CompletionError", "CompletionResult", "ConsistencyResult",
    "INPUT_INVALID", "SAT", "UNSAT_WITHIN_BOUNDS", "check_model_consistency", "complete",
]
