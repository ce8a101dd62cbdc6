"""Reconciliation: minimum-cost repair of a legacy instantiation under a target model.

Every legacy fact is either reused or deleted; new facts may be created.  The
result must validate in complete mode against the target model and rules.
Costs come from a table indexed by (action, fact kind); the default is
reuse 0, delete 1, create 1, so changing an attribute value costs 2.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any, Iterable

from .canon import canonicalize, fact_key_order
from .completion import (
    CompletionConfig,
    CompletionError,
    _decision_order,
    allocate_slots,
    candidate_facts,
    default_id_base,
)
from .constraints import ConstraintRule, check_references
from .model import FACT_KINDS, Instantiation, Model
from .search import Search, Universe

ACTIONS = ("reuse", "delete", "create")
DEFAULT_COSTS = {"reuse": 0, "delete": 1, "create": 1}


class CostTableError(ValueError):
    pass


@dataclass(frozen=True)
class CostTable:
    costs: dict = field(default_factory=dict)

    def __post_init__(self):
        full = {(a, k): DEFAULT_COSTS[a] for a in ACTIONS for k in FACT_KINDS}
        for (a, k), c in self.costs.items():
            if a not in ACTIONS or k not in FACT_KINDS:
                raise CostTableError(f"unknown cost entry ({a}, {k})")
            if not isinstance(c, int) or c < 0:
                raise CostTableError(f"cost of ({a}, {k}) must be a non-negative integer")
            full[(a, k)] = c
        object.__setattr__(self, "costs", full)

    def cost(self, action: str, kind: str) -> int:
        return self.costs[(action, kind)]

    @classmethod
    def parse(cls, text: str) -> CostTable:
        """Read ``action kind cost`` lines; ``%`` starts a comment."""
        entries = {}
        for n, line in enumerate(text.splitlines(), 1):
            line = line.split("%", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise CostTableError(f"line {n}: expected 'action kind cost', got {line!r}")
            action, kind, cost = parts
            try:
                entries[(action, kind)] = int(cost)
            except ValueError:
                raise CostTableError(f"line {n}: cost {cost!r} is not an integer") from None
        return cls(entries)

    @classmethod
    def read(cls, path) -> CostTable:
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read())


@dataclass(frozen=True)
class ReifiedFact:
    fact: tuple
    origin: str = "legacy"

    @property
    def kind(self) -> str:
        return self.fact[0]


def reify(inst: Instantiation) -> frozenset[ReifiedFact]:
    """One reified fact per instance-level fact of `inst`."""
    return frozenset(ReifiedFact(k) for k in inst.fact_keys())


@dataclass
class ChangeSet:
    reused: frozenset[ReifiedFact]
    deleted: frozenset[ReifiedFact]
    created: frozenset[tuple]
    total_cost: int
    result: Instantiation
    stats: dict[str, Any] = field(default_factory=dict, compare=False)

    def sort_key(self) -> tuple:
        return (tuple(sorted(fact_key_order(f.fact) for f in self.deleted)),
                tuple(sorted(fact_key_order(k) for k in self.created)))

    def to_json(self) -> dict:
        def rows(keys):
            return [list(k) for k in sorted(keys, key=fact_key_order)]
        return {
            "schema": "ooasp-changeset/1",
            "instantiation": self.result.inst_id,
            "model": self.result.model_id,
            "total_cost": self.total_cost,
            "reused": rows(f.fact for f in self.reused),
            "deleted": rows(f.fact for f in self.deleted),
            "created": rows(self.created),
        }


def changeset_cost(costs: CostTable, reused: Iterable[tuple], deleted: Iterable[tuple],
                   created: Iterable[tuple]) -> int:
    return (sum(costs.cost("reuse", k[0]) for k in reused)
            + sum(costs.cost("delete", k[0]) for k in deleted)
            + sum(costs.cost("create", k[0]) for k in created))


def forced_deletions(legacy: Instantiation, target: Model) -> set[tuple]:
    """Legacy facts no valid result can contain, whatever else is decided."""
    forced = set()
    classes: dict[int, set[str]] = {}
    for o, c in legacy.isa:
        if c in target.classes:
            classes.setdefault(o, set()).add(c)
        else:
            forced.add(("isa", c, o))
    closure = {o: set().union(*(target.ancestors(c) for c in cs)) for o, cs in classes.items()}
    for a_id, o1, o2 in legacy.links:
        key = ("associated", a_id, o1, o2)
        if not target.has_association(a_id) or o1 not in closure or o2 not in closure:
            forced.add(key)
            continue
        a = target.association(a_id)
        if a.class1 not in closure[o1] or a.class2 not in closure[o2]:
            forced.add(key)
    for at, o, v in legacy.values:
        key = ("attribute_value", at, o, v)
        if o not in closure:
            forced.add(key)
            continue
        decls = [d for d in target.attributes if d.attr_id == at and d.owner_class in closure[o]]
        if not decls or not any(d.accepts_type(v) for d in decls):
            forced.add(key)
            continue
        d = decls[0]
        if d.base_type == "integer" and not d.in_range(v):
            forced.add(key)
        elif d.base_type == "string" and d.enum_values and v not in d.enum_values:
            forced.add(key)
    return forced


def reconcile(legacy: Instantiation, target_model: Model, rules: Iterable[ConstraintRule] = (),
              costs: CostTable | None = None, config: CompletionConfig | None = None,
              tie_break: bool = True) -> ChangeSet | None:
    """Cheapest ChangeSet turning `legacy` into a valid instantiation of `target_model`.

    Returns None when no valid result exists within the object bounds of
    `config`.  Among optimal change sets the one with the lexicographically
    smallest (deleted, created) fact lists after canonical renaming of new
    objects is returned; tie_break=False returns the first optimum found.
    """
    started = time.perf_counter()
    costs = costs or CostTable()
    config = config or CompletionConfig()
    rules = [r for r in rules if r.applies_to(target_model.model_id)]
    check_references(rules, target_model)

    legacy_keys = legacy.fact_keys()
    forced = forced_deletions(legacy, target_model)
    free = legacy_keys - forced
    id_base = default_id_base(legacy, config)
    slots = allocate_slots(target_model, config, id_base)
    clash = {s.obj for s in slots} & legacy.referenced_ids()
    if clash:
        raise CompletionError(f"id base {id_base} collides with legacy objects {sorted(clash)}")

    objects: dict[int, set[str]] = {}
    for k in free:
        if k[0] == "isa":
            objects.setdefault(k[2], set()).add(k[1])
    for s in slots:
        objects[s.obj] = {s.cls}
    cands = [k for k in candidate_facts(target_model, objects, config) if k not in legacy_keys]
    cands += [("isa", s.cls, s.obj) for s in slots]
    order = _decision_order(list(free)) + _decision_order(cands)

    cost_true = {k: costs.cost("reuse", k[0]) for k in free}
    cost_false = {k: costs.cost("delete", k[0]) for k in free}
    cost_true.update({k: costs.cost("create", k[0]) for k in cands})
    forced_cost = sum(costs.cost("delete", k[0]) for k in forced)

    universe = Universe(target_model, rules, legacy.inst_id,
                        {o: cs for o, cs in objects.items() if o not in {s.obj for s in slots}},
                        slots=slots, candidates=order, legacy=set(free),
                        cost_true=cost_true, cost_false=cost_false,
                        min_new=dict(config.min_new_per_class))

    search = Search(universe)
    best: tuple[int, set[tuple]] | None = None
    for _, cost in search.solutions():
        best = (cost, search.true_keys())
        search.best = cost
    nodes = search.stats.nodes
    if best is None:
        return None

    slot_ids = {s.obj for s in slots}

    def make(true_keys: set[tuple]) -> ChangeSet:
        result = Instantiation.from_fact_keys(legacy.inst_id, target_model.model_id, true_keys)
        created_objs = {o for o, _ in result.isa} & slot_ids
        result = canonicalize(result, created_objs, id_base)
        kept = legacy_keys & result.fact_keys()
        created = result.fact_keys() - legacy_keys
        deleted = legacy_keys - kept
        total = changeset_cost(costs, kept, deleted, created)
        return ChangeSet(frozenset(ReifiedFact(k) for k in kept),
                         frozenset(ReifiedFact(k) for k in deleted),
                         frozenset(created), total, result)

    chosen = make(best[1])
    assert chosen.total_cost == best[0] + forced_cost
    if tie_break:
        ties = Search(universe)
        ties.best = best[0]
        ties.keep_ties = True
        for _, cost in ties.solutions():
            if cost == best[0]:
                cand = make(ties.true_keys())
                if cand.sort_key() < chosen.sort_key():
                    chosen = cand
        nodes += ties.stats.nodes
    chosen.stats = {"nodes": nodes, "seconds": time.perf_counter() - started,
                    "forced_deletions": len(forced)}
    return chosen
