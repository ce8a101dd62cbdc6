"""Brute-force reference implementations for completion and reconciliation.

These enumerate every assignment without pruning and keep the ones that
validate clean, so they are only usable on tiny inputs.  The search engines
are tested against them.

Why the enumeration is the right reference: the logic-program reading of a
model, an instantiation and a set of violation rules consists of choice rules
over the candidate facts, a stratified set of rules deriving violation atoms
from those facts, and constraints rejecting any violation atom.  For a fixed
choice of facts the stratified part has exactly one stable model, obtained
by evaluating the strata in order; the constraints then keep or reject it.
Hence the stable models correspond one-to-one to the fact assignments whose
validation report is empty, which is precisely what is enumerated here.

Two reductions keep the enumeration finite without changing the result set:

* at most one value per (object, attribute) group is tried, because two
  values always yield an ``attr_multiple`` violation;
* links and values are only enumerated over objects that exist in the
  assignment, because anything else is a ``dangling_reference``.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Iterator

from .canon import canonical_key, canonicalize
from .completion import CompletionConfig, default_id_base
from .constraints import ConstraintRule
from .model import Instantiation, Model, UnknownIdentifier
from .reconciliation import CostTable
from .validation import COMPLETE, validate

DEFAULT_CAP = 16


class OracleCapExceeded(ValueError):
    pass


def _new_ids(model: Model, config: CompletionConfig, id_base: int) -> list[tuple[int, str]]:
    out, nxt = [], id_base
    for cls in sorted(config.max_new_per_class):
        for _ in range(config.max_new_per_class[cls]):
            out.append((nxt, cls))
            nxt += 1
    return out


def _closure(model: Model, objects: dict[int, set[str]]) -> dict[int, set[str]]:
    return {o: set().union(*(model.ancestors(c) for c in cs if c in model.classes))
            for o, cs in objects.items()}


def _links(model: Model, objects: dict[int, set[str]]) -> list[tuple]:
    closure = _closure(model, objects)
    out = []
    for a in model.associations:
        for o1 in objects:
            for o2 in objects:
                if a.class1 in closure[o1] and a.class2 in closure[o2]:
                    out.append(("associated", a.assoc_id, o1, o2))
    return out


def _value_groups(model: Model, objects: dict[int, set[str]], config: CompletionConfig,
                  skip: set[tuple[int, str]]) -> list[list[tuple]]:
    """Per (object, attribute): the candidate value facts."""
    closure = _closure(model, objects)
    groups = []
    for o in objects:
        for at in sorted({d.attr_id for d in model.attributes if d.owner_class in closure[o]}):
            if (o, at) in skip:
                continue
            d = next(d for d in model.attributes if d.attr_id == at and d.owner_class in closure[o])
            dom = d.domain(config.default_int_domain)
            if dom is None:
                raise ValueError(f"attribute {at!r} has no finite domain")
            groups.append([("attribute_value", at, o, v) for v in dom])
    return groups


def _decision_points(n_slots: int, links: int, groups: int) -> int:
    return n_slots + links + groups


def _assignments(model: Model, base: set[tuple], objects: dict[int, set[str]],
                 new: list[tuple[int, str]], config: CompletionConfig,
                 exclude: set[tuple] = frozenset()) -> Iterator[set[tuple]]:
    """Every fact set base ∪ (slot isa facts) ∪ links ∪ at most one value per group.

    Facts in `exclude` are never added.
    """
    for pick in itertools.product((False, True), repeat=len(new)):
        present = dict(objects)
        added = set()
        for (o, cls), on in zip(new, pick):
            if on:
                present[o] = {cls}
                added.add(("isa", cls, o))
        have = {(k[2], k[1]) for k in base if k[0] == "attribute_value"}
        links = [k for k in _links(model, present) if k not in base and k not in exclude]
        groups = [[k for k in g if k not in exclude]
                  for g in _value_groups(model, present, config, have)]
        for link_pick in itertools.product((False, True), repeat=len(links)):
            chosen = {k for k, on in zip(links, link_pick) if on}
            for vals in itertools.product(*[[None] + g for g in groups]):
                yield base | added | chosen | {v for v in vals if v is not None}


def count_decision_points(model: Model, inst: Instantiation, config: CompletionConfig) -> int:
    objects: dict[int, set[str]] = {}
    for o, c in inst.isa:
        objects.setdefault(o, set()).add(c)
    new = _new_ids(model, config, default_id_base(inst, config))
    everything = dict(objects)
    everything.update({o: {c} for o, c in new})
    have = {(o, at) for at, o, _ in inst.values}
    links = [k for k in _links(model, everything) if k not in inst.fact_keys()]
    return _decision_points(len(new), len(links), len(_value_groups(model, everything, config, have)))


def _is_valid(model: Model, inst: Instantiation, rules: list[ConstraintRule]) -> bool:
    try:
        return validate(model, inst, rules, COMPLETE).valid
    except UnknownIdentifier:
        return False


def _min_new_ok(inst: Instantiation, new_ids: set[int], config: CompletionConfig) -> bool:
    counts: dict[str, int] = {}
    for o, c in inst.isa:
        if o in new_ids:
            counts[c] = counts.get(c, 0) + 1
    return all(counts.get(c, 0) >= n for c, n in config.min_new_per_class.items())


def enumerate_completions_bruteforce(model: Model, inst: Instantiation,
                                     rules: Iterable[ConstraintRule] = (),
                                     config: CompletionConfig | None = None,
                                     cap: int = DEFAULT_CAP) -> set[tuple]:
    """Canonical keys of every valid completion of `inst` within the bounds."""
    config = config or CompletionConfig()
    rules = [r for r in rules if r.applies_to(model.model_id)]
    points = count_decision_points(model, inst, config)
    if points > cap:
        raise OracleCapExceeded(f"{points} decision points exceed the cap of {cap}")
    id_base = default_id_base(inst, config)
    new = _new_ids(model, config, id_base)
    new_ids = {o for o, _ in new}
    objects: dict[int, set[str]] = {}
    for o, c in inst.isa:
        objects.setdefault(o, set()).add(c)
    out = set()
    for keys in _assignments(model, set(inst.fact_keys()), objects, new, config):
        cand = Instantiation.from_fact_keys(inst.inst_id, model.model_id, keys)
        if not _min_new_ok(cand, new_ids, config) or not _is_valid(model, cand, rules):
            continue
        created = {o for o, _ in cand.isa} & new_ids
        out.add(canonical_key(canonicalize(cand, created, id_base)))
    return out


def min_repair_cost_bruteforce(legacy: Instantiation, target_model: Model,
                               rules: Iterable[ConstraintRule] = (),
                               costs: CostTable | None = None,
                               config: CompletionConfig | None = None,
                               cap: int = DEFAULT_CAP) -> int | None:
    """Minimum total cost over all keep/delete subsets times all creations."""
    costs = costs or CostTable()
    config = config or CompletionConfig()
    rules = [r for r in rules if r.applies_to(target_model.model_id)]
    legacy_keys = sorted(legacy.fact_keys(), key=repr)
    legacy_set = set(legacy_keys)
    id_base = default_id_base(legacy, config)
    new = _new_ids(target_model, config, id_base)
    new_ids = {o for o, _ in new}

    everything: dict[int, set[str]] = {o: {c} for o, c in new}
    for o, c in legacy.isa:
        if c in target_model.classes:
            everything.setdefault(o, set()).add(c)
    creation_points = _decision_points(len(new), len(_links(target_model, everything)),
                                       len(_value_groups(target_model, everything, config, set())))
    if len(legacy_keys) + creation_points > cap:
        raise OracleCapExceeded(f"{len(legacy_keys)} legacy facts plus {creation_points} "
                                f"decision points exceed the cap of {cap}")

    best = None
    for keep in itertools.product((False, True), repeat=len(legacy_keys)):
        kept = {k for k, on in zip(legacy_keys, keep) if on}
        base_cost = sum(costs.cost("reuse" if on else "delete", k[0])
                        for k, on in zip(legacy_keys, keep))
        if best is not None and base_cost >= best:
            continue
        objects: dict[int, set[str]] = {}
        for k in kept:
            if k[0] == "isa" and k[1] in target_model.classes:
                objects.setdefault(k[2], set()).add(k[1])
        for keys in _assignments(target_model, kept, objects, new, config, exclude=legacy_set):
            created = keys - kept
            cost = base_cost + sum(costs.cost("create", k[0]) for k in created)
            if best is not None and cost >= best:
                continue
            cand = Instantiation.from_fact_keys(legacy.inst_id, target_model.model_id, keys)
            if _min_new_ok(cand, new_ids, config) and _is_valid(target_model, cand, rules):
                best = cost
    return best


__all__ = [
    "DEFAULT_CAP", "OracleCapExceeded", "count_decision_points",
    "enumerate_completions_bruteforce", "min_repair_cost_bruteforce",
]
