"""Backtracking search over instance facts.

Completion and reconciliation share one engine.  Every fact that may appear
in a result is a boolean variable: isa facts (object existence), links
between correctly typed objects, and attribute values drawn from finite
domains.  Facts of the input are either fixed (completion) or free with a
reuse/delete cost (reconciliation).

Propagation enforces association cardinalities, exactly one value per
attribute, existence of linked objects, and domain-specific rules whose
positive body is already certain.  Every leaf is re-validated in complete
mode before it is reported.

New objects are drawn from per-class pools of slots.  Slots that no decision
has touched yet are interchangeable, so only the lowest of them is tried as a
fresh partner or as a fresh object; solutions are compared up to renaming of
new objects anyway.
"""

from __future__ import annotations

import sys
import time
from dataclasses import dataclass, field
from typing import Any, Iterator

from .constraints import ConstraintRule, FactView, Literal, derive
from .model import Instantiation, Model
from .validation import COMPLETE, validate


class Conflict(Exception):
    pass


@dataclass
class Slot:
    obj: int
    cls: str
    index: int


@dataclass
class Universe:
    """Objects and candidate facts a search may decide on."""

    model: Model
    rules: list[ConstraintRule]
    inst_id: str
    existing: dict[int, set[str]]            # object -> declared classes (any, incl. unknown)
    slots: list[Slot] = field(default_factory=list)
    fixed_true: set[tuple] = field(default_factory=set)
    fixed_false: set[tuple] = field(default_factory=set)
    candidates: list[tuple] = field(default_factory=list)   # free facts, in decision order
    legacy: set[tuple] = field(default_factory=set)          # free facts that are input facts
    cost_true: dict[tuple, int] = field(default_factory=dict)
    cost_false: dict[tuple, int] = field(default_factory=dict)
    min_new: dict[str, int] = field(default_factory=dict)


@dataclass
class Stats:
    nodes: int = 0
    leaves: int = 0
    started: float = field(default_factory=time.perf_counter)

    @property
    def seconds(self) -> float:
        return time.perf_counter() - self.started


class _View(FactView):
    """Three-valued view of the current search state for rule evaluation."""

    def __init__(self, search: Search):
        self.model = search.model
        self.s = search
        self.isa_index = search.isa_true
        self.link_index = search.link_true
        self.value_index = search.value_true

    def maybe_isa(self, obj, cls) -> bool:
        s = self.s
        return any(s.state[v] is not False for v in s.isa_vars.get(obj, ())
                   if cls in s.closure_of_var[v])

    def maybe_link(self, assoc, o1, o2) -> bool:
        v = self.s.index.get(("associated", assoc, o1, o2))
        return v is not None and self.s.state[v] is not False

    def maybe_value(self, attr, obj, val) -> bool:
        v = self.s.index.get(("attribute_value", attr, obj, val))
        return v is not None and self.s.state[v] is not False


class Search:
    def __init__(self, u: Universe):
        self.u = u
        self.model = u.model
        self.rules = [r for r in u.rules if r.applies_to(u.model.model_id)]
        keys = sorted(u.fixed_true) + sorted(u.fixed_false) + list(u.candidates)
        self.keys: list[tuple] = keys
        self.index = {k: i for i, k in enumerate(keys)}
        if len(self.index) != len(keys):
            raise ValueError("duplicate fact variable")
        n = len(keys)
        self.state: list[Any] = [None] * n
        self.cost_t = [u.cost_true.get(k, 0) for k in keys]
        self.cost_f = [u.cost_false.get(k, 0) for k in keys]
        self.is_legacy = [k in u.legacy for k in keys]
        self.cost = 0
        self.trail: list[int] = []
        self.queue: list[int] = []
        self.stats = Stats()

        m = self.model
        self.slot_of = {s.obj: s for s in u.slots}
        self.slots_by_class: dict[str, list[int]] = {}
        for s in sorted(u.slots, key=lambda s: (s.cls, s.index)):
            self.slots_by_class.setdefault(s.cls, []).append(s.obj)

        # per-variable structure
        self.isa_vars: dict[int, list[int]] = {}
        self.closure_of_var: dict[int, frozenset[str]] = {}
        self.obj_vars: dict[int, list[int]] = {}
        self.var_objs: list[tuple[int, ...]] = []
        for i, k in enumerate(keys):
            if k[0] == "isa":
                o = k[2]
                self.isa_vars.setdefault(o, []).append(i)
                self.closure_of_var[i] = frozenset(m.ancestors(k[1]) if k[1] in m.classes else (k[1],))
                self.var_objs.append((o,))
            elif k[0] == "associated":
                objs = (k[2],) if k[2] == k[3] else (k[2], k[3])
                self.var_objs.append(objs)
                for o in objs:
                    self.obj_vars.setdefault(o, []).append(i)
            else:
                self.var_objs.append((k[2],))
                self.obj_vars.setdefault(k[2], []).append(i)

        # cardinality groups: (obj, assoc, side) -> link vars
        self.card_groups: list[tuple[int, str, int, str, int, int, list[int]]] = []
        self.var_card_groups: dict[int, list[int]] = {}
        self.obj_card_groups: dict[int, list[int]] = {}
        gid: dict[tuple, int] = {}
        for i, k in enumerate(keys):
            if k[0] != "associated" or not m.has_association(k[1]):
                continue
            a = m.association(k[1])
            for side, o in ((1, k[2]), (2, k[3])):
                g = gid.get((o, a.assoc_id, side))
                if g is None:
                    lo, hi = a.bounds(side)
                    g = gid[(o, a.assoc_id, side)] = len(self.card_groups)
                    self.card_groups.append((o, a.assoc_id, side, a.endpoint(side), lo, hi, []))
                    self.obj_card_groups.setdefault(o, []).append(g)
                self.card_groups[g][6].append(i)
                self.var_card_groups.setdefault(i, []).append(g)
        # objects with no candidate partner at all still carry their minimum
        for o in list(self.isa_vars):
            for a in sorted(m.associations, key=lambda a: a.assoc_id):
                for side in (1, 2):
                    lo, hi = a.bounds(side)
                    if lo > 0 and (o, a.assoc_id, side) not in gid:
                        gid[(o, a.assoc_id, side)] = len(self.card_groups)
                        self.card_groups.append((o, a.assoc_id, side, a.endpoint(side), lo, hi, []))
                        self.obj_card_groups.setdefault(o, []).append(gid[(o, a.assoc_id, side)])

        # value groups: (obj, attr) -> value vars, with the owner classes making it mandatory
        self.value_groups: list[tuple[int, str, frozenset[str], list[int]]] = []
        self.var_value_group: dict[int, int] = {}
        self.obj_value_groups: dict[int, list[int]] = {}
        vid: dict[tuple, int] = {}
        owners: dict[str, frozenset[str]] = {}
        for d in m.attributes:
            owners[d.attr_id] = owners.get(d.attr_id, frozenset()) | {d.owner_class}
        for o in self.isa_vars:
            possible = set().union(*(self.closure_of_var[v] for v in self.isa_vars[o]))
            for d in sorted(m.attributes, key=lambda d: d.attr_id):
                if d.owner_class in possible and (o, d.attr_id) not in vid:
                    vid[(o, d.attr_id)] = len(self.value_groups)
                    self.value_groups.append((o, d.attr_id, owners[d.attr_id], []))
                    self.obj_value_groups.setdefault(o, []).append(vid[(o, d.attr_id)])
        for i, k in enumerate(keys):
            if k[0] == "attribute_value":
                g = vid.get((k[2], k[1]))
                if g is None:
                    g = vid[(k[2], k[1])] = len(self.value_groups)
                    self.value_groups.append((k[2], k[1], frozenset(), []))
                    self.obj_value_groups.setdefault(k[2], []).append(g)
                self.value_groups[g][3].append(i)
                self.var_value_group[i] = g

        # rules indexed by the (predicate, polarity) pairs in their bodies
        self.rule_triggers: dict[tuple[str, bool], list[ConstraintRule]] = {}
        pinned: set[int] = set()
        for r in self.rules:
            for lit in r.body:
                if isinstance(lit, Literal):
                    key = (lit.atom.pred, lit.positive)
                    if r not in self.rule_triggers.get(key, []):
                        self.rule_triggers.setdefault(key, []).append(r)
                    pinned.update(a for a in lit.atom.args if isinstance(a, int))
        # slots named by a rule are not interchangeable with their siblings
        self.pinned = pinned

        self.isa_true: dict[str, dict[int, int]] = {}
        self.link_true: dict[str, set[tuple[int, int]]] = {}
        self.value_true: dict[str, set[tuple[int, Any]]] = {}
        self.view = _View(self)
        self.best: int | None = None
        self.keep_ties = False

    # -- state ----------------------------------------------------------------

    def _index_add(self, i: int) -> None:
        k = self.keys[i]
        if k[0] == "isa":
            for c in self.closure_of_var[i]:
                d = self.isa_true.setdefault(c, {})
                d[k[2]] = d.get(k[2], 0) + 1
        elif k[0] == "associated":
            self.link_true.setdefault(k[1], set()).add((k[2], k[3]))
        else:
            self.value_true.setdefault(k[1], set()).add((k[2], k[3]))

    def _index_remove(self, i: int) -> None:
        k = self.keys[i]
        if k[0] == "isa":
            for c in self.closure_of_var[i]:
                d = self.isa_true[c]
                d[k[2]] -= 1
                if not d[k[2]]:
                    del d[k[2]]
        elif k[0] == "associated":
            self.link_true[k[1]].discard((k[2], k[3]))
        else:
            self.value_true[k[1]].discard((k[2], k[3]))

    def assign(self, i: int, val: bool) -> None:
        st = self.state[i]
        if st is not None:
            if st != val:
                raise Conflict
            return
        self.state[i] = val
        self.trail.append(i)
        self.cost += self.cost_t[i] if val else self.cost_f[i]
        if val:
            self._index_add(i)
        self.queue.append(i)

    def undo(self, mark: int) -> None:
        while len(self.trail) > mark:
            i = self.trail.pop()
            val = self.state[i]
            self.cost -= self.cost_t[i] if val else self.cost_f[i]
            if val:
                self._index_remove(i)
            self.state[i] = None
        self.queue.clear()

    def exists(self, o: int):
        vs = [self.state[v] for v in self.isa_vars.get(o, ())]
        if any(v is True for v in vs):
            return True
        if all(v is False for v in vs):
            return False
        return None

    def certainly_in(self, o: int, cls: str) -> bool:
        return any(self.state[v] is True and cls in self.closure_of_var[v]
                   for v in self.isa_vars.get(o, ()))

    # -- propagation ------------------------------------------------------------

    def propagate(self) -> None:
        q = self.queue
        while q:
            i = q.pop()
            self._propagate_var(i)

    def _propagate_var(self, i: int) -> None:
        k = self.keys[i]
        val = self.state[i]
        if k[0] == "isa":
            o = k[2]
            if val:
                for g in self.obj_card_groups.get(o, ()):
                    self._check_card(g)
                for g in self.obj_value_groups.get(o, ()):
                    self._check_values(g)
            elif self.exists(o) is False:
                for w in self.obj_vars.get(o, ()):
                    self.assign(w, False)
        else:
            if val:
                for o in self.var_objs[i]:
                    self._ensure_exists(o)
            for g in self.var_card_groups.get(i, ()):
                self._check_card(g)
            g = self.var_value_group.get(i)
            if g is not None:
                self._check_values(g)
        self._check_rules(i, k, val)

    def _ensure_exists(self, o: int) -> None:
        und = None
        n_und = 0
        for v in self.isa_vars.get(o, ()):
            st = self.state[v]
            if st is True:
                return
            if st is None:
                und = v
                n_und += 1
        if n_und == 0:
            raise Conflict
        if n_und == 1:
            self.assign(und, True)

    def _check_card(self, g: int) -> None:
        o, _, _, cls, lo, hi, vs = self.card_groups[g]
        t = u = 0
        for v in vs:
            st = self.state[v]
            if st is True:
                t += 1
            elif st is None:
                u += 1
        if t > hi:
            raise Conflict
        if t == hi and u:
            for v in vs:
                if self.state[v] is None:
                    self.assign(v, False)
            return
        if lo > t and self.certainly_in(o, cls):
            if t + u < lo:
                raise Conflict
            if t + u == lo:
                for v in vs:
                    if self.state[v] is None:
                        self.assign(v, True)

    def _check_values(self, g: int) -> None:
        o, _, owners, vs = self.value_groups[g]
        t = u = 0
        last = None
        for v in vs:
            st = self.state[v]
            if st is True:
                t += 1
            elif st is None:
                u += 1
                last = v
        if t > 1:
            raise Conflict
        if t == 1:
            if u:
                for v in vs:
                    if self.state[v] is None:
                        self.assign(v, False)
            return
        if any(self.certainly_in(o, c) for c in owners):
            if u == 0:
                raise Conflict
            if u == 1:
                self.assign(last, True)

    def _check_rules(self, i: int, k: tuple, val: bool) -> None:
        pred = {"isa": "isa", "associated": "associated", "attribute_value": "value"}[k[0]]
        for rule in self.rule_triggers.get((pred, val), ()):
            if derive(rule, self.view, self.u.inst_id, seed=k, seed_positive=val):
                raise Conflict

    # -- bounds -----------------------------------------------------------------

    def lower_bound(self) -> int:
        """Cost so far plus an admissible estimate of the cost still to come."""
        extra = 0
        for o, _, owners, vs in self.value_groups:
            if any(self.state[v] is True for v in vs):
                continue
            if not any(self.certainly_in(o, c) for c in owners):
                continue
            costs = [self.cost_t[v] for v in vs if self.state[v] is None]
            if costs:
                extra += min(costs)
        card = 0
        for o, _, _, cls, lo, _, vs in self.card_groups:
            t = sum(1 for v in vs if self.state[v] is True)
            if t >= lo or not self.certainly_in(o, cls):
                continue
            costs = sorted(self.cost_t[v] for v in vs if self.state[v] is None)
            card += sum(costs[: lo - t])
        # a link can close a gap on both of its ends
        return self.cost + extra + card // 2

    # -- branching --------------------------------------------------------------

    def _untouched(self, o: int) -> bool:
        if o not in self.slot_of or o in self.pinned:
            return False
        if any(self.state[v] is not None for v in self.isa_vars[o]):
            return False
        return all(self.state[v] is None for v in self.obj_vars.get(o, ()))

    def _branches(self) -> list[list[tuple[int, bool]]] | None:
        """Alternative decision lists for the next choice point; None at a leaf."""
        st = self.state
        # 0. input facts under reconciliation: cheaper alternative first
        for i, k in enumerate(self.keys):
            if st[i] is None and self.is_legacy[i]:
                first = self.cost_t[i] <= self.cost_f[i]
                return [[(i, first)], [(i, not first)]]
        # 1. unmet minimum cardinalities of existing objects
        best_g, best_c = None, None
        for g, (o, _, _, cls, lo, _, vs) in enumerate(self.card_groups):
            if lo == 0:
                continue
            t = sum(1 for v in vs if st[v] is True)
            if t >= lo or not self.certainly_in(o, cls):
                continue
            cands = [v for v in vs if st[v] is None]
            if best_c is None or len(cands) < len(best_c):
                best_g, best_c = g, cands
        if best_g is not None:
            return self._partner_branches(best_g, best_c)
        # 2. existence of new objects
        for cls, objs in sorted(self.slots_by_class.items()):
            for o in objs:
                v = self.isa_vars[o][0]
                if st[v] is not None:
                    continue
                if self._untouched(o):
                    rest = [(self.isa_vars[x][0], False) for x in objs
                            if st[self.isa_vars[x][0]] is None and self._untouched(x)]
                    return [rest, [(v, True)]]
                return [[(v, False)], [(v, True)]]
        # 3. optional links
        for i, k in enumerate(self.keys):
            if st[i] is None and k[0] == "associated":
                first = self.cost_t[i] < self.cost_f[i]
                return [[(i, first)], [(i, not first)]]
        # 4. attribute values
        for o, _, _, vs in self.value_groups:
            if any(st[v] is True for v in vs):
                continue
            cands = [v for v in vs if st[v] is None]
            if not cands:
                continue
            cands.sort(key=lambda v: self.cost_t[v] - self.cost_f[v])
            out = []
            for n, v in enumerate(cands):
                out.append([(w, False) for w in cands[:n]] + [(v, True)])
            out.append([(w, False) for w in cands])
            return out
        for i in range(len(self.keys)):
            if st[i] is None:
                first = self.cost_t[i] < self.cost_f[i]
                return [[(i, first)], [(i, not first)]]
        return None

    def _partner_branches(self, g: int, cands: list[int]) -> list[list[tuple[int, bool]]]:
        o = self.card_groups[g][0]
        def partner(v):
            k = self.keys[v]
            return k[3] if k[2] == o else k[2]
        settled, fresh = [], {}
        for v in cands:
            p = partner(v)
            if p != o and self._untouched(p):
                cls = self.slot_of[p].cls
                if cls not in fresh or self.slot_of[p].index < self.slot_of[partner(fresh[cls])].index:
                    fresh[cls] = v
            else:
                settled.append(v)
        settled.sort(key=lambda v: (self.exists(partner(v)) is not True, partner(v)))
        order = settled + [fresh[c] for c in sorted(fresh)]
        return [[(w, False) for w in order[:n]] + [(v, True)] for n, v in enumerate(order)]

    # -- driver -----------------------------------------------------------------

    def _apply(self, decisions: list[tuple[int, bool]]) -> bool:
        try:
            for i, val in decisions:
                self.assign(i, val)
            self.propagate()
        except Conflict:
            self.queue.clear()
            return False
        return True

    def setup(self) -> bool:
        u = self.u
        decisions = [(self.index[k], True) for k in sorted(u.fixed_true)]
        decisions += [(self.index[k], False) for k in sorted(u.fixed_false)]
        for cls, n in u.min_new.items():
            objs = self.slots_by_class.get(cls, [])
            if n > len(objs):
                return False
            decisions += [(self.isa_vars[o][0], True) for o in objs[:n]]
        # every object present must keep its minimums checked from the start
        if not self._apply(decisions):
            return False
        try:
            for g in range(len(self.card_groups)):
                self._check_card(g)
            for g in range(len(self.value_groups)):
                self._check_values(g)
            self.propagate()
        except Conflict:
            return False
        return True

    def _pruned(self) -> bool:
        if self.best is None:
            return False
        lb = self.lower_bound()
        return lb > self.best if self.keep_ties else lb >= self.best

    def solutions(self) -> Iterator[tuple[Instantiation, int]]:
        """Yield (instantiation, cost) for every valid leaf, in search order."""
        if not self.setup():
            return
        old = sys.getrecursionlimit()
        sys.setrecursionlimit(max(old, 20 * len(self.keys) + 1000))
        try:
            yield from self._dfs()
        finally:
            sys.setrecursionlimit(old)

    def _dfs(self) -> Iterator[tuple[Instantiation, int]]:
        self.stats.nodes += 1
        if self._pruned():
            return
        branches = self._branches()
        if branches is None:
            self.stats.leaves += 1
            inst = self.current()
            if validate(self.model, inst, self.rules, COMPLETE).valid:
                yield inst, self.cost
            return
        for decisions in branches:
            mark = len(self.trail)
            if self._apply(decisions):
                yield from self._dfs()
            self.undo(mark)

    def current(self) -> Instantiation:
        keys = [k for i, k in enumerate(self.keys) if self.state[i] is True]
        return Instantiation.from_fact_keys(self.u.inst_id, self.model.model_id, keys)

    def true_keys(self) -> set[tuple]:
        return {k for i, k in enumerate(self.keys) if self.state[i] is True}
