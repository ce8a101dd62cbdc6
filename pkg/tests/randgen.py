"""Random tiny models, instantiations and rule sets for equivalence tests."""

from __future__ import annotations

import random

from ooasp.completion import CompletionConfig
from ooasp.constraints import check_references, parse_constraints
from ooasp.ddl import load, parse_facts
from ooasp.completion import default_id_base
from ooasp.oracle import (
    OracleCapExceeded, _decision_points, _links, _new_ids, _value_groups, count_decision_points,
)

RULE_TEMPLATES = [
    # equal values across a link
    'cv same_value(X,Y) :- associated("{a}",X,Y), value("{p}",X,V), value("{p}",Y,V).',
    # negation over a value
    'cv not_two(X,Y) :- associated("{a}",X,Y), not value("{p}",Y,{v}).',
    # ordering between linked objects
    'cv ordered(X,Y) :- associated("{a}",X,Y), value("{p}",X,V), value("{p}",Y,W), V < W.',
    # successor arithmetic
    'cv succ(X,Y) :- associated("{a}",X,Y), value("{p}",X,V), value("{p}",Y,W), W = V + 1.',
    # class exclusion with negation
    'cv wrong_partner(X,Y) :- associated("{a}",X,Y), not isa(Y,"{c}").',
    # a value on a single object
    'cv forbidden(X) :- isa(X,"{c}"), value("{p}",X,{v}).',
]


def random_model(rng: random.Random, mid: str = "m") -> tuple[str, dict]:
    """Model text plus a description dict used to build instances and rules."""
    lines = []
    hier = rng.random() < 0.4
    leaves = ["A", "B"] if rng.random() < 0.7 else ["A"]
    classes = list(leaves)
    parent = {}
    if hier:
        classes.append("T")
        for c in leaves:
            parent[c] = "T"
    for c in classes:
        lines.append(f'ooasp_class("{mid}","{c}").')
    for c, p in parent.items():
        lines.append(f'ooasp_subclass("{mid}","{c}","{p}").')
    assocs = []
    for n in range(rng.choice([1, 1, 2])):
        c1, c2 = rng.choice(classes), rng.choice(classes)
        lo1, lo2 = rng.choice([0, 0, 1]), rng.choice([0, 0, 1])
        hi1, hi2 = lo1 + rng.choice([0, 1]) or 1, lo2 + rng.choice([0, 1]) or 1
        a = f"r{n}"
        assocs.append((a, c1, c2))
        lines.append(f'ooasp_assoc("{mid}","{a}","{c1}",{lo1},{hi1},"{c2}",{lo2},{hi2}).')
    attrs = []
    if rng.random() < 0.7:
        owner = rng.choice(classes)
        kind = rng.choice(["int", "int", "bool", "enum"])
        if kind == "int":
            lines.append(f'ooasp_attribute("{mid}","{owner}","p","integer").')
            lines.append(f'ooasp_attribute_minInclusive("{mid}","{owner}","p",1).')
            lines.append(f'ooasp_attribute_maxInclusive("{mid}","{owner}","p",{rng.choice([1, 2])}).')
            vals = ["1", "2"]
        elif kind == "bool":
            lines.append(f'ooasp_attribute("{mid}","{owner}","p","boolean").')
            vals = ['"true"', '"false"']
        else:
            lines.append(f'ooasp_attribute("{mid}","{owner}","p","string").')
            lines.append(f'ooasp_attribute_enum("{mid}","{owner}","p","x").')
            lines.append(f'ooasp_attribute_enum("{mid}","{owner}","p","y").')
            vals = ['"x"', '"y"']
        attrs.append(("p", owner, kind, vals))
    desc = {"classes": classes, "leaves": leaves, "parent": parent,
            "assocs": assocs, "attrs": attrs}
    return "\n".join(lines) + "\n", desc


def _closure(desc, c):
    out = {c}
    while c in desc["parent"]:
        c = desc["parent"][c]
        out.add(c)
    return out


def random_instance(rng: random.Random, desc: dict, mid: str, iid: str,
                    n_objects: int, n_facts: int, first_id: int = 1) -> str:
    lines = [f'ooasp_instantiation("{mid}","{iid}").']
    objs = {}
    for k in range(n_objects):
        o = first_id + k
        objs[o] = rng.choice(desc["leaves"])
        lines.append(f'ooasp_isa("{iid}","{objs[o]}",{o}).')
    extra = []
    for a, c1, c2 in desc["assocs"]:
        for o1, k1 in objs.items():
            for o2, k2 in objs.items():
                if c1 in _closure(desc, k1) and c2 in _closure(desc, k2):
                    extra.append(f'ooasp_associated("{iid}","{a}",{o1},{o2}).')
    for at, owner, _, vals in desc["attrs"]:
        for o, k in objs.items():
            if owner in _closure(desc, k):
                extra.append(f'ooasp_attribute_value("{iid}","{at}",{o},{rng.choice(vals)}).')
    rng.shuffle(extra)
    lines += sorted(extra[:n_facts])
    return "\n".join(lines) + "\n"


def random_rules(rng: random.Random, desc: dict) -> str:
    if not desc["assocs"] or not desc["attrs"] or rng.random() < 0.3:
        return ""
    out = []
    for tpl in rng.sample(RULE_TEMPLATES, rng.choice([1, 1, 2])):
        at, _, _, vals = desc["attrs"][0]
        out.append(tpl.format(a=rng.choice(desc["assocs"])[0], p=at, v=rng.choice(vals),
                              c=rng.choice(desc["classes"])))
    return "\n".join(out) + "\n"


def random_completion_case(rng: random.Random, cap: int = 12) -> tuple:
    """(model, inst, rules, config) with at most `cap` decision points."""
    while True:
        mtext, desc = random_model(rng)
        itext = random_instance(rng, desc, "m", "i", rng.choice([0, 1, 1, 2]), rng.choice([0, 1, 2]))
        rtext = random_rules(rng, desc)
        bounds = {c: rng.choice([0, 1, 1, 2]) for c in desc["leaves"]}
        ws = load(parse_facts(mtext + itext, "<random>"))
        model, inst = ws.model(), ws.instantiation()
        rules = parse_constraints(rtext, "<rules>") if rtext else []
        config = CompletionConfig(max_new_per_class=bounds, max_solutions=10_000)
        try:
            if count_decision_points(model, inst, config) > cap:
                continue
        except OracleCapExceeded:
            continue
        return model, inst, rules, config, (mtext, itext, rtext)


def mutate_model(rng: random.Random, mtext: str, desc: dict) -> str:
    """Target model text derived from a source model: same ids, one change."""
    text = mtext.replace('"m"', '"m2"')
    choice = rng.choice(["same", "range", "card", "drop_class", "drop_attr"])
    if choice == "range" and desc["attrs"] and desc["attrs"][0][2] == "int":
        text = text.replace('"p",2).', '"p",1).') if '"p",2).' in text else text.replace(
            'ooasp_attribute_maxInclusive("m2","' + desc["attrs"][0][1] + '","p",1).',
            'ooasp_attribute_maxInclusive("m2","' + desc["attrs"][0][1] + '","p",2).')
    elif choice == "card" and desc["assocs"]:
        lines = text.splitlines()
        idx = [n for n, ln in enumerate(lines) if ln.startswith("ooasp_assoc(")][0]
        parts = lines[idx].rstrip(").").split(",")
        parts[3] = "1"                       # min1 := 1
        parts[4] = str(max(1, int(parts[4])))
        lines[idx] = ",".join(parts) + ")."
        text = "\n".join(lines) + "\n"
    elif choice == "drop_class" and "B" in desc["leaves"]:
        keep = [ln for ln in text.splitlines() if '"B"' not in ln]
        text = "\n".join(keep) + "\n"
    elif choice == "drop_attr" and desc["attrs"]:
        keep = [ln for ln in text.splitlines() if '"p"' not in ln]
        text = "\n".join(keep) + "\n"
    return text


def random_reconciliation_case(rng: random.Random, cap: int = 14) -> tuple:
    """(legacy, target, rules, config) whose brute-force size stays within `cap`."""
    while True:
        mtext, desc = random_model(rng)
        ttext = mutate_model(rng, mtext, desc)
        itext = random_instance(rng, desc, "m", "old", rng.choice([1, 1, 2]), rng.choice([0, 1, 2, 3]))
        try:
            ws = load(parse_facts(mtext + ttext + itext, "<random>"))
        except Exception:
            continue
        legacy, target = ws.instantiation("old"), ws.model("m2")
        rtext = random_rules(rng, desc) if '"p"' in ttext else ""
        try:
            rules = parse_constraints(rtext, "<rules>") if rtext else []
            check_references(rules, target)
        except Exception:
            continue
        bounds = {c: rng.choice([0, 0, 1]) for c in desc["leaves"] if c in target.classes}
        config = CompletionConfig(max_new_per_class=bounds)
        if _repair_size(legacy, target, config) > cap:
            continue
        return legacy, target, rules, config, (mtext, ttext, itext, rtext)


def _repair_size(legacy, target, config) -> int:
    new = _new_ids(target, config, default_id_base(legacy, config))
    objs = {o: {c} for o, c in new}
    for o, c in legacy.isa:
        if c in target.classes:
            objs.setdefault(o, set()).add(c)
    return len(legacy.fact_keys()) + _decision_points(
        len(new), len(_links(target, objs)), len(_value_groups(target, objs, config, set())))
