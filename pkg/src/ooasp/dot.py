"""Graphviz DOT rendering of instantiations and change sets."""

from __future__ import annotations

from typing import Iterable

from .canon import fact_key_order
from .model import Instantiation

_NL = "\\n"


def _quote(s) -> str:
    # labels use DOT's own \n escape for line breaks, so backslashes pass through
    return '"' + str(s).replace('"', '\\"') + '"'


def _label(obj: int, classes: Iterable[str], values: list[tuple]) -> str:
    head = f"{obj}: {', '.join(sorted(classes))}"
    rows = [f"{at} = {v}" for at, v in values]
    return _NL.join([head] + rows)


def instantiation_dot(inst: Instantiation, existing: Iterable[int] = ()) -> str:
    """Objects listed in `existing` are filled gray; new objects stay white."""
    existing = set(existing)
    values: dict[int, list[tuple]] = {}
    for at, o, v in sorted(inst.values, key=fact_key_order):
        values.setdefault(o, []).append((at, v))
    lines = [f"digraph {_quote(inst.inst_id)} {{", "  node [shape=box, style=filled];"]
    for o in inst.object_ids:
        fill = "lightgray" if o in existing else "white"
        lines.append(f"  {o} [label={_quote(_label(o, inst.classes_of(o), values.get(o, [])))}, "
                     f"fillcolor={fill}];")
    for a, o1, o2 in sorted(inst.links, key=fact_key_order):
        lines.append(f"  {o1} -> {o2} [label={_quote(a)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def changeset_dot(changes) -> str:
    """Union of legacy and result: deleted facts dashed red, created facts bold green."""
    deleted = {f.fact for f in changes.deleted}
    reused = {f.fact for f in changes.reused}
    created = set(changes.created)
    style = {**{k: "reused" for k in reused}, **{k: "deleted" for k in deleted},
             **{k: "created" for k in created}}
    attrs = {"reused": "", "deleted": ", color=red, fontcolor=red, style=dashed",
             "created": ", color=darkgreen, fontcolor=darkgreen, penwidth=2"}
    objects: dict[int, list[tuple]] = {}
    for k, s in style.items():
        if k[0] == "isa":
            objects.setdefault(k[2], []).append((k, s))
    for k, s in style.items():
        if k[0] != "isa":
            objects.setdefault(k[2], [])
            if k[0] == "associated":
                objects.setdefault(k[3], [])

    lines = [f"digraph {_quote(changes.result.inst_id)} {{", "  node [shape=box];"]
    for o in sorted(objects):
        isa = sorted(objects[o], key=lambda x: fact_key_order(x[0]))
        kinds = {s for _, s in isa}
        state = "deleted" if kinds == {"deleted"} else "created" if kinds == {"created"} else "reused"
        rows = [f"{o}: " + ", ".join(f"{k[1]}{'' if s == 'reused' else ' (' + s + ')'}"
                                     for k, s in isa)]
        for k in sorted((k for k in style if k[0] == "attribute_value" and k[2] == o),
                        key=fact_key_order):
            mark = {"reused": "", "deleted": "  [-]", "created": "  [+]"}[style[k]]
            rows.append(f"{k[1]} = {k[3]}{mark}")
        fill = ", style=filled, fillcolor=lightgray" if state == "reused" else ""
        lines.append(f"  {o} [label={_quote(_NL.join(rows))}{attrs[state]}{fill}];")
    for k in sorted((k for k in style if k[0] == "associated"), key=fact_key_order):
        lines.append(f"  {k[2]} -> {k[3]} [label={_quote(k[1])}{attrs[style[k]]}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
