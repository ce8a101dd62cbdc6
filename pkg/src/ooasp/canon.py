"""Canonical renaming of newly created objects.

Two instantiations that differ only in the ids of their new objects get the
same canonical form: new objects are coloured by class, colours are refined
by the facts each object takes part in, remaining ties are broken by trying
every member of the first tied cell, and the lexicographically smallest
relabelled fact list wins.  Canonical ids are handed out from ``id_base`` in
(class, colour) order.
"""

from __future__ import annotations

from typing import Iterable

from .model import Instantiation, arg_key


def _enc(x, new: set[int], colour: dict[int, int], me: int | None):
    if x == me:
        return (2, 0)
    if x in new:
        return (1, colour[x])
    return (0, x)


def _fact_view(key: tuple, new: set[int], colour: dict[int, int], me: int | None) -> tuple:
    kind = key[0]
    if kind == "isa":
        return (kind, key[1], _enc(key[2], new, colour, me))
    if kind == "associated":
        return (kind, key[1], _enc(key[2], new, colour, me), _enc(key[3], new, colour, me))
    return (kind, key[1], _enc(key[2], new, colour, me), arg_key(key[3]))


def _refine(colour: dict[int, int], new: set[int], incident: dict[int, list[tuple]]) -> dict[int, int]:
    while True:
        sigs = {o: (colour[o], tuple(sorted(_fact_view(k, new, colour, o) for k in incident[o])))
                for o in new}
        ranks = {s: r for r, s in enumerate(sorted(set(sigs.values())))}
        refined = {o: ranks[sigs[o]] for o in new}
        if len(ranks) == len(set(colour.values())):
            return refined
        colour = refined


def _relabel(keys: Iterable[tuple], mapping: dict[int, int]) -> tuple:
    out = []
    for k in keys:
        if k[0] == "isa":
            out.append((k[0], k[1], mapping.get(k[2], k[2])))
        elif k[0] == "associated":
            out.append((k[0], k[1], mapping.get(k[2], k[2]), mapping.get(k[3], k[3])))
        else:
            out.append((k[0], k[1], mapping.get(k[2], k[2]), k[3]))
    return tuple(sorted(out, key=fact_key_order))


def fact_key_order(k: tuple) -> tuple:
    return tuple(arg_key(a) for a in k)


def _swap_is_automorphism(keys: frozenset, a: int, b: int) -> bool:
    swap = {a: b, b: a}
    return frozenset(_relabel(keys, swap)) == keys


def canonical_mapping(inst: Instantiation, new_objects: Iterable[int], id_base: int) -> dict[int, int]:
    """Map each new object id to its canonical id."""
    new = set(new_objects)
    if not new:
        return {}
    keys = frozenset(inst.fact_keys())
    incident: dict[int, list[tuple]] = {o: [] for o in new}
    for k in keys:
        objs = (k[2],) if k[0] != "associated" else (k[2], k[3])
        for o in set(objs):
            if o in new:
                incident[o].append(k)
    classes = {o: min((k[1] for k in incident[o] if k[0] == "isa"), default="") for o in new}
    class_rank = {c: r for r, c in enumerate(sorted(set(classes.values())))}
    colour = _refine({o: class_rank[classes[o]] for o in new}, new, incident)

    best: tuple | None = None

    def search(colour: dict[int, int]):
        nonlocal best
        cells: dict[int, list[int]] = {}
        for o, c in colour.items():
            cells.setdefault(c, []).append(o)
        tied = [c for c in sorted(cells) if len(cells[c]) > 1]
        if not tied:
            order = sorted(new, key=lambda o: colour[o])
            mapping = {o: id_base + n for n, o in enumerate(order)}
            cand = (tuple(fact_key_order(k) for k in _relabel(keys, mapping)), mapping)
            if best is None or cand[0] < best[0]:
                best = cand
            return
        cell = sorted(cells[tied[0]])
        tried: list[int] = []
        for m in cell:
            if any(_swap_is_automorphism(keys, t, m) for t in tried):
                continue
            tried.append(m)
            # individualise m: it precedes the rest of its cell
            split = {o: 2 * c + (0 if o == m or c != tied[0] else 1) for o, c in colour.items()}
            search(_refine(split, new, incident))

    search(colour)
    return best[1]


def canonicalize(inst: Instantiation, new_objects: Iterable[int], id_base: int) -> Instantiation:
    mapping = canonical_mapping(inst, new_objects, id_base)
    return rename(inst, mapping)


def rename(inst: Instantiation, mapping: dict[int, int]) -> Instantiation:
    m = mapping.get
    return Instantiation(
        inst.inst_id, inst.model_id,
        frozenset((m(o, o), c) for o, c in inst.isa),
        frozenset((a, m(x, x), m(y, y)) for a, x, y in inst.links),
        frozenset((at, m(o, o), v) for at, o, v in inst.values),
    )


def canonical_key(inst: Instantiation) -> tuple:
    """Hashable, ordered identity of an already canonicalised instantiation."""
    return tuple(sorted((fact_key_order(k) for k in inst.fact_keys())))
