"""In-memory OOASP models and instantiations.

A model is the set of model-level facts (classes, subclass edges, associations,
attributes and their domains) sharing one model id.  An instantiation is the
set of instance-level facts (isa, associated, attribute_value) that claim to
realise a model.  Both are immutable once built.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, NamedTuple

# predicate names, arities and argument kinds ("s" = string, "i" = integer,
# "v" = string or integer, "o" = object id (integer), "t" = compound term)
MODEL_PREDICATES = {
    "ooasp_class": "ss",
    "ooasp_subclass": "sss",
    "ooasp_assoc": "sssiisii",
    "ooasp_attribute": "ssss",
    "ooasp_attribute_minInclusive": "sssi",
    "ooasp_attribute_maxInclusive": "sssi",
    "ooasp_attribute_enum": "ssss",
}
INSTANCE_PREDICATES = {
    "ooasp_instantiation": "ss",
    "ooasp_isa": "sso",
    "ooasp_associated": "ssoo",
    "ooasp_attribute_value": "ssov",
}
VIOLATION_PREDICATE = "ooasp_cv"
PREDICATES = {**MODEL_PREDICATES, **INSTANCE_PREDICATES, VIOLATION_PREDICATE: "st"}

BASE_TYPES = ("string", "integer", "boolean")
BOOLEAN_VALUES = ("false", "true")

# fact kinds of an instantiation, as used by reconciliation cost tables
FACT_KINDS = ("isa", "associated", "attribute_value")


class Fact(NamedTuple):
    pred: str
    args: tuple
    line: int = 0
    column: int = 0

    def key(self) -> tuple:
        return (self.pred, self.args)


class Term(NamedTuple):
    """A functor term such as ``mincardviolated(10,"Element_module")``."""

    name: str
    args: tuple = ()


def arg_key(arg: Any) -> tuple:
    """Total order over mixed arguments: integers, then strings, then terms."""
    if isinstance(arg, int):
        return (0, arg)
    if isinstance(arg, str):
        return (1, arg)
    return (2, arg.name, tuple(arg_key(a) for a in arg.args))


@dataclass(frozen=True)
class Violation:
    """One derived ``ooasp_cv(I, kind(args...))`` atom."""

    inst_id: str
    kind: str
    args: tuple = ()

    def sort_key(self) -> tuple:
        return (self.inst_id, self.kind, tuple(arg_key(a) for a in self.args))

    def to_fact(self) -> Fact:
        return Fact(VIOLATION_PREDICATE, (self.inst_id, Term(self.kind, tuple(self.args))))

    @classmethod
    def from_fact(cls, fact: Fact) -> Violation:
        inst_id, term = fact.args
        return cls(inst_id, term.name, tuple(term.args))

    def __str__(self) -> str:
        inner = ",".join(f'"{a}"' if isinstance(a, str) else str(a) for a in self.args)
        return f"{self.kind}({inner})" if self.args else self.kind


class IllFormedModel(ValueError):
    """Raised when model declarations cannot be turned into a well-formed model."""

    def __init__(self, diagnostics: list[str]):
        self.diagnostics = list(diagnostics)
        super().__init__("ill-formed model:\n  " + "\n  ".join(self.diagnostics))


class UnknownIdentifier(KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown identifier"


@dataclass(frozen=True)
class Association:
    assoc_id: str
    class1: str
    min1: int
    max1: int
    class2: str
    min2: int
    max2: int

    def endpoint(self, side: int) -> str:
        return self.class1 if side == 1 else self.class2

    def bounds(self, side: int) -> tuple[int, int]:
        """Bounds on the number of partners an object at endpoint `side` must have.

        An object of class1 needs between min2 and max2 class2-partners and
        vice versa.
        """
        return (self.min2, self.max2) if side == 1 else (self.min1, self.max1)


@dataclass(frozen=True)
class AttributeDecl:
    owner_class: str
    attr_id: str
    base_type: str
    min_value: int | None = None
    max_value: int | None = None
    enum_values: frozenset[str] | None = None

    def accepts_type(self, value: Any) -> bool:
        if self.base_type == "integer":
            return isinstance(value, int)
        if self.base_type == "boolean":
            return value in BOOLEAN_VALUES
        return isinstance(value, str)

    def in_range(self, value: int) -> bool:
        if self.min_value is not None and value < self.min_value:
            return False
        return self.max_value is None or value <= self.max_value

    def domain(self, default_int_domain: tuple[int, int] | None = None) -> list | None:
        """Finite list of admissible values, or None when it cannot be finitized."""
        if self.base_type == "boolean":
            return list(BOOLEAN_VALUES)
        if self.base_type == "string":
            return sorted(self.enum_values) if self.enum_values else None
        lo, hi = self.min_value, self.max_value
        if lo is None or hi is None:
            if default_int_domain is None:
                return None
            lo = default_int_domain[0] if lo is None else max(lo, default_int_domain[0])
            hi = default_int_domain[1] if hi is None else min(hi, default_int_domain[1])
        return list(range(lo, hi + 1))


@dataclass(frozen=True)
class Model:
    model_id: str
    classes: frozenset[str]
    parent: dict[str, str] = field(default_factory=dict)
    associations: frozenset[Association] = frozenset()
    attributes: frozenset[AttributeDecl] = frozenset()

    def __post_init__(self):
        # derived lookup tables; not part of equality
        children: dict[str, list[str]] = {c: [] for c in self.classes}
        for c, p in self.parent.items():
            children[p].append(c)
        object.__setattr__(self, "_children", {c: tuple(sorted(v)) for c, v in children.items()})
        object.__setattr__(self, "_assocs", {a.assoc_id: a for a in self.associations})
        ancestors = {}
        for c in self.classes:
            chain = [c]
            while chain[-1] in self.parent:
                chain.append(self.parent[chain[-1]])
            ancestors[c] = tuple(chain)
        object.__setattr__(self, "_ancestors", ancestors)

    def __eq__(self, other):
        if not isinstance(other, Model):
            return NotImplemented
        return (self.model_id, self.classes, self.parent, self.associations, self.attributes) == (
            other.model_id, other.classes, other.parent, other.associations, other.attributes)

    def __hash__(self):
        return hash((self.model_id, self.classes, self.associations, self.attributes))

    def _check_class(self, cls: str) -> None:
        if cls not in self.classes:
            raise UnknownIdentifier(f"class {cls!r} is not declared in model {self.model_id!r}")

    def ancestors(self, cls: str) -> tuple[str, ...]:
        """The class itself followed by its superclasses, child to root."""
        self._check_class(cls)
        return self._ancestors[cls]

    def subclasses(self, cls: str) -> tuple[str, ...]:
        self._check_class(cls)
        return self._children[cls]

    def is_leaf(self, cls: str) -> bool:
        return not self.subclasses(cls)

    @property
    def leaf_classes(self) -> list[str]:
        return sorted(c for c in self.classes if not self._children[c])

    def is_subclass(self, cls: str, sup: str) -> bool:
        return sup in self.ancestors(cls)

    def applicable_attributes(self, cls: str) -> list[AttributeDecl]:
        """Attributes declared on `cls` or inherited, ordered by owner depth then id."""
        chain = self.ancestors(cls)
        depth = {c: len(chain) - 1 - i for i, c in enumerate(chain)}
        found = [a for a in self.attributes if a.owner_class in depth]
        return sorted(found, key=lambda a: (depth[a.owner_class], a.attr_id))

    def association(self, assoc_id: str) -> Association:
        try:
            return self._assocs[assoc_id]
        except KeyError:
            raise UnknownIdentifier(
                f"association {assoc_id!r} is not declared in model {self.model_id!r}") from None

    def has_association(self, assoc_id: str) -> bool:
        return assoc_id in self._assocs

    def has_attribute(self, attr_id: str) -> bool:
        return any(a.attr_id == attr_id for a in self.attributes)

    def to_facts(self) -> list[Fact]:
        m = self.model_id
        out = [Fact("ooasp_class", (m, c)) for c in self.classes]
        out += [Fact("ooasp_subclass", (m, c, p)) for c, p in self.parent.items()]
        for a in self.associations:
            out.append(Fact("ooasp_assoc", (m, a.assoc_id, a.class1, a.min1, a.max1,
                                            a.class2, a.min2, a.max2)))
        for at in self.attributes:
            out.append(Fact("ooasp_attribute", (m, at.owner_class, at.attr_id, at.base_type)))
            if at.min_value is not None:
                out.append(Fact("ooasp_attribute_minInclusive",
                                (m, at.owner_class, at.attr_id, at.min_value)))
            if at.max_value is not None:
                out.append(Fact("ooasp_attribute_maxInclusive",
                                (m, at.owner_class, at.attr_id, at.max_value)))
            for v in sorted(at.enum_values or ()):
                out.append(Fact("ooasp_attribute_enum", (m, at.owner_class, at.attr_id, v)))
        return out


def build_model(declarations: Iterable[Fact], model_id: str | None = None) -> Model:
    """Build a well-formed Model from model-level facts.

    Every problem found is collected; if any exists IllFormedModel is raised
    with the full list.
    """
    facts = list(declarations)
    errors: list[str] = []

    def where(f: Fact) -> str:
        return f" (line {f.line})" if f.line else ""

    ids = {f.args[0] for f in facts}
    if model_id is None:
        if len(ids) > 1:
            raise IllFormedModel([f"declarations mix model ids {sorted(ids)}"])
        if not ids:
            raise IllFormedModel(["no model declarations"])
        model_id = next(iter(ids))
    for f in facts:
        if f.pred not in MODEL_PREDICATES:
            errors.append(f"{f.pred} is not a model-level predicate{where(f)}")
        elif f.args[0] != model_id:
            errors.append(f"{f.pred} belongs to model {f.args[0]!r}, not {model_id!r}{where(f)}")
    facts = [f for f in facts if f.pred in MODEL_PREDICATES and f.args[0] == model_id]

    classes = {f.args[1] for f in facts if f.pred == "ooasp_class"}

    parent: dict[str, str] = {}
    for f in facts:
        if f.pred != "ooasp_subclass":
            continue
        _, c, p = f.args
        for x in (c, p):
            if x not in classes:
                errors.append(f"subclass edge {c}->{p} references undeclared class {x!r}{where(f)}")
        if c in parent and parent[c] != p:
            errors.append(f"class {c!r} has two superclasses {parent[c]!r} and {p!r}{where(f)}")
            continue
        parent[c] = p
    for start in sorted(parent):
        seen = [start]
        c = start
        while c in parent:
            c = parent[c]
            if c == start:
                errors.append("subclass cycle " + "->".join(seen + [start]))
                break
            if c in seen:
                break
            seen.append(c)
    # a cycle is reported once per member; keep one report per distinct cycle
    cycles = [e for e in errors if e.startswith("subclass cycle")]
    if cycles:
        kept, members = [], []
        for e in cycles:
            nodes = frozenset(e.split(" ", 2)[2].split("->"))
            if nodes not in members:
                members.append(nodes)
                kept.append(e)
        errors = [e for e in errors if not e.startswith("subclass cycle")] + kept

    assocs: dict[str, Association] = {}
    for f in facts:
        if f.pred != "ooasp_assoc":
            continue
        _, aid, c1, mn1, mx1, c2, mn2, mx2 = f.args
        a = Association(aid, c1, mn1, mx1, c2, mn2, mx2)
        for x in (c1, c2):
            if x not in classes:
                errors.append(f"association {aid!r} references undeclared class {x!r}{where(f)}")
        if not (0 <= mn1 <= mx1) or not (0 <= mn2 <= mx2):
            errors.append(f"association {aid!r} has bad cardinalities "
                          f"{mn1}..{mx1} / {mn2}..{mx2}{where(f)}")
        if aid in assocs and assocs[aid] != a:
            errors.append(f"association {aid!r} declared twice with different content{where(f)}")
        assocs[aid] = a

    decls: dict[tuple[str, str], dict[str, Any]] = {}
    for f in facts:
        if f.pred != "ooasp_attribute":
            continue
        _, c, at, typ = f.args
        if c not in classes:
            errors.append(f"attribute {at!r} owned by undeclared class {c!r}{where(f)}")
        if typ not in BASE_TYPES:
            errors.append(f"attribute {c}.{at} has unknown type {typ!r}{where(f)}")
        old = decls.get((c, at))
        if old is not None and old["base_type"] != typ:
            errors.append(f"attribute {c}.{at} declared with two types{where(f)}")
        decls.setdefault((c, at), {"base_type": typ, "min_value": None,
                                   "max_value": None, "enum_values": None})
    for f in facts:
        if f.pred not in ("ooasp_attribute_minInclusive", "ooasp_attribute_maxInclusive",
                          "ooasp_attribute_enum"):
            continue
        _, c, at, v = f.args
        d = decls.get((c, at))
        if d is None:
            errors.append(f"{f.pred} for undeclared attribute {c}.{at}{where(f)}")
            continue
        if f.pred == "ooasp_attribute_enum":
            if d["base_type"] != "string":
                errors.append(f"enum value on non-string attribute {c}.{at}{where(f)}")
            d["enum_values"] = (d["enum_values"] or frozenset()) | {v}
            continue
        slot = "min_value" if f.pred.endswith("minInclusive") else "max_value"
        if d["base_type"] != "integer":
            errors.append(f"range bound on non-integer attribute {c}.{at}{where(f)}")
        if d[slot] is not None and d[slot] != v:
            errors.append(f"attribute {c}.{at} has conflicting {slot} bounds{where(f)}")
        d[slot] = v
    attributes = set()
    for (c, at), d in decls.items():
        if d["min_value"] is not None and d["max_value"] is not None and d["min_value"] > d["max_value"]:
            errors.append(f"attribute {c}.{at} has empty range {d['min_value']}..{d['max_value']}")
        attributes.add(AttributeDecl(c, at, **d))

    if not any(e.startswith("subclass cycle") for e in errors):
        # duplicate attribute ids along a chain (only meaningful without cycles)
        by_id: dict[str, list[str]] = {}
        for c, at in decls:
            by_id.setdefault(at, []).append(c)
        for at, owners in sorted(by_id.items()):
            owners = sorted(o for o in owners if o in classes)
            for i, a in enumerate(owners):
                for b in owners[i + 1:]:
                    if _on_chain(parent, a, b) or _on_chain(parent, b, a):
                        errors.append(f"attribute {at!r} declared on both {a!r} and {b!r} "
                                      "along one inheritance chain")

    if errors:
        raise IllFormedModel(errors)
    return Model(model_id, frozenset(classes), parent, frozenset(assocs.values()),
                 frozenset(attributes))


def _on_chain(parent: dict[str, str], cls: str, sup: str) -> bool:
    while cls in parent:
        cls = parent[cls]
        if cls == sup:
            return True
    return False


@dataclass(frozen=True)
class Instantiation:
    """Instance-level facts of one instantiation.

    isa holds (object, class) pairs, links (assoc, o1, o2) and values
    (attr, object, value); all are sets.
    """

    inst_id: str
    model_id: str
    isa: frozenset[tuple[int, str]] = frozenset()
    links: frozenset[tuple[str, int, int]] = frozenset()
    values: frozenset[tuple[str, int, Any]] = frozenset()

    def __post_init__(self):
        for name in ("isa", "links", "values"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))

    @property
    def object_ids(self) -> list[int]:
        return sorted({o for o, _ in self.isa})

    @property
    def objects(self) -> dict[int, str]:
        """Object id -> declared class; objects with several isa facts map to the
        lexicographically first one, use classes_of() for the full set."""
        out: dict[int, str] = {}
        for o, c in sorted(self.isa):
            out.setdefault(o, c)
        return out

    def classes_of(self, obj: int) -> frozenset[str]:
        return frozenset(c for o, c in self.isa if o == obj)

    def referenced_ids(self) -> set[int]:
        ids = {o for o, _ in self.isa}
        ids.update(o for _, a, b in self.links for o in (a, b))
        ids.update(o for _, o, _ in self.values)
        return ids

    def fact_keys(self) -> set[tuple]:
        """Instance facts as ('isa', C, o) / ('associated', A, o1, o2) /
        ('attribute_value', AT, o, v) tuples."""
        keys: set[tuple] = {("isa", c, o) for o, c in self.isa}
        keys.update(("associated",) + link for link in self.links)
        keys.update(("attribute_value",) + val for val in self.values)
        return keys

    @classmethod
    def from_fact_keys(cls, inst_id: str, model_id: str, keys: Iterable[tuple]) -> Instantiation:
        isa, links, values = set(), set(), set()
        for k in keys:
            if k[0] == "isa":
                isa.add((k[2], k[1]))
            elif k[0] == "associated":
                links.add(k[1:])
            elif k[0] == "attribute_value":
                values.add(k[1:])
            else:
                raise ValueError(f"not an instance fact: {k!r}")
        return cls(inst_id, model_id, frozenset(isa), frozenset(links), frozenset(values))

    def normalized(self, model: Model) -> Instantiation:
        """Drop isa facts implied by a more specific isa fact of the same object."""
        keep = set()
        for o in {o for o, _ in self.isa}:
            cs = self.classes_of(o)
            for c in cs:
                implied = c in model.classes and any(
                    d != c and d in model.classes and c in model.ancestors(d) for d in cs)
                if not implied:
                    keep.add((o, c))
        return Instantiation(self.inst_id, self.model_id, frozenset(keep), self.links, self.values)

    def to_facts(self) -> list[Fact]:
        i = self.inst_id
        out = [Fact("ooasp_instantiation", (self.model_id, i))]
        out += [Fact("ooasp_isa", (i, c, o)) for o, c in self.isa]
        out += [Fact("ooasp_associated", (i, a, o1, o2)) for a, o1, o2 in self.links]
        out += [Fact("ooasp_attribute_value", (i, at, o, v)) for at, o, v in self.values]
        return out
