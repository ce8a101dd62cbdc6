import pytest

from ooasp import IllFormedModel, Instantiation, build_model, parse_facts
from ooasp.model import Violation

from conftest import fixture


def model_from(text):
    return build_model(parse_facts(text).facts)


def test_modules_model_shape(v1):
    assert len(v1.classes) == 8
    assert len(v1.parent) == 7
    assert len(v1.associations) == 2
    [pos] = v1.attributes
    assert (pos.attr_id, pos.base_type, pos.min_value, pos.max_value) == ("position", "integer", 1, 5)


def test_single_class_model():
    m = model_from('ooasp_class("m","X").')
    assert set(m.classes) == {"X"}
    assert not m.associations
    assert m.ancestors("X") == ("X",)


def test_cycle_is_rejected():
    text = fixture("modules_v1.lp").read_text() + 'ooasp_subclass("v1","HwObject","Frame").'
    with pytest.raises(IllFormedModel) as err:
        model_from(text)
    assert any("cycle" in d for d in err.value.diagnostics)


@pytest.mark.parametrize("cls, expected", [
    ("ElementA", {"ElementA", "Element", "HwObject"}),
    ("HwObject", {"HwObject"}),
    ("ModuleB", {"ModuleB", "Module", "HwObject"}),
])
def test_ancestors(v1, cls, expected):
    anc = v1.ancestors(cls)
    assert set(anc) == expected
    assert anc[0] == cls


@pytest.mark.parametrize("cls, names", [("ModuleA", ["position"]), ("Frame", []), ("Module", ["position"])])
def test_applicable_attributes(v1, cls, names):
    assert [d.attr_id for d in v1.applicable_attributes(cls)] == names


def test_attributes_inherited_along_chain(v1):
    for cls, parent in v1.parent.items():
        assert set(v1.applicable_attributes(parent)) <= set(v1.applicable_attributes(cls))


def test_leaf_classes(v1):
    assert set(v1.leaf_classes) == {"Frame", "ModuleA", "ModuleB", "ElementA", "ElementB"}


@pytest.mark.parametrize("extra, needle", [
    ('ooasp_subclass("v1","Frame","Module").', "two superclasses"),
    ('ooasp_assoc("v1","Bad","Frame",2,1,"Module",0,1).', "cardinal"),
    ('ooasp_attribute("v1","ModuleA","position","integer").', "position"),
    ('ooasp_attribute_enum("v1","Module","position","x").', "enum"),
    ('ooasp_assoc("v1","X","Nowhere",0,1,"Module",0,1).', "Nowhere"),
])
def test_well_formedness_diagnostics(extra, needle):
    text = fixture("modules_v1.lp").read_text() + extra
    with pytest.raises(IllFormedModel) as err:
        model_from(text)
    assert any(needle in d for d in err.value.diagnostics), err.value.diagnostics


def test_all_diagnostics_reported_together():
    text = ('ooasp_class("m","A").\n'
            'ooasp_subclass("m","A","Missing").\n'
            'ooasp_assoc("m","R","A",3,1,"A",0,1).\n')
    with pytest.raises(IllFormedModel) as err:
        model_from(text)
    assert len(err.value.diagnostics) >= 2


def test_model_round_trips_through_facts(v1):
    assert build_model(v1.to_facts()) == v1


def test_isa_on_one_chain_normalizes_to_most_specific(v1):
    inst = Instantiation.from_fact_keys("x", "v1", [("isa", "Module", 5), ("isa", "ModuleA", 5)])
    assert inst.normalized(v1).isa == frozenset({(5, "ModuleA")})


def test_violation_fact_round_trip():
    v = Violation("c2", "mincardviolated", (10, "Element_module"))
    assert Violation.from_fact(v.to_fact()) == v
    assert str(v) == 'mincardviolated(10,"Element_module")'
