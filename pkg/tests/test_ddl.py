import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ooasp import DDLError, Instantiation, load, parse_facts, serialize_facts
from ooasp.model import Violation

from conftest import FIXTURES, fixture
from randgen import random_instance, random_model


def test_modules_model_parses_to_twenty_facts():
    ff = parse_facts(fixture("modules_v1.lp").read_text())
    counts = {}
    for f in ff.facts:
        counts[f.pred] = counts.get(f.pred, 0) + 1
    assert len(ff) == 20
    assert counts == {"ooasp_class": 8, "ooasp_subclass": 7, "ooasp_assoc": 2, "ooasp_attribute": 1,
                      "ooasp_attribute_minInclusive": 1, "ooasp_attribute_maxInclusive": 1}


def test_single_isa_fact():
    [f] = parse_facts('ooasp_isa("c2","ElementA",10).').facts
    assert f.key() == ("ooasp_isa", ("c2", "ElementA", 10))
    assert (f.line, f.column) == (1, 1)


def test_empty_input():
    assert len(parse_facts("")) == 0
    assert len(parse_facts("% only a comment\n")) == 0


def test_serialize_instantiation_c2():
    inst = Instantiation.from_fact_keys("c2", "v1", [("isa", "ElementA", 10)])
    assert serialize_facts(inst) == 'ooasp_instantiation("v1","c2").\nooasp_isa("c2","ElementA",10).\n'


def test_serialize_violation():
    v = Violation("c2", "mincardviolated", (10, "Element_module"))
    assert serialize_facts([v]) == 'ooasp_cv("c2",mincardviolated(10,"Element_module")).\n'


def test_serialize_empty_instantiation():
    assert serialize_facts(Instantiation("c0", "v1")) == 'ooasp_instantiation("v1","c0").\n'


@pytest.mark.parametrize("text, fragment", [
    ('ooasp_isa("c2","ElementA","ten").', "object"),
    ('ooasp_isa("c2","ElementA").', "argument"),
    ('ooasp_frobnicate("x").', "ooasp_frobnicate"),
    ('ooasp_class("v1","X")', "'.'"),
    ('ooasp_class("v1,"X").', ""),
])
def test_parse_errors_carry_positions(text, fragment):
    with pytest.raises(DDLError) as err:
        parse_facts(text, "f.lp")
    assert err.value.line == 1
    assert fragment in str(err.value)
    assert str(err.value).startswith("f.lp:1:")


def test_undeclared_instantiation_is_an_error():
    text = 'ooasp_instantiation("v1","c1").\nooasp_isa("c3","ElementA",10).\n'
    with pytest.raises(DDLError, match="undeclared instantiation 'c3'"):
        load(parse_facts(text))


def test_instantiation_ids_unique_per_workspace():
    text = 'ooasp_instantiation("v1","c1").\nooasp_instantiation("v2","c1").\n'
    with pytest.raises(DDLError):
        load(parse_facts(text))


@pytest.mark.parametrize("path", sorted(FIXTURES.glob("*.lp")), ids=lambda p: p.name)
def test_fixture_round_trip(path):
    first = serialize_facts(parse_facts(path.read_text()).facts)
    again = serialize_facts(parse_facts(first).facts)
    assert first == again
    assert {f.key() for f in parse_facts(first).facts} == {f.key() for f in parse_facts(path.read_text()).facts}


def test_workspace_round_trip(v1, c3_complete):
    text = serialize_facts(v1, c3_complete)
    ws = load(parse_facts(text))
    assert ws.model("v1") == v1
    assert ws.instantiation("c3") == c3_complete


def test_fact_order_and_whitespace_do_not_matter():
    text = "".join(ln for ln in fixture("c3_complete.lp").read_text().splitlines(True) if not ln.startswith("%"))
    body = [chunk.strip() for chunk in text.split(".") if chunk.strip()]
    rng = random.Random(3)
    rng.shuffle(body)
    shuffled = "\n\n   ".join(b + " ." for b in body)
    base = load(parse_facts(fixture("modules_v1.lp").read_text() + fixture("c3_complete.lp").read_text()))
    other = load(parse_facts(fixture("modules_v1.lp").read_text() + shuffled))
    assert base.instantiation("c3") == other.instantiation("c3")


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32))
def test_random_files_round_trip(seed):
    rng = random.Random(seed)
    mtext, desc = random_model(rng)
    itext = random_instance(rng, desc, "m", "i", rng.randint(0, 3), rng.randint(0, 4))
    ws = load(parse_facts(mtext + itext))
    text = serialize_facts(ws.model(), ws.instantiation())
    again = load(parse_facts(text))
    assert again.model() == ws.model()
    assert again.instantiation() == ws.instantiation()
    assert serialize_facts(again.model(), again.instantiation()) == text


identifier = st.text(alphabet="abcXYZ_019", min_size=1, max_size=6)
functor = st.from_regex(r"[a-z][A-Za-z0-9_]{0,8}", fullmatch=True)
scalar = st.one_of(st.integers(-50, 50), identifier)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(functor, st.integers(0, 99), st.lists(scalar, max_size=3)), max_size=5))
def test_violation_lists_round_trip(items):
    vs = [Violation("i", kind, (obj, *rest)) for kind, obj, rest in items]
    text = serialize_facts(vs)
    ws = load(parse_facts(text))
    assert set(ws.violations) == set(vs)


@pytest.mark.parametrize("kind", ["Bad", "0x", "has space", ""])
def test_unwritable_functor_names_are_rejected(kind):
    with pytest.raises(ValueError):
        serialize_facts([Violation("i", kind, (1,))])
