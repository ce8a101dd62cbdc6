import json
import subprocess
import sys

import pytest

from ooasp import load_files, parse_facts, validate
from ooasp.cli import main

from conftest import fixture

F = {name: str(fixture(name)) for name in
     ("modules_v1.lp", "modules_v2.lp", "c2.lp", "c3.lp", "empty.lp", "c3_complete.lp",
      "modules.oc", "adjacency.oc", "costs.txt", "obsolete.lp")}
BOUNDS = ["--max-new", "Frame=2", "--max-new", "ModuleA=5", "--max-new", "ModuleB=5"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_validate_c2(capsys, tmp_path):
    report = tmp_path / "r.json"
    code, out, _ = run(capsys, "validate", "-m", F["modules_v1.lp"], "-i", F["c2.lp"],
                       "-c", F["modules.oc"], "--json", str(report))
    assert code == 1
    assert out == 'ooasp_cv("c2",mincardviolated(10,"Element_module")).\n'
    doc = json.loads(report.read_text())
    assert doc["violations"][0]["args"] == [10, "Element_module"]


def test_validate_empty(capsys):
    code, out, _ = run(capsys, "validate", "-m", F["modules_v1.lp"], "-i", F["empty.lp"], "-c", F["modules.oc"])
    assert (code, out) == (0, "")


def test_validate_partial_mode(capsys):
    code, _, _ = run(capsys, "validate", "-m", F["modules_v1.lp"], "-i", F["c2.lp"], "--mode", "partial")
    assert code == 0


def test_complete_c3(capsys, tmp_path):
    out_lp, out_dot = tmp_path / "sol.lp", tmp_path / "sol.dot"
    code, _, _ = run(capsys, "complete", "-m", F["modules_v1.lp"], "-i", F["c3.lp"], "-c", F["modules.oc"],
                     *BOUNDS, "-o", str(out_lp), "--dot", str(out_dot))
    assert code == 0
    ws = load_files(F["modules_v1.lp"], str(out_lp))
    sol = ws.instantiation("c3")
    classes = sorted(c for _, c in sol.isa)
    assert classes.count("Frame") == 1 and classes.count("ModuleA") == 3 and classes.count("ModuleB") == 2
    from ooasp import read_constraint_file
    assert validate(ws.model(), sol, read_constraint_file(F["modules.oc"])).valid
    dot = out_dot.read_text()
    assert 'label="10: ElementA", fillcolor=lightgray' in dot
    assert "fillcolor=white" in dot


def test_complete_several_solutions_numbered(capsys, tmp_path):
    out_lp = tmp_path / "s.lp"
    code, _, _ = run(capsys, "complete", "-m", F["modules_v1.lp"], "-i", F["c2.lp"], "-c", F["modules.oc"],
                     "--max-new", "Frame=1", "--max-new", "ModuleA=1", "--solutions", "3", "-o", str(out_lp))
    assert code == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["s-1.lp", "s-2.lp", "s-3.lp"]


def test_complete_unsat_and_input_invalid(capsys, tmp_path):
    code, out, err = run(capsys, "complete", "-m", F["modules_v1.lp"], "-i", F["c3.lp"], "-c", F["modules.oc"],
                         "--max-new", "Frame=0", "--max-new", "ModuleA=5", "--max-new", "ModuleB=5")
    assert code == 20 and out == "" and "bounds" in err
    bad = tmp_path / "bad.lp"
    bad.write_text('ooasp_instantiation("v1","x").\nooasp_isa("x","ModuleA",1).\n'
                   'ooasp_attribute_value("x","position",1,9).\n')
    code, _, err = run(capsys, "complete", "-m", F["modules_v1.lp"], "-i", str(bad), *BOUNDS)
    assert code == 21 and "attr_range_violated" in err


def test_check_model(capsys):
    code, out, err = run(capsys, "check-model", "-m", F["modules_v1.lp"], "-c", F["modules.oc"],
                         "--max-new", "Frame=1")
    assert code == 0 and "consistent" in err
    assert out == 'ooasp_instantiation("v1","c0").\n'


def test_check_model_no_witness(capsys, tmp_path):
    rules = tmp_path / "r.oc"
    rules.write_text('cv no_frames(X) :- isa(X,"Frame").\n')
    code, _, _ = run(capsys, "check-model", "-m", F["modules_v1.lp"], "-c", str(rules),
                     "--max-new", "Frame=1", "--min-new", "Frame=1")
    assert code == 20


def test_reconcile(capsys, tmp_path):
    js, dot = tmp_path / "cs.json", tmp_path / "cs.dot"
    code, out, err = run(capsys, "reconcile", "--old-inst", F["c3_complete.lp"], "--new-model", F["modules_v2.lp"],
                         "-c", F["modules.oc"], "-c", F["adjacency.oc"], "--costs", F["costs.txt"],
                         "--json", str(js), "--dot", str(dot))
    assert code == 0
    assert "total cost 4" in err
    doc = json.loads(js.read_text())
    assert doc["total_cost"] == 4
    assert doc["created"] == [["attribute_value", "position", 21, 5], ["attribute_value", "position", 24, 2]]
    facts = {f.key() for f in parse_facts(out).facts}
    assert ("ooasp_attribute_value", ("c3", "position", 21, 5)) in facts
    assert ("ooasp_instantiation", ("v2", "c3")) in facts
    assert "[+]" in dot.read_text()


def test_reconcile_unsat(capsys, tmp_path):
    model = tmp_path / "m.lp"
    model.write_text('ooasp_class("n","A"). ooasp_class("n","B").\nooasp_assoc("n","R","A",1,1,"B",1,1).\n')
    inst = tmp_path / "i.lp"
    inst.write_text('ooasp_instantiation("n","i").\n')
    code, _, _ = run(capsys, "reconcile", "--old-inst", str(inst), "--new-model", str(model),
                     "--max-new", "A=1", "--min-new", "A=1")
    assert code == 20


def test_export(capsys):
    code, out, _ = run(capsys, "export", "-m", F["modules_v1.lp"], "-i", F["c3_complete.lp"])
    assert code == 0
    assert out.count("fillcolor=lightgray") == 11
    assert '30 -> 24 [label="Frame_modules"];' in out


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["validate", "-i", "x.lp"],
    ["complete", "-m", "a", "-i", "b", "--max-new", "Frame"],
    ["complete", "-m", "a", "-i", "b", "--int-domain", "5..1"],
    ["validate", "-m", "a", "-i", "b", "--mode", "sometimes"],
])
def test_bad_flags_exit_64(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 64


def test_inconsistent_bounds_exit_64(capsys):
    code, _, _ = run(capsys, "complete", "-m", F["modules_v1.lp"], "-i", F["c3.lp"],
                     "--max-new", "Frame=0", "--min-new", "Frame=1")
    assert code == 64


def test_parse_error_exit_2(capsys, tmp_path):
    bad = tmp_path / "bad.lp"
    bad.write_text('ooasp_class("v1","A").\nooasp_class("v1" "B").\n')
    code, _, err = run(capsys, "validate", "-m", str(bad), "-i", F["c2.lp"])
    assert code == 2
    assert f"{bad}:2:" in err


def test_rule_error_exit_2(capsys, tmp_path):
    bad = tmp_path / "bad.oc"
    bad.write_text('cv bad(X) :- not isa(X,"Frame").\n')
    code, _, err = run(capsys, "validate", "-m", F["modules_v1.lp"], "-i", F["c2.lp"], "-c", str(bad))
    assert code == 2 and f"{bad}:1:" in err


def test_missing_file_exit_2(capsys, tmp_path):
    code, _, _ = run(capsys, "validate", "-m", str(tmp_path / "nope.lp"), "-i", F["c2.lp"])
    assert code == 2


def test_outputs_round_trip(capsys, tmp_path):
    code, out, _ = run(capsys, "complete", "-m", F["modules_v1.lp"], "-i", F["c3.lp"], "-c", F["modules.oc"], *BOUNDS)
    from ooasp import serialize_facts
    assert serialize_facts(parse_facts(out).facts) == out


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ooasp", "validate", "-m", F["modules_v1.lp"],
                           "-i", F["c2.lp"], "-c", F["modules.oc"]], capture_output=True, text=True)
    assert proc.returncode == 1
    assert proc.stdout == 'ooasp_cv("c2",mincardviolated(10,"Element_module")).\n'
