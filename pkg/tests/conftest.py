import sys
from pathlib import Path

import pytest

from ooasp import load_files, read_constraint_file

FIXTURES = Path(__file__).parent / "fixtures"
sys.path.insert(0, str(Path(__file__).parent))

MODULE_BOUNDS = {"Frame": 2, "ModuleA": 5, "ModuleB": 5, "ElementA": 0, "ElementB": 0}


def fixture(name: str) -> Path:
    return FIXTURES / name


@pytest.fixture
def v1():
    return load_files(fixture("modules_v1.lp")).model("v1")


@pytest.fixture
def v2():
    return load_files(fixture("modules_v2.lp")).model("v2")


@pytest.fixture
def module_rules():
    return read_constraint_file(fixture("modules.oc"))


@pytest.fixture
def adjacency_rules():
    return read_constraint_file(fixture("adjacency.oc"))


@pytest.fixture
def c3_complete():
    return load_files(fixture("modules_v1.lp"), fixture("c3_complete.lp")).instantiation("c3")


def load_inst(*names, inst_id=None):
    ws = load_files(fixture("modules_v1.lp"), *(fixture(n) for n in names))
    return ws.instantiation(inst_id)
