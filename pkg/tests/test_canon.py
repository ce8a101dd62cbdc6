import random

import pytest

from ooasp import Instantiation
from ooasp.canon import canonical_key, canonicalize, rename


def frame_with_modules(ids, positions):
    frame, *mods = ids
    keys = [("isa", "Frame", frame)]
    for m, p in zip(mods, positions):
        keys += [("isa", "ModuleA", m), ("associated", "Frame_modules", frame, m),
                 ("attribute_value", "position", m, p)]
    return Instantiation.from_fact_keys("c", "v1", keys)


def test_renaming_new_objects_gives_same_form():
    a = frame_with_modules([5, 6, 7, 8], [1, 2, 3])
    b = frame_with_modules([8, 5, 7, 6], [1, 2, 3])
    assert canonicalize(a, {5, 6, 7, 8}, 5) == canonicalize(b, {5, 6, 7, 8}, 5)


def test_canonical_ids_start_at_base():
    inst = frame_with_modules([40, 41, 42], [2, 1])
    canon = canonicalize(inst, {40, 41, 42}, 10)
    assert {o for o, _ in canon.isa} == {10, 11, 12}


def test_existing_objects_keep_their_ids():
    inst = frame_with_modules([1, 2, 3], [1, 2])
    canon = canonicalize(inst, {3}, 100)
    assert {o for o, _ in canon.isa} == {1, 2, 100}


def test_differences_on_existing_objects_are_not_merged():
    a = frame_with_modules([1, 5, 6], [1, 2])
    b = frame_with_modules([1, 5, 6], [2, 1])
    # 1 is pre-existing; swapping which new module sits where is a renaming
    assert canonical_key(canonicalize(a, {5, 6}, 5)) == canonical_key(canonicalize(b, {5, 6}, 5))
    # but if the modules pre-exist the two are different
    assert canonical_key(canonicalize(a, {1}, 1)) != canonical_key(canonicalize(b, {1}, 1))


@pytest.mark.parametrize("seed", range(25))
def test_random_permutations_are_invariant(seed):
    rng = random.Random(seed)
    n = rng.randint(2, 7)
    new = list(range(50, 50 + n))
    keys = [("isa", rng.choice(["A", "B"]), o) for o in new] + [("isa", "A", 1)]
    objs = new + [1]
    for _ in range(rng.randint(0, 10)):
        keys.append(("associated", "r", rng.choice(objs), rng.choice(objs)))
    for o in new:
        if rng.random() < 0.5:
            keys.append(("attribute_value", "p", o, rng.randint(1, 2)))
    inst = Instantiation.from_fact_keys("c", "m", keys)
    perm = new[:]
    rng.shuffle(perm)
    other = rename(inst, dict(zip(new, perm)))
    assert canonicalize(inst, set(new), 50) == canonicalize(other, set(new), 50)
    # canonical form is itself a renaming of the input
    canon = canonicalize(inst, set(new), 50)
    assert len(canon.fact_keys()) == len(inst.fact_keys())
