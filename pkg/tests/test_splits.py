import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from camtrap_eval.dataset import Dataset
from camtrap_eval.errors import InfeasibleSplitError
from camtrap_eval.rng import SplitMix64
from camtrap_eval.splits import make_kfold, make_subsample, parse_plan, serialize_plan
from conftest import make_image


def synthetic(n: int) -> Dataset:
    return Dataset("syn", tuple(make_image(f"im{i:05d}", ((0, 0, 40, 40), "x")) for i in range(n)))


def test_kfold_ten_images():
    ds = synthetic(10)
    plan = make_kfold(ds, 5, seed=3)
    assert plan.mode == "kfold" and len(plan.folds) == 5
    tests = [set(f.test_ids) for f in plan.folds]
    assert all(len(t) == 2 for t in tests)
    assert set().union(*tests) == set(ds.image_ids())
    for i in range(5):
        for j in range(i + 1, 5):
            assert not tests[i] & tests[j]


def test_kfold_is_contiguous_blocks_of_one_shuffle():
    ds = synthetic(13)
    order = ds.image_ids()
    SplitMix64(99).shuffle(order)
    plan = make_kfold(ds, 4, seed=99)
    assert [len(f.test_ids) for f in plan.folds] == [4, 3, 3, 3]
    assert [i for f in plan.folds for i in f.test_ids] == order
    f1 = plan.folds[1]
    assert list(f1.train_ids) == order[:4] + order[7:]


def test_kfold_946_sizes():
    plan = make_kfold(synthetic(946), 5, seed=42)
    assert [len(f.test_ids) for f in plan.folds] == [190, 189, 189, 189, 189]
    assert all(len(f.train_ids) + len(f.test_ids) == 946 for f in plan.folds)


def test_kfold_deterministic():
    ds = synthetic(57)
    assert serialize_plan(make_kfold(ds, 5, 7)) == serialize_plan(make_kfold(ds, 5, 7))


@pytest.mark.parametrize("k, n", [(1, 10), (6, 5), (0, 3)])
def test_kfold_infeasible(k, n):
    with pytest.raises(InfeasibleSplitError):
        make_kfold(synthetic(n), k)


def test_kfold_k_equals_n():
    plan = make_kfold(synthetic(3), 3, seed=1)
    assert sorted(len(f.test_ids) for f in plan.folds) == [1, 1, 1]


def test_seed_changes_plan():
    ds = synthetic(6)
    base = make_kfold(ds, 5, seed=0)
    differing = sum(make_kfold(ds, 5, seed=s).folds != base.folds for s in range(1, 101))
    assert differing >= 99


@given(st.integers(2, 60), st.integers(2, 6), st.integers(0, 2**64 - 1))
def test_kfold_invariants(n, k, seed):
    if k > n:
        return
    ds = synthetic(n)
    plan = make_kfold(ds, k, seed)
    ids = set(ds.image_ids())
    seen = []
    for f in plan.folds:
        assert f.train_ids and f.test_ids
        assert not set(f.train_ids) & set(f.test_ids)
        assert set(f.train_ids) | set(f.test_ids) == ids
        assert len(set(f.train_ids)) == len(f.train_ids)
        seen += f.test_ids
    assert sorted(seen) == sorted(ids)
    sizes = [len(f.test_ids) for f in plan.folds]
    assert max(sizes) - min(sizes) <= 1


def test_subsample_basic():
    plan = make_subsample(synthetic(10), repeats=3, test_frac=0.2, seed=5)
    assert plan.mode == "subsample" and len(plan.folds) == 3
    for f in plan.folds:
        assert (len(f.test_ids), len(f.train_ids)) == (2, 8)
        assert not set(f.test_ids) & set(f.train_ids)


def test_subsample_946():
    plan = make_subsample(synthetic(946), repeats=5, seed=42)
    assert {len(f.test_ids) for f in plan.folds} == {189}


def test_subsample_minimal():
    plan = make_subsample(synthetic(2), repeats=1, test_frac=0.5, seed=0)
    (f,) = plan.folds
    assert len(f.test_ids) == 1 and len(f.train_ids) == 1


def test_subsample_uses_fold_substreams():
    ds = synthetic(20)
    plan = make_subsample(ds, repeats=2, test_frac=0.25, seed=11)
    for i, f in enumerate(plan.folds):
        order = ds.image_ids()
        SplitMix64.substream(11, i).shuffle(order)
        assert list(f.test_ids) == order[:5]
        assert list(f.train_ids) == order[5:]
    assert plan.folds[0].test_ids != plan.folds[1].test_ids


@pytest.mark.parametrize(
    "n, frac, repeats",
    [(3, 0.1, 1), (3, 0.9, 1), (10, 0.0, 1), (10, 1.0, 1), (10, 0.2, 0)],
)
def test_subsample_infeasible(n, frac, repeats):
    with pytest.raises(InfeasibleSplitError):
        make_subsample(synthetic(n), repeats=repeats, test_frac=frac)


def test_plan_file_round_trip():
    plan = make_kfold(synthetic(12), 3, seed=2**64 - 1)
    text = serialize_plan(plan)
    doc = json.loads(text)
    assert list(doc) == ["mode", "seed", "dataset_id", "folds"]
    assert list(doc["folds"][0]) == ["index", "train_ids", "test_ids"]
    assert parse_plan(text) == plan
