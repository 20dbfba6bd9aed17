"""Seeded train/test image splits: k-fold partitions and repeated subsampling."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Literal

from .dataset import Dataset
from .errors import CamtrapError, InfeasibleSplitError
from .rng import MASK64, SplitMix64

SplitMode = Literal["kfold", "subsample"]


@dataclass(frozen=True)
class Fold:
    index: int
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]


@dataclass(frozen=True)
class SplitPlan:
    mode: SplitMode
    seed: int
    dataset_id: str
    folds: tuple[Fold, ...]

    def fold(self, index: int) -> Fold:
        for f in self.folds:
            if f.index == index:
                return f
        raise CamtrapError(f"split plan has no fold {index} (folds: {len(self.folds)})")


def _check_seed(seed: int) -> int:
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def make_kfold(ds: Dataset, k: int = 5, seed: int = 42) -> SplitPlan:
    """Shuffle the image ids once and cut them into ``k`` contiguous blocks.

    Fold ``i`` tests on block ``i`` and trains on the rest.  When ``k`` does
    not divide the image count the first ``n % k`` blocks hold one extra id.
    """
    if k < 2:
        raise InfeasibleSplitError(f"k must be at least 2, got {k}")
    ids = ds.image_ids()
    n = len(ids)
    if k > n:
        raise InfeasibleSplitError(f"cannot split {n} images into {k} folds")
    SplitMix64(_check_seed(seed)).shuffle(ids)

    base, extra = divmod(n, k)
    folds = []
    start = 0
    for i in range(k):
        stop = start + base + (1 if i < extra else 0)
        folds.append(
            Fold(index=i, train_ids=tuple(ids[:start] + ids[stop:]), test_ids=tuple(ids[start:stop]))
        )
        start = stop
    return SplitPlan("kfold", seed, ds.dataset_id, tuple(folds))


def make_subsample(
    ds: Dataset, repeats: int = 5, test_frac: float = 0.2, seed: int = 42
) -> SplitPlan:
    """Draw ``repeats`` independent train/test splits.

    Each repeat shuffles with its own sub-stream keyed by the fold index, and
    the first ``floor(test_frac * n + 0.5)`` shuffled ids form the test set.
    """
    if not 0 < test_frac < 1:
        raise InfeasibleSplitError(f"test_frac must be in (0, 1), got {test_frac}")
    if repeats < 1:
        raise InfeasibleSplitError(f"repeats must be at least 1, got {repeats}")
    _check_seed(seed)
    ids = ds.image_ids()
    n = len(ids)
    n_test = int(test_frac * n + 0.5)
    if n_test == 0 or n_test == n:
        raise InfeasibleSplitError(
            f"test_frac {test_frac} on {n} images gives {n_test} test images"
        )
    folds = []
    for i in range(repeats):
        order = list(ids)
        SplitMix64.substream(seed, i).shuffle(order)
        folds.append(Fold(index=i, train_ids=tuple(order[n_test:]), test_ids=tuple(order[:n_test])))
    return SplitPlan("subsample", seed, ds.dataset_id, tuple(folds))


def plan_to_dict(plan: SplitPlan) -> dict:
    return {
        "mode": plan.mode,
        "seed": plan.seed,
        "dataset_id": plan.dataset_id,
        "folds": [
            {"index": f.index, "train_ids": list(f.train_ids), "test_ids": list(f.test_ids)}
            for f in plan.folds
        ],
    }


def serialize_plan(plan: SplitPlan) -> str:
    return json.dumps(plan_to_dict(plan), ensure_ascii=False) + "\n"


def parse_plan(text: str | bytes) -> SplitPlan:
    try:
        doc = json.loads(text)
        folds = tuple(
            Fold(int(f["index"]), tuple(f["train_ids"]), tuple(f["test_ids"])) for f in doc["folds"]
        )
        mode = doc["mode"]
        if mode not in ("kfold", "subsample"):
            raise ValueError(f"unknown split mode {mode!r}")
        return SplitPlan(mode, int(doc["seed"]), str(doc["dataset_id"]), folds)
    except (ValueError, KeyError, TypeError) as exc:
        raise CamtrapError(f"malformed split plan: {exc}") from None
