"""IOU, greedy highest-IOU matching, per-fold scoring and cross-fold aggregation.

Scoring follows the camera-trap protocol: every ground-truth box competes
for predictions by IOU, the best remaining pair is taken first, and both
boxes are retired.  Accuracy is the share of ground-truth boxes whose
matched prediction carries the right species.  Missed boxes count as wrong
and spurious predictions are reported but never enter accuracy.
"""

from __future__ import annotations

import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Collection, Iterable, Mapping, Sequence

from .dataset import BoundingBox, Dataset, LabeledBox
from .errors import CamtrapError, EmptyEvaluationError, EmptyInputError, ManifestParseError

DetectionSet = dict[str, list["Detection"]]
"""Image id -> predictions for that image, in detector output order."""


@dataclass(frozen=True, slots=True)
class Detection:
    box: BoundingBox
    species: str
    score: float = 1.0

    def __post_init__(self) -> None:
        if not isinstance(self.species, str) or not self.species:
            raise CamtrapError("detection species must be a nonempty string")
        if isinstance(self.score, bool) or not isinstance(self.score, (int, float)):
            raise CamtrapError(f"detection score must be a number, got {self.score!r}")
        if not 0.0 <= self.score <= 1.0:
            raise CamtrapError(f"detection score must be in [0, 1], got {self.score}")
        if type(self.score) is not float:
            object.__setattr__(self, "score", float(self.score))


@dataclass(frozen=True, slots=True)
class MatchPair:
    gt_index: int
    pred_index: int
    iou: float
    class_correct: bool


@dataclass(frozen=True)
class ImageMatchResult:
    image_id: str
    matches: tuple[MatchPair, ...]
    unmatched_gt: tuple[int, ...]
    unmatched_pred: tuple[int, ...]


@dataclass(frozen=True)
class SpeciesAccuracy:
    species: str
    gt_boxes: int
    correct: int
    accuracy_pct: float


@dataclass(frozen=True)
class EvalCounts:
    total_gt: int
    total_pred: int
    matched: int
    spurious: int


@dataclass(frozen=True)
class EvalReport:
    fold_index: int | None
    accuracy_pct: float
    mean_iou: float | None
    per_species: tuple[SpeciesAccuracy, ...]
    counts: EvalCounts


@dataclass(frozen=True)
class Stat:
    """Mean and sample standard deviation over ``n`` fold values."""

    mean: float
    std: float
    n: int


@dataclass(frozen=True)
class SpeciesStat:
    species: str
    gt_boxes: int
    accuracy: Stat


@dataclass(frozen=True)
class AggregateReport:
    fold_count: int
    accuracy: Stat
    mean_iou: Stat | None
    per_species: tuple[SpeciesStat, ...]


# ---------------------------------------------------------------------------
# geometry and matching


def _iou_coords(
    ax0: float, ay0: float, ax1: float, ay1: float,
    bx0: float, by0: float, bx1: float, by1: float,
) -> float:
    iw = min(ax1, bx1) - max(ax0, bx0)
    if iw <= 0.0:
        return 0.0
    ih = min(ay1, by1) - max(ay0, by0)
    if ih <= 0.0:
        return 0.0
    inter = iw * ih
    return inter / ((ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection area over union area; 0.0 for disjoint or edge-touching boxes."""
    return _iou_coords(a.x_min, a.y_min, a.x_max, a.y_max, b.x_min, b.y_min, b.x_max, b.y_max)


def gt_sort_key(item: LabeledBox | tuple[BoundingBox, str]) -> tuple:
    box, species = item
    return (box.x_min, box.y_min, box.x_max, box.y_max, species)


def pred_sort_key(det: Detection) -> tuple:
    b = det.box
    return (b.x_min, b.y_min, b.x_max, b.y_max, det.species, -det.score)


def _dense_ranks(keys: list[tuple]) -> list[int]:
    order = {k: r for r, k in enumerate(sorted(set(keys)))}
    return [order[k] for k in keys]


def match_boxes(
    gt: Sequence[LabeledBox | tuple[BoundingBox, str]],
    preds: Sequence[Detection],
    min_iou: float = 0.0,
    image_id: str = "",
) -> ImageMatchResult:
    """Global greedy one-to-one matching by descending IOU.

    Only pairs with ``iou > min_iou`` are eligible.  Equal IOUs are ordered by
    the content key ``(gt box, gt species, pred box, pred species, -score)``
    and finally by list position, so the matched contents do not depend on
    input order.
    """
    if not gt or not preds:
        return ImageMatchResult(image_id, (), tuple(range(len(gt))), tuple(range(len(preds))))

    gt_ranks = _dense_ranks([gt_sort_key(g) for g in gt])
    pred_ranks = _dense_ranks([pred_sort_key(p) for p in preds])
    pred_coords = [(p.box.x_min, p.box.y_min, p.box.x_max, p.box.y_max) for p in preds]

    candidates = []
    for gi, (gbox, _) in enumerate(gt):
        ax0, ay0, ax1, ay1 = gbox.x_min, gbox.y_min, gbox.x_max, gbox.y_max
        rg = gt_ranks[gi]
        for pi, (bx0, by0, bx1, by1) in enumerate(pred_coords):
            v = _iou_coords(ax0, ay0, ax1, ay1, bx0, by0, bx1, by1)
            if v > min_iou:
                candidates.append((-v, rg, pred_ranks[pi], gi, pi))
    candidates.sort()

    used_gt = [False] * len(gt)
    used_pred = [False] * len(preds)
    matches = []
    for neg_v, _, _, gi, pi in candidates:
        if used_gt[gi] or used_pred[pi]:
            continue
        used_gt[gi] = used_pred[pi] = True
        matches.append(MatchPair(gi, pi, -neg_v, gt[gi][1] == preds[pi].species))
        if len(matches) == len(gt) or len(matches) == len(preds):
            break

    return ImageMatchResult(
        image_id=image_id,
        matches=tuple(matches),
        unmatched_gt=tuple(i for i, u in enumerate(used_gt) if not u),
        unmatched_pred=tuple(i for i, u in enumerate(used_pred) if not u),
    )


# ---------------------------------------------------------------------------
# scoring


def _match_chunk(
    chunk: list[tuple[str, tuple[LabeledBox, ...], list[Detection]]], min_iou: float
) -> list[ImageMatchResult]:
    return [match_boxes(gt, preds, min_iou, image_id) for image_id, gt, preds in chunk]


def evaluate(
    ds: Dataset,
    dets: Mapping[str, Sequence[Detection]],
    image_subset: Collection[str] | None = None,
    min_iou: float = 0.0,
    fold_index: int | None = None,
    workers: int = 1,
) -> EvalReport:
    """Score detections against ground truth over ``image_subset``.

    ``image_subset`` defaults to every image in ``ds``.  Detections for
    images outside the subset are ignored; subset images with no entry in
    ``dets`` are treated as having no predictions.  With ``workers > 1`` the
    per-image matching runs in a process pool; results are reduced in
    image-id order, so the report is identical to a sequential run.
    """
    by_id = ds.by_id()
    if image_subset is None:
        ids = sorted(by_id)
    else:
        subset = set(image_subset)
        unknown = subset - by_id.keys()
        if unknown:
            sample = ", ".join(sorted(unknown)[:5])
            raise CamtrapError(f"{len(unknown)} subset image ids not in dataset {ds.dataset_id!r}: {sample}")
        ids = sorted(subset)

    work = [(i, by_id[i].boxes, list(dets.get(i, ()))) for i in ids]
    total_gt = sum(len(gt) for _, gt, _ in work)
    if total_gt == 0:
        raise EmptyEvaluationError("no ground-truth boxes in the evaluated images")

    if workers > 1 and len(work) > 1:
        size = math.ceil(len(work) / workers)
        chunks = [work[i:i + size] for i in range(0, len(work), size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = [r for part in pool.map(_match_chunk, chunks, [min_iou] * len(chunks)) for r in part]
    else:
        results = _match_chunk(work, min_iou)

    gt_per_species: dict[str, int] = {}
    correct_per_species: dict[str, int] = {}
    ious: list[float] = []
    total_pred = spurious = 0
    for (_, gt, preds), res in zip(work, results):
        total_pred += len(preds)
        spurious += len(res.unmatched_pred)
        for _, species in gt:
            gt_per_species[species] = gt_per_species.get(species, 0) + 1
            correct_per_species.setdefault(species, 0)
        for m in res.matches:
            ious.append(m.iou)
            if m.class_correct:
                correct_per_species[gt[m.gt_index][1]] += 1

    correct = sum(correct_per_species.values())
    rows = [
        SpeciesAccuracy(s, n, correct_per_species[s], 100 * correct_per_species[s] / n)
        for s, n in gt_per_species.items()
    ]
    rows.sort(key=lambda r: (-r.gt_boxes, r.species))
    return EvalReport(
        fold_index=fold_index,
        accuracy_pct=100 * correct / total_gt,
        mean_iou=math.fsum(ious) / len(ious) if ious else None,
        per_species=tuple(rows),
        counts=EvalCounts(total_gt, total_pred, len(ious), spurious),
    )


def _stat(values: list[float]) -> Stat:
    # statistics.mean is exact, so the mean always lies within [min, max].
    mean = float(statistics.mean(values))
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return Stat(mean, std, len(values))


def aggregate(reports: Sequence[EvalReport]) -> AggregateReport:
    """Mean and sample standard deviation (n - 1) of each metric across folds.

    A species missing from a fold contributes no sample for that species;
    likewise for folds without any match (no mean IOU).
    """
    if not reports:
        raise EmptyInputError("aggregate needs at least one report")
    ious = [r.mean_iou for r in reports if r.mean_iou is not None]
    species_acc: dict[str, list[float]] = {}
    species_boxes: dict[str, int] = {}
    for r in reports:
        for row in r.per_species:
            species_acc.setdefault(row.species, []).append(row.accuracy_pct)
            species_boxes[row.species] = species_boxes.get(row.species, 0) + row.gt_boxes
    rows = [SpeciesStat(s, species_boxes[s], _stat(v)) for s, v in species_acc.items()]
    rows.sort(key=lambda r: (-r.gt_boxes, r.species))
    return AggregateReport(
        fold_count=len(reports),
        accuracy=_stat([r.accuracy_pct for r in reports]),
        mean_iou=_stat(ious) if ious else None,
        per_species=tuple(rows),
    )


# ---------------------------------------------------------------------------
# file formats


def parse_detections(source: bytes | str) -> DetectionSet:
    """Read the detection JSON-Lines format into a :data:`DetectionSet`."""
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    out: DetectionSet = {}
    for line_number, line in enumerate(source.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            image_id = record["image_id"]
            if not isinstance(image_id, str) or not image_id:
                raise ValueError("image_id must be a nonempty string")
            if image_id in out:
                raise ValueError(f"duplicate image_id {image_id!r}")
            out[image_id] = [
                Detection(BoundingBox.from_xyxy(d["xyxy"]), d["species"], d.get("score", 1.0))
                for d in record.get("detections", [])
            ]
        except (ValueError, KeyError, TypeError) as exc:
            raise ManifestParseError(line_number, str(exc)) from None
    return out


def serialize_detections(dets: Mapping[str, Iterable[Detection]]) -> str:
    """One line per image, sorted by image id."""
    lines = []
    for image_id in sorted(dets):
        record = {
            "image_id": image_id,
            "detections": [
                {"species": d.species, "xyxy": list(d.box.xyxy()), "score": d.score}
                for d in dets[image_id]
            ],
        }
        lines.append(json.dumps(record, ensure_ascii=False) + "\n")
    return "".join(lines)


def _stat_dict(s: Stat | None) -> dict | None:
    return None if s is None else {"mean": s.mean, "std": s.std, "n": s.n}


def report_to_dict(report: EvalReport | AggregateReport) -> dict:
    if isinstance(report, AggregateReport):
        return {
            "fold_count": report.fold_count,
            "accuracy_pct": _stat_dict(report.accuracy),
            "mean_iou": _stat_dict(report.mean_iou),
            "per_species": [
                {"species": r.species, "gt_boxes": r.gt_boxes, "accuracy_pct": _stat_dict(r.accuracy)}
                for r in report.per_species
            ],
        }
    return {
        "fold_index": report.fold_index,
        "accuracy_pct": report.accuracy_pct,
        "mean_iou": report.mean_iou,
        "per_species": [
            {"species": r.species, "gt_boxes": r.gt_boxes, "correct": r.correct, "accuracy_pct": r.accuracy_pct}
            for r in report.per_species
        ],
        "counts": {
            "total_gt": report.counts.total_gt,
            "total_pred": report.counts.total_pred,
            "matched": report.counts.matched,
            "spurious": report.counts.spurious,
        },
    }


def report_from_dict(doc: Mapping) -> EvalReport:
    try:
        c = doc["counts"]
        return EvalReport(
            fold_index=doc.get("fold_index"),
            accuracy_pct=float(doc["accuracy_pct"]),
            mean_iou=None if doc.get("mean_iou") is None else float(doc["mean_iou"]),
            per_species=tuple(
                SpeciesAccuracy(r["species"], int(r["gt_boxes"]), int(r["correct"]), float(r["accuracy_pct"]))
                for r in doc["per_species"]
            ),
            counts=EvalCounts(int(c["total_gt"]), int(c["total_pred"]), int(c["matched"]), int(c["spurious"])),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CamtrapError(f"malformed evaluation report: {exc!r}") from None
