import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from camtrap_eval.dataset import BoundingBox, Dataset, LabeledBox
from camtrap_eval.errors import CamtrapError, EmptyEvaluationError, EmptyInputError, ManifestParseError
from camtrap_eval.evaluation import (
    Detection,
    EvalCounts,
    EvalReport,
    SpeciesAccuracy,
    aggregate,
    evaluate,
    iou,
    match_boxes,
    parse_detections,
    report_from_dict,
    report_to_dict,
    serialize_detections,
)
from conftest import boxes, make_image
from oracles import canonical, naive_greedy, raster_iou


# -- iou ------------------------------------------------------------------


def test_iou_identity_and_disjoint():
    a = BoundingBox(3, 4, 17, 29)
    assert iou(a, a) == 1.0
    assert iou(a, BoundingBox(100, 100, 120, 120)) == 0.0
    # Shared edge has zero-area overlap.
    assert iou(BoundingBox(0, 0, 10, 10), BoundingBox(10, 0, 20, 10)) == 0.0


@pytest.mark.parametrize(
    "a, b, expected",
    [
        ((0, 0, 10, 10), (5, 5, 15, 15), 0.14285714285714285),  # 25 / 175 by cell count
        ((0, 0, 10, 10), (1, 1, 11, 11), 0.680672268907563),  # 81 / 119 by cell count
    ],
)
def test_iou_known_values(a, b, expected):
    assert iou(BoundingBox(*a), BoundingBox(*b)) == pytest.approx(expected, abs=1e-15)
    assert raster_iou(BoundingBox(*a), BoundingBox(*b)) == pytest.approx(expected, abs=1e-15)


@given(boxes(64), boxes(64))
def test_iou_matches_raster_oracle(a, b):
    assert abs(iou(a, b) - raster_iou(a, b)) <= 1e-12


@given(boxes(), boxes())
def test_iou_symmetric_and_bounded(a, b):
    v = iou(a, b)
    assert v == iou(b, a)
    assert 0.0 <= v <= 1.0


@given(
    st.floats(0, 1e6, allow_nan=False),
    st.floats(0, 1e6, allow_nan=False),
    st.floats(1e-3, 1e6, allow_nan=False),
    st.floats(1e-3, 1e6, allow_nan=False),
)
def test_iou_self_is_one_for_float_boxes(x, y, w, h):
    try:
        a = BoundingBox(x, y, x + w, y + h)
    except CamtrapError:
        return
    assert iou(a, a) == 1.0


# -- matching ---------------------------------------------------------------


def test_match_two_species_example(zebra_scene):
    gt, preds = zebra_scene
    res = match_boxes(gt, preds)
    assert [(m.gt_index, m.pred_index, m.class_correct) for m in res.matches] == [(0, 0, True), (1, 1, False)]
    assert [m.iou for m in res.matches] == pytest.approx([81 / 119, 81 / 119], abs=1e-15)
    assert res.unmatched_gt == () and res.unmatched_pred == (2,)


def test_match_identity_detections():
    gt = [LabeledBox(BoundingBox(i * 50, 0, i * 50 + 40, 40), f"s{i}") for i in range(5)]
    preds = [Detection(b, s, 0.5) for b, s in gt]
    res = match_boxes(gt, preds)
    assert all(m.iou == 1.0 and m.class_correct for m in res.matches)
    assert sorted(m.gt_index for m in res.matches) == list(range(5))


def test_match_empty_inputs():
    gt = [LabeledBox(BoundingBox(0, 0, 5, 5), "a")]
    res = match_boxes(gt, [])
    assert res.matches == () and res.unmatched_gt == (0,)
    res = match_boxes([], [Detection(BoundingBox(0, 0, 5, 5), "a")])
    assert res.unmatched_pred == (0,)


def test_match_is_global_not_per_gt_order():
    # g0 would greedily grab p0 in a per-gt scan, but (g1, p0) has the higher IOU.
    gt = [LabeledBox(BoundingBox(0, 0, 10, 10), "a"), LabeledBox(BoundingBox(2, 0, 12, 10), "a")]
    preds = [Detection(BoundingBox(2, 0, 12, 10), "a"), Detection(BoundingBox(0, 0, 9, 10), "a")]
    res = match_boxes(gt, preds)
    assert [(m.gt_index, m.pred_index) for m in res.matches] == [(1, 0), (0, 1)]


def test_match_min_iou_is_strict():
    gt = [LabeledBox(BoundingBox(0, 0, 10, 10), "a")]
    preds = [Detection(BoundingBox(5, 0, 15, 10), "a")]  # iou = 50 / 150
    assert match_boxes(gt, preds, min_iou=1 / 3).matches == ()
    assert len(match_boxes(gt, preds, min_iou=0.33).matches) == 1


def test_tie_broken_by_content_key():
    g = LabeledBox(BoundingBox(0, 0, 10, 10), "a")
    # Both predictions have iou 0.5 with g; the smaller box key wins.
    p_left = Detection(BoundingBox(0, 0, 5, 10), "a")
    p_right = Detection(BoundingBox(5, 0, 10, 10), "b")
    for preds in ([p_left, p_right], [p_right, p_left]):
        res = match_boxes([g], preds)
        assert preds[res.matches[0].pred_index] == p_left


def test_tie_broken_by_score_last():
    g = LabeledBox(BoundingBox(0, 0, 10, 10), "a")
    low = Detection(BoundingBox(0, 0, 10, 10), "a", 0.2)
    high = Detection(BoundingBox(0, 0, 10, 10), "a", 0.9)
    for preds in ([low, high], [high, low]):
        res = match_boxes([g], preds)
        assert preds[res.matches[0].pred_index] is high


def _random_instance(rng: random.Random, grid: int = 10):
    def rbox():
        x0, x1 = sorted(rng.sample(range(grid + 1), 2))
        y0, y1 = sorted(rng.sample(range(grid + 1), 2))
        return BoundingBox(x0, y0, x1, y1)

    species = ["a", "b"]
    gt = [LabeledBox(rbox(), rng.choice(species)) for _ in range(rng.randint(0, 8))]
    preds = [Detection(rbox(), rng.choice(species), rng.choice([0.25, 0.5, 1.0])) for _ in range(rng.randint(0, 8))]
    # Seed exact duplicates so equal IOUs are common.
    if gt and rng.random() < 0.5:
        gt.append(rng.choice(gt))
    if preds and rng.random() < 0.5:
        preds.append(rng.choice(preds))
    return gt[:8], preds[:8]


def test_match_equals_naive_rescan_sample():
    rng = random.Random(1)
    for _ in range(300):
        gt, preds = _random_instance(rng)
        got = [(m.gt_index, m.pred_index, m.iou, m.class_correct) for m in match_boxes(gt, preds).matches]
        assert got == naive_greedy(gt, preds)


def test_match_invariants_sample():
    rng = random.Random(2)
    for _ in range(300):
        gt, preds = _random_instance(rng)
        res = match_boxes(gt, preds)
        ious = [m.iou for m in res.matches]
        assert ious == sorted(ious, reverse=True)
        g_used = [m.gt_index for m in res.matches] + list(res.unmatched_gt)
        p_used = [m.pred_index for m in res.matches] + list(res.unmatched_pred)
        assert sorted(g_used) == list(range(len(gt)))
        assert sorted(p_used) == list(range(len(preds)))


def test_match_permutation_invariance_sample():
    rng = random.Random(3)
    for _ in range(30):
        gt, preds = _random_instance(rng)
        ref = canonical(match_boxes(gt, preds), gt, preds)
        for _ in range(30):
            g2, p2 = gt[:], preds[:]
            rng.shuffle(g2)
            rng.shuffle(p2)
            assert canonical(match_boxes(g2, p2), g2, p2) == ref


# -- evaluate -------------------------------------------------------------


def test_evaluate_single_image_example(zebra_scene):
    gt, preds = zebra_scene
    ds = Dataset("d", (make_image("img", *[(b.xyxy(), s) for b, s in gt]),))
    rep = evaluate(ds, {"img": preds})
    assert rep.accuracy_pct == 50.0
    assert rep.mean_iou == pytest.approx(81 / 119, abs=1e-15)
    assert rep.per_species == (
        SpeciesAccuracy("wildebeest", 1, 0, 0.0),
        SpeciesAccuracy("zebra", 1, 1, 100.0),
    )
    assert rep.counts == EvalCounts(total_gt=2, total_pred=3, matched=2, spurious=1)


def test_evaluate_perfect_detections():
    ds = Dataset(
        "d",
        (
            make_image("a", ((0, 0, 40, 40), "x"), ((50, 50, 90, 90), "y")),
            make_image("b", ((10, 10, 60, 60), "x")),
        ),
    )
    dets = {img.image_id: [Detection(b, s) for b, s in img.boxes] for img in ds.images}
    rep = evaluate(ds, dets)
    assert rep.accuracy_pct == 100.0 and rep.mean_iou == 1.0 and rep.counts.spurious == 0


def test_evaluate_missed_boxes_count_against_accuracy():
    ds = Dataset("d", (make_image("a", ((0, 0, 40, 40), "x"), ((50, 50, 90, 90), "x")),))
    rep = evaluate(ds, {"a": [Detection(BoundingBox(0, 0, 40, 40), "x")]})
    assert rep.accuracy_pct == 50.0
    assert rep.mean_iou == 1.0
    assert rep.counts.matched == 1


def test_evaluate_no_matches_gives_absent_iou():
    ds = Dataset("d", (make_image("a", ((0, 0, 40, 40), "x")),))
    rep = evaluate(ds, {})
    assert rep.accuracy_pct == 0.0 and rep.mean_iou is None


def test_evaluate_subset_and_ignored_detections():
    ds = Dataset("d", (make_image("a", ((0, 0, 40, 40), "x")), make_image("b", ((0, 0, 40, 40), "y"))))
    dets = {
        "a": [Detection(BoundingBox(0, 0, 40, 40), "x")],
        "b": [Detection(BoundingBox(0, 0, 40, 40), "x")] * 3,
        "zzz": [Detection(BoundingBox(0, 0, 40, 40), "x")],
    }
    rep = evaluate(ds, dets, image_subset={"a"}, fold_index=2)
    assert rep.fold_index == 2
    assert rep.counts == EvalCounts(1, 1, 1, 0)
    assert rep.accuracy_pct == 100.0


def test_evaluate_denominator_independent_of_detection_count():
    ds = Dataset("d", (make_image("a", ((0, 0, 40, 40), "x"), ((100, 100, 140, 140), "y")),))
    for n in (0, 1, 5, 20):
        dets = {"a": [Detection(BoundingBox(0, 0, 40, 40), "x")] * n}
        assert evaluate(ds, dets).counts.total_gt == 2


def test_evaluate_errors():
    ds = Dataset("d", (make_image("a"), make_image("b", ((0, 0, 40, 40), "x"))))
    with pytest.raises(EmptyEvaluationError):
        evaluate(ds, {}, image_subset={"a"})
    with pytest.raises(CamtrapError, match="not in dataset"):
        evaluate(ds, {}, image_subset={"nope"})


def test_evaluate_parallel_equals_sequential():
    rng = random.Random(4)
    images = []
    dets = {}
    for i in range(60):
        gt, preds = _random_instance(rng, grid=60)
        images.append(make_image(f"im{i}", *[(b.xyxy(), s) for b, s in gt]))
        dets[f"im{i}"] = preds
    ds = Dataset("d", tuple(images))
    assert evaluate(ds, dets, workers=3) == evaluate(ds, dets, workers=1)


# -- aggregate --------------------------------------------------------------


def _report(acc, iou_value=0.8, species=()):
    return EvalReport(None, acc, iou_value, tuple(species), EvalCounts(10, 10, 10, 0))


def test_aggregate_identical():
    agg = aggregate([_report(93.0)] * 5)
    assert agg.accuracy.mean == 93.0 and agg.accuracy.std == 0.0 and agg.fold_count == 5


def test_aggregate_two_folds():
    agg = aggregate([_report(90.0), _report(95.0)])
    assert agg.accuracy.mean == 92.5
    assert agg.accuracy.std == pytest.approx(3.5355339059327378, abs=1e-12)


def test_aggregate_single_report():
    agg = aggregate([_report(71.4, 0.57)])
    assert (agg.accuracy.mean, agg.accuracy.std) == (71.4, 0.0)
    assert (agg.mean_iou.mean, agg.mean_iou.std) == (0.57, 0.0)


def test_aggregate_species_union_and_missing_iou():
    r1 = _report(50.0, None, [SpeciesAccuracy("a", 2, 1, 50.0)])
    r2 = _report(100.0, 0.9, [SpeciesAccuracy("a", 1, 1, 100.0), SpeciesAccuracy("b", 4, 4, 100.0)])
    agg = aggregate([r1, r2])
    assert agg.mean_iou.n == 1 and agg.mean_iou.mean == 0.9
    rows = {r.species: r for r in agg.per_species}
    assert rows["a"].accuracy.n == 2 and rows["a"].accuracy.mean == 75.0 and rows["a"].gt_boxes == 3
    assert rows["b"].accuracy.n == 1 and rows["b"].accuracy.std == 0.0
    assert [r.species for r in agg.per_species] == ["b", "a"]


def test_aggregate_empty():
    with pytest.raises(EmptyInputError):
        aggregate([])


def test_aggregate_all_folds_without_matches():
    assert aggregate([_report(0.0, None)]).mean_iou is None


@given(st.lists(st.floats(0, 100, allow_nan=False), min_size=1, max_size=8))
def test_aggregate_mean_within_range(values):
    agg = aggregate([_report(v) for v in values])
    assert min(values) <= agg.accuracy.mean <= max(values)
    assert agg.accuracy.std >= 0
    if len(set(values)) == 1:
        assert agg.accuracy.std == 0.0


# -- file formats -----------------------------------------------------------


def test_detection_validation():
    with pytest.raises(CamtrapError):
        Detection(BoundingBox(0, 0, 1, 1), "a", 1.5)
    with pytest.raises(CamtrapError):
        Detection(BoundingBox(0, 0, 1, 1), "", 0.5)


def test_detection_file_round_trip():
    dets = {
        "b": [Detection(BoundingBox(0, 0, 1.5, 2), "x", 0.25)],
        "a": [],
    }
    text = serialize_detections(dets)
    assert text.splitlines()[0] == '{"image_id": "a", "detections": []}'
    assert text.splitlines()[1] == '{"image_id": "b", "detections": [{"species": "x", "xyxy": [0.0, 0.0, 1.5, 2.0], "score": 0.25}]}'
    assert parse_detections(text) == dets


def test_detection_file_errors():
    with pytest.raises(ManifestParseError, match="line 2"):
        parse_detections('{"image_id": "a", "detections": []}\n{"image_id": "b", "detections": [{"species": "x"}]}\n')
    with pytest.raises(ManifestParseError, match="duplicate"):
        parse_detections('{"image_id": "a"}\n{"image_id": "a"}\n')


def test_report_dict_round_trip(zebra_scene):
    gt, preds = zebra_scene
    ds = Dataset("d", (make_image("img", *[(b.xyxy(), s) for b, s in gt]),))
    rep = evaluate(ds, {"img": preds}, fold_index=0)
    assert report_from_dict(report_to_dict(rep)) == rep
