"""Detector-agnostic evaluation toolkit for camera-trap object detection."""

from .dataset import (
    AnnotatedImage,
    BoundingBox,
    ClassSummary,
    Dataset,
    FilterStats,
    LabeledBox,
    box_area,
    class_summary,
    filter_small_boxes,
    parse_dataset,
    serialize_dataset,
)
from .detsim import NoiseModel, simulate
from .ecology import (
    AbundanceReport,
    CountTable,
    SurveySample,
    lincoln_petersen,
    relative_abundance,
    species_counts,
)
from .evaluation import (
    AggregateReport,
    Detection,
    DetectionSet,
    EvalReport,
    ImageMatchResult,
    MatchPair,
    aggregate,
    evaluate,
    iou,
    match_boxes,
    parse_detections,
    serialize_detections,
)
from .report import render_report, render_summary
from .splits import Fold, SplitPlan, make_kfold, make_subsample, parse_plan, serialize_plan

__version__ = "0.1.0"

__all__ = [
    "AbundanceReport",
    "AggregateReport",
    "AnnotatedImage",
    "BoundingBox",
    "ClassSummary",
    "CountTable",
    "Dataset",
    "Detection",
    "DetectionSet",
    "EvalReport",
    "FilterStats",
    "Fold",
    "ImageMatchResult",
    "LabeledBox",
    "MatchPair",
    "NoiseModel",
    "SplitPlan",
    "SurveySample",
    "aggregate",
    "box_area",
    "class_summary",
    "evaluate",
    "filter_small_boxes",
    "iou",
    "lincoln_petersen",
    "make_kfold",
    "make_subsample",
    "match_boxes",
    "parse_dataset",
    "parse_detections",
    "parse_plan",
    "relative_abundance",
    "render_report",
    "render_summary",
    "serialize_dataset",
    "serialize_detections",
    "serialize_plan",
    "simulate",
    "species_counts",
]
