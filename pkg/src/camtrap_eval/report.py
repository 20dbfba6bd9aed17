"""Markdown, CSV and JSON renderings of evaluation reports and class summaries.

Display rounding happens only here.  Accuracy cells read ``mean ± std`` with
the mean to one decimal and the std to three significant figures
(``93.0 ± 3.20``); IOU cells use two decimals on both sides (``0.80 ± 0.03``).
"""

from __future__ import annotations

import csv
import io
import json
from typing import Literal

from .dataset import ClassSummary
from .errors import CamtrapError
from .evaluation import AggregateReport, EvalReport, Stat, report_to_dict

Format = Literal["md", "csv", "json"]
FORMATS = ("md", "csv", "json")


class UsageError(CamtrapError):
    pass


def sig3(x: float) -> str:
    """Format ``x`` to three significant figures, keeping trailing zeros."""
    if x == 0:
        return "0.00"
    mantissa, exponent = f"{x:.2e}".split("e")
    exp = int(exponent)
    return f"{float(mantissa + 'e' + exponent):.{max(0, 2 - exp)}f}"


def acc_cell(stat: Stat) -> str:
    return f"{stat.mean:.1f} ± {sig3(stat.std)}"


def iou_cell(stat: Stat | None) -> str:
    if stat is None:
        return "n/a"
    return f"{stat.mean:.2f} ± {stat.std:.2f}"


def _check_format(fmt: str) -> None:
    if fmt not in FORMATS:
        raise UsageError(f"unknown format {fmt!r}; expected one of {', '.join(FORMATS)}")


def _md_table(header: list[str], rows: list[list[str]]) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    return "\n".join(lines) + "\n"


def _csv(header: list[str], rows: list[list[object]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _json(doc: object) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _render_aggregate(agg: AggregateReport, fmt: str) -> str:
    if fmt == "json":
        return _json(report_to_dict(agg))
    if fmt == "md":
        overall = _md_table(
            ["Folds", "Acc. (%)", "IOU"],
            [[str(agg.fold_count), acc_cell(agg.accuracy), iou_cell(agg.mean_iou)]],
        )
        species = _md_table(
            ["Species", "GT Boxes", "Folds", "Average Accuracy (%)"],
            [[r.species, str(r.gt_boxes), str(r.accuracy.n), acc_cell(r.accuracy)] for r in agg.per_species],
        )
        return overall + "\n" + species
    iou_mean = "" if agg.mean_iou is None else f"{agg.mean_iou.mean:.2f}"
    iou_std = "" if agg.mean_iou is None else f"{agg.mean_iou.std:.2f}"
    rows: list[list[object]] = [
        ["ALL", sum(r.gt_boxes for r in agg.per_species), agg.fold_count,
         f"{agg.accuracy.mean:.1f}", sig3(agg.accuracy.std), iou_mean, iou_std]
    ]
    rows += [
        [r.species, r.gt_boxes, r.accuracy.n, f"{r.accuracy.mean:.1f}", sig3(r.accuracy.std), "", ""]
        for r in agg.per_species
    ]
    return _csv(["species", "gt_boxes", "folds", "accuracy_mean", "accuracy_std", "iou_mean", "iou_std"], rows)


def _render_eval(rep: EvalReport, fmt: str) -> str:
    if fmt == "json":
        return _json(report_to_dict(rep))
    fold = "" if rep.fold_index is None else str(rep.fold_index)
    iou = "n/a" if rep.mean_iou is None else f"{rep.mean_iou:.2f}"
    c = rep.counts
    if fmt == "md":
        overall = _md_table(
            ["Fold", "Acc. (%)", "IOU", "GT", "Pred", "Matched", "Spurious"],
            [[fold, f"{rep.accuracy_pct:.1f}", iou, str(c.total_gt), str(c.total_pred), str(c.matched), str(c.spurious)]],
        )
        species = _md_table(
            ["Species", "GT Boxes", "Correct", "Accuracy (%)"],
            [[r.species, str(r.gt_boxes), str(r.correct), f"{r.accuracy_pct:.1f}"] for r in rep.per_species],
        )
        return overall + "\n" + species
    rows: list[list[object]] = [
        ["ALL", c.total_gt, sum(r.correct for r in rep.per_species), f"{rep.accuracy_pct:.1f}",
         "" if rep.mean_iou is None else iou]
    ]
    rows += [[r.species, r.gt_boxes, r.correct, f"{r.accuracy_pct:.1f}", ""] for r in rep.per_species]
    return _csv(["species", "gt_boxes", "correct", "accuracy_pct", "mean_iou"], rows)


def render_report(report: AggregateReport | EvalReport, fmt: str = "md") -> str:
    """Render a fold report or an aggregate as deterministic text."""
    _check_format(fmt)
    if isinstance(report, AggregateReport):
        return _render_aggregate(report, fmt)
    return _render_eval(report, fmt)


def render_summary(summary: ClassSummary, fmt: str = "md") -> str:
    """Per-species quantity/image table; distribution shares to 3 significant figures."""
    _check_format(fmt)
    if fmt == "json":
        return _json(
            {
                "image_count": summary.image_count,
                "rows": [
                    {
                        "species": r.species,
                        "total_quantity": r.total_quantity,
                        "total_images": r.total_images,
                        "distribution_pct": r.distribution_pct,
                    }
                    for r in summary.rows
                ],
            }
        )
    header = ["Species", "Total Quantity", "Total Images", "Image Class Distribution (%)"]
    rows = [[r.species, str(r.total_quantity), str(r.total_images), sig3(r.distribution_pct)] for r in summary.rows]
    if fmt == "md":
        return _md_table(header, rows)
    return _csv(["species", "total_quantity", "total_images", "distribution_pct"], rows)
