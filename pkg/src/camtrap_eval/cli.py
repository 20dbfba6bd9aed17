"""``camtrap-eval`` command line.

Each subcommand reads its inputs, runs one operation and writes the result
atomically (temp file + rename) to ``--out``, or to stdout when ``--out`` is
omitted.  Exit status: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Sequence

from . import __version__
from .dataset import DEFAULT_MIN_BOX_AREA, Dataset, class_summary, filter_small_boxes, parse_dataset, serialize_dataset
from .detsim import NoiseModel, simulate
from .ecology import SurveySample, lincoln_petersen, relative_abundance, species_counts
from .errors import CamtrapError
from .evaluation import aggregate, evaluate, parse_detections, report_from_dict, serialize_detections
from .report import render_report, render_summary
from .rng import MASK64
from .splits import make_kfold, make_subsample, parse_plan, serialize_plan

log = logging.getLogger("camtrap_eval")

THREADS_ENV = "CAMTRAP_EVAL_THREADS"


class _UsageError(Exception):
    pass


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= value <= MASK64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise CamtrapError(f"cannot read {path}: {exc.strerror}") from None


def _load_dataset(path: str) -> Dataset:
    return parse_dataset(_read(path), dataset_id=Path(path).name.split(".")[0])


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    target = Path(out)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        value = 0
    if value < 1:
        raise _UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


def cmd_ingest(args: argparse.Namespace) -> None:
    ds = _load_dataset(args.manifest)
    if args.dataset_id:
        ds = Dataset(args.dataset_id, ds.images, ds.species_registry)
    filtered, stats = filter_small_boxes(ds, args.min_box_area)
    log.info(
        "ingest: %d images, removed %d boxes below %g px^2, dropped %d emptied images",
        len(filtered.images), stats.boxes_removed, stats.threshold, stats.images_emptied,
    )
    _write(serialize_dataset(filtered), args.out)


def cmd_split(args: argparse.Namespace) -> None:
    ds = _load_dataset(args.dataset)
    if args.mode == "kfold":
        plan = make_kfold(ds, k=args.folds, seed=args.seed)
    else:
        plan = make_subsample(ds, repeats=args.folds, test_frac=args.test_frac, seed=args.seed)
    _write(serialize_plan(plan), args.out)


def cmd_simulate(args: argparse.Namespace) -> None:
    ds = _load_dataset(args.dataset)
    noise = NoiseModel(
        jitter_frac=args.jitter,
        class_flip_prob=args.class_flip,
        drop_prob=args.drop,
        spurious_rate=args.spurious,
        score_floor=args.score_floor,
    )
    _write(serialize_detections(simulate(ds, noise, args.seed)), args.out)


def cmd_eval(args: argparse.Namespace) -> None:
    workers = _worker_count()
    ds = _load_dataset(args.dataset)
    dets = parse_detections(_read(args.detections))
    subset = None
    fold_index = None
    if args.split is not None:
        if args.fold is None:
            raise _UsageError("--fold is required with --split")
        plan = parse_plan(_read(args.split))
        subset = plan.fold(args.fold).test_ids
        fold_index = args.fold
    elif args.fold is not None:
        raise _UsageError("--fold needs --split")
    report = evaluate(ds, dets, subset, min_iou=args.min_iou, fold_index=fold_index, workers=workers)
    _write(render_report(report, args.format), args.out)


def cmd_aggregate(args: argparse.Namespace) -> None:
    reports = []
    for path in args.reports:
        try:
            doc = json.loads(_read(path))
        except json.JSONDecodeError as exc:
            raise CamtrapError(f"{path}: invalid JSON: {exc.msg}") from None
        reports.append(report_from_dict(doc))
    _write(render_report(aggregate(reports), args.format), args.out)


def cmd_summary(args: argparse.Namespace) -> None:
    _write(render_summary(class_summary(_load_dataset(args.dataset)), args.format), args.out)


def _ecology_text(doc: dict, rows: list[list[object]], header: list[str], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def cmd_ecology(args: argparse.Namespace) -> None:
    if args.metric == "lincoln-petersen":
        if None in (args.marked, args.captured, args.recaptured):
            raise _UsageError("lincoln-petersen needs --marked, --captured and --recaptured")
        sample = SurveySample(args.marked, args.captured, args.recaptured)
        estimate = lincoln_petersen(sample, args.variant)
        doc = {
            "marked": sample.marked,
            "captured": sample.captured,
            "recaptured": sample.recaptured,
            "variant": args.variant,
            "estimate": estimate,
        }
        header = list(doc)
        _write(_ecology_text(doc, [list(doc.values())], header, args.format), args.out)
        return

    if (args.dataset is None) == (args.detections is None):
        raise _UsageError(f"--metric {args.metric} needs exactly one of --dataset or --detections")
    source = _load_dataset(args.dataset) if args.dataset else parse_detections(_read(args.detections))
    table = species_counts(source)
    if args.metric == "counts":
        doc = {"per_image": table.per_image, "totals": table.totals}
        rows: list[list[object]] = [
            [image_id, s, n] for image_id, counts in table.per_image.items() for s, n in counts.items()
        ]
        rows += [["TOTAL", s, n] for s, n in table.totals.items()]
        _write(_ecology_text(doc, rows, ["image_id", "species", "count"], args.format), args.out)
    else:
        ab = relative_abundance(table)
        doc = {"proportions": ab.proportions, "shannon_index": ab.shannon_index}
        rows = [[s, table.totals[s], p] for s, p in ab.proportions.items()]
        rows.append(["SHANNON_INDEX", "", ab.shannon_index])
        _write(_ecology_text(doc, rows, ["species", "count", "proportion"], args.format), args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="camtrap-eval", description="Camera-trap object-detection benchmark toolkit."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a manifest and drop boxes below an area threshold")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out")
    p.add_argument("--min-box-area", type=float, default=DEFAULT_MIN_BOX_AREA)
    p.add_argument("--dataset-id")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("split", help="generate train/test folds")
    p.add_argument("--dataset", required=True)
    p.add_argument("--mode", choices=("kfold", "subsample"), default="kfold")
    p.add_argument("--folds", type=int, default=5, help="k for kfold, repeats for subsample")
    p.add_argument("--test-frac", type=float, default=0.2)
    p.add_argument("--seed", type=_seed, default=42)
    p.add_argument("--out")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("simulate", help="perturb ground truth into synthetic detections")
    p.add_argument("--dataset", required=True)
    p.add_argument("--jitter", type=float, default=0.0)
    p.add_argument("--class-flip", type=float, default=0.0)
    p.add_argument("--drop", type=float, default=0.0)
    p.add_argument("--spurious", type=float, default=0.0)
    p.add_argument("--score-floor", type=float, default=0.0)
    p.add_argument("--seed", type=_seed, default=42)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eval", help="score detections against ground truth")
    p.add_argument("--dataset", required=True)
    p.add_argument("--detections", required=True)
    p.add_argument("--split")
    p.add_argument("--fold", type=int)
    p.add_argument("--min-iou", type=float, default=0.0)
    p.add_argument("--format", choices=("json", "md", "csv"), default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("aggregate", help="mean and std of fold reports")
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument("--format", choices=("md", "csv", "json"), default="md")
    p.add_argument("--out")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("summary", help="per-species class distribution table")
    p.add_argument("--dataset", required=True)
    p.add_argument("--format", choices=("md", "csv", "json"), default="md")
    p.add_argument("--out")
    p.set_defaults(func=cmd_summary)

    p = sub.add_parser("ecology", help="counts, relative abundance or Lincoln-Petersen estimate")
    p.add_argument("--metric", choices=("counts", "abundance", "lincoln-petersen"), required=True)
    p.add_argument("--dataset")
    p.add_argument("--detections")
    p.add_argument("--marked", type=int)
    p.add_argument("--captured", type=int)
    p.add_argument("--recaptured", type=int)
    p.add_argument("--variant", choices=("classic", "chapman"), default="classic")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ecology)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not logging.getLogger().handlers:
        logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"camtrap-eval: error: {exc}", file=sys.stderr)
        return 2
    except CamtrapError as exc:
        print(f"camtrap-eval: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())
