"""Ground-truth data model, JSON-Lines manifest I/O, and the small-box filter."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, NamedTuple

from .errors import (
    BoundsError,
    CamtrapError,
    DuplicateRecordError,
    EmptyInputError,
    InvalidGeometryError,
    ManifestParseError,
)

DEFAULT_MIN_BOX_AREA = 750.0


@dataclass(frozen=True, slots=True)
class BoundingBox:
    """Axis-aligned pixel rectangle, origin top-left."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        coords = (self.x_min, self.y_min, self.x_max, self.y_max)
        for c in coords:
            if isinstance(c, bool) or not isinstance(c, (int, float)):
                raise InvalidGeometryError(f"non-numeric coordinate in {coords!r}")
            if not math.isfinite(c) or c < 0:
                raise InvalidGeometryError(f"coordinates must be finite and >= 0: {coords!r}")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise InvalidGeometryError(f"degenerate box {coords!r}")
        # Integer input is stored as float so equality and serialization are uniform.
        for name, c in zip(("x_min", "y_min", "x_max", "y_max"), coords):
            if type(c) is not float:
                object.__setattr__(self, name, float(c))

    @classmethod
    def from_xyxy(cls, xyxy: Iterable[float]) -> "BoundingBox":
        vals = list(xyxy)
        if len(vals) != 4:
            raise InvalidGeometryError(f"expected 4 coordinates, got {len(vals)}")
        return cls(*vals)

    def xyxy(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)


def box_area(b: BoundingBox) -> float:
    """Closed-rectangle area in px^2 (no +1 pixel convention)."""
    return b.area


class LabeledBox(NamedTuple):
    box: BoundingBox
    species: str


@dataclass(frozen=True)
class AnnotatedImage:
    image_id: str
    boxes: tuple[LabeledBox, ...] = ()
    width: int | None = None
    height: int | None = None
    capture_tag: str | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.image_id, str) or not self.image_id:
            raise CamtrapError("image_id must be a nonempty string")
        for dim in (self.width, self.height):
            if dim is not None and (isinstance(dim, bool) or not isinstance(dim, int) or dim <= 0):
                raise BoundsError(f"{self.image_id}: width/height must be positive integers")
        object.__setattr__(self, "boxes", tuple(LabeledBox(*b) for b in self.boxes))
        for box, species in self.boxes:
            if not isinstance(species, str) or not species:
                raise CamtrapError(f"{self.image_id}: species must be a nonempty string")
            if self.width is not None and box.x_max > self.width:
                raise BoundsError(f"{self.image_id}: box {box.xyxy()} exceeds width {self.width}")
            if self.height is not None and box.y_max > self.height:
                raise BoundsError(f"{self.image_id}: box {box.xyxy()} exceeds height {self.height}")


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of annotated images plus its species registry.

    The registry keeps first-encounter order and may hold species that no
    box uses (for example after filtering).
    """

    dataset_id: str
    images: tuple[AnnotatedImage, ...] = ()
    species_registry: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "images", tuple(self.images))
        registry = list(dict.fromkeys(self.species_registry))
        known = set(registry)
        seen: set[str] = set()
        for img in self.images:
            if img.image_id in seen:
                raise DuplicateRecordError(f"duplicate image_id {img.image_id!r}")
            seen.add(img.image_id)
            for _, species in img.boxes:
                if species not in known:
                    known.add(species)
                    registry.append(species)
        object.__setattr__(self, "species_registry", tuple(registry))

    @property
    def box_count(self) -> int:
        return sum(len(img.boxes) for img in self.images)

    def image_ids(self) -> list[str]:
        return [img.image_id for img in self.images]

    def by_id(self) -> dict[str, AnnotatedImage]:
        return {img.image_id: img for img in self.images}


@dataclass(frozen=True)
class FilterStats:
    boxes_removed: int
    images_emptied: int
    threshold: float


@dataclass(frozen=True)
class ClassRow:
    species: str
    total_quantity: int
    total_images: int
    distribution_pct: float


@dataclass(frozen=True)
class ClassSummary:
    rows: tuple[ClassRow, ...]
    image_count: int


def _image_from_record(record: object, line_number: int) -> AnnotatedImage:
    if not isinstance(record, dict):
        raise ManifestParseError(line_number, "record must be a JSON object")
    image_id = record.get("image_id")
    if not isinstance(image_id, str) or not image_id:
        raise ManifestParseError(line_number, "missing or empty image_id")
    raw_boxes = record.get("boxes", [])
    if not isinstance(raw_boxes, list):
        raise ManifestParseError(line_number, "boxes must be a list")
    capture_tag = record.get("capture_tag")
    if capture_tag is not None and not isinstance(capture_tag, str):
        raise ManifestParseError(line_number, "capture_tag must be a string")
    boxes = []
    for entry in raw_boxes:
        if not isinstance(entry, dict):
            raise ManifestParseError(line_number, "box entries must be objects")
        species = entry.get("species")
        if not isinstance(species, str) or not species:
            raise ManifestParseError(line_number, "box species must be a nonempty string")
        xyxy = entry.get("xyxy")
        if not isinstance(xyxy, list):
            raise ManifestParseError(line_number, "box xyxy must be a list of 4 numbers")
        try:
            box = BoundingBox.from_xyxy(xyxy)
        except InvalidGeometryError as exc:
            raise ManifestParseError(line_number, str(exc)) from None
        boxes.append(LabeledBox(box, species))
    try:
        return AnnotatedImage(
            image_id=image_id,
            boxes=tuple(boxes),
            width=record.get("width"),
            height=record.get("height"),
            capture_tag=capture_tag,
        )
    except BoundsError as exc:
        raise BoundsError(f"line {line_number}: {exc}") from None


def parse_dataset(source: IO[bytes] | IO[str] | bytes | str, dataset_id: str) -> Dataset:
    """Parse a JSON-Lines manifest, one image per line, preserving input order.

    ``source`` may be a binary or text stream, or the raw content.  Blank
    lines are skipped.  Raises :class:`ManifestParseError` (with the 1-based
    line number), :class:`DuplicateRecordError` or :class:`BoundsError`.
    """
    if isinstance(source, (bytes, str)):
        content = source
    else:
        content = source.read()
    if isinstance(content, bytes):
        try:
            content = content.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ManifestParseError(0, f"not valid UTF-8: {exc}") from None

    images: list[AnnotatedImage] = []
    seen: set[str] = set()
    for line_number, line in enumerate(content.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestParseError(line_number, f"invalid JSON: {exc.msg}") from None
        img = _image_from_record(record, line_number)
        if img.image_id in seen:
            raise DuplicateRecordError(f"line {line_number}: duplicate image_id {img.image_id!r}")
        seen.add(img.image_id)
        images.append(img)
    return Dataset(dataset_id=dataset_id, images=tuple(images))


def image_to_record(img: AnnotatedImage) -> dict:
    record: dict = {"image_id": img.image_id}
    if img.width is not None:
        record["width"] = img.width
    if img.height is not None:
        record["height"] = img.height
    if img.capture_tag is not None:
        record["capture_tag"] = img.capture_tag
    record["boxes"] = [{"species": s, "xyxy": list(b.xyxy())} for b, s in img.boxes]
    return record


def serialize_dataset(ds: Dataset) -> str:
    """Inverse of :func:`parse_dataset`; one JSON object per line."""
    return "".join(
        json.dumps(image_to_record(img), ensure_ascii=False) + "\n" for img in ds.images
    )


def filter_small_boxes(
    ds: Dataset, min_area: float = DEFAULT_MIN_BOX_AREA
) -> tuple[Dataset, FilterStats]:
    """Remove boxes whose area is strictly below ``min_area``.

    Images that lose all their boxes are dropped and counted in
    ``images_emptied``; images that were empty on input are kept.  The
    species registry is carried over unchanged.
    """
    if not min_area > 0:
        raise ValueError(f"min_area must be positive, got {min_area}")
    kept_images = []
    removed = 0
    emptied = 0
    for img in ds.images:
        kept = tuple(lb for lb in img.boxes if lb.box.area >= min_area)
        removed += len(img.boxes) - len(kept)
        if img.boxes and not kept:
            emptied += 1
            continue
        if len(kept) == len(img.boxes):
            kept_images.append(img)
        else:
            kept_images.append(
                AnnotatedImage(img.image_id, kept, img.width, img.height, img.capture_tag)
            )
    out = Dataset(ds.dataset_id, tuple(kept_images), ds.species_registry)
    return out, FilterStats(boxes_removed=removed, images_emptied=emptied, threshold=float(min_area))


def class_summary(ds: Dataset) -> ClassSummary:
    """Per-species box and image counts with the image-share percentage."""
    n_images = len(ds.images)
    if n_images == 0:
        raise EmptyInputError("class summary of an empty dataset")
    quantity = dict.fromkeys(ds.species_registry, 0)
    images = dict.fromkeys(ds.species_registry, 0)
    for img in ds.images:
        for _, species in img.boxes:
            quantity[species] += 1
        for species in {s for _, s in img.boxes}:
            images[species] += 1
    rows = [
        ClassRow(s, quantity[s], images[s], images[s] / n_images * 100)
        for s in ds.species_registry
    ]
    rows.sort(key=lambda r: (-r.total_quantity, r.species))
    return ClassSummary(rows=tuple(rows), image_count=n_images)
