"""Reference per-species counts for the Reconyx Camera Trap (RCT) subset.

``RCT_SPECIES`` lists, per species, the box count, image count and image
class distribution (percent, rounded to one decimal) of the RCT
bounding-box subset.  :func:`build_rct_replica` turns those counts into a
synthetic manifest with placeholder geometry, useful for exercising the
summary, split and simulation code at the real dataset's scale.

The per-species image counts sum to 947 while the subset holds 946
images.  By default the replica reconciles the two by putting the last two
species (Red Fox, Coiban Agouti) in one shared image.  That keeps every
per-species count and gives 946 images.  Pass ``shared_image=False`` for 947
single-species images.
"""

from __future__ import annotations

from importlib import resources
from typing import NamedTuple

from .dataset import AnnotatedImage, BoundingBox, Dataset, LabeledBox, parse_dataset


class SpeciesCount(NamedTuple):
    species: str
    total_quantity: int
    total_images: int
    distribution_pct: float


RCT_SPECIES: tuple[SpeciesCount, ...] = (
    SpeciesCount("Mouflon", 126, 45, 4.8),
    SpeciesCount("Collared Peccary", 96, 82, 8.7),
    SpeciesCount("Agouti", 87, 87, 9.2),
    SpeciesCount("Wild Boar", 81, 56, 5.9),
    SpeciesCount("Red Deer", 68, 68, 7.2),
    SpeciesCount("Red Brocket Deer", 63, 63, 6.7),
    SpeciesCount("Ocelot", 63, 63, 6.7),
    SpeciesCount("White Nosed Couti", 60, 38, 4.0),
    SpeciesCount("Paca", 57, 57, 6.0),
    SpeciesCount("Great Tinamou", 52, 44, 4.6),
    SpeciesCount("White Tailed Deer", 47, 47, 5.0),
    SpeciesCount("Roe Deer", 46, 46, 4.9),
    SpeciesCount("Common Opossum", 44, 44, 4.6),
    SpeciesCount("Red Squirrel", 39, 39, 4.1),
    SpeciesCount("Bird Species", 38, 29, 3.1),
    SpeciesCount("Spiny Rat", 34, 34, 3.6),
    SpeciesCount("European Hare", 31, 28, 3.0),
    SpeciesCount("Wood Mouse", 29, 29, 3.1),
    SpeciesCount("Red Fox", 25, 25, 2.6),
    SpeciesCount("Coiban Agouti", 23, 23, 2.4),
)

RCT_IMAGE_COUNT = 946
REPLICA_WIDTH = 2048
REPLICA_HEIGHT = 1536
_BOX_W = 240
_BOX_H = 180
_GRID_COLS = REPLICA_WIDTH // _BOX_W

PACKAGED_MANIFEST = "rct_replica.jsonl"


def _grid_box(slot: int) -> BoundingBox:
    # Non-overlapping slots on a fixed grid, 43200 px^2 each.
    col, row = slot % _GRID_COLS, slot // _GRID_COLS
    x0, y0 = col * _BOX_W, row * _BOX_H
    return BoundingBox(x0, y0, x0 + _BOX_W - 40, y0 + _BOX_H - 30)


def build_rct_replica(shared_image: bool = True) -> Dataset:
    """Synthetic manifest whose per-species box and image counts match ``RCT_SPECIES``."""
    per_image: list[list[str]] = []
    for row in RCT_SPECIES:
        base, extra = divmod(row.total_quantity, row.total_images)
        for j in range(row.total_images):
            per_image.append([row.species] * (base + (1 if j < extra else 0)))
    if shared_image:
        # Fold the last Coiban Agouti image into the last Red Fox image.
        fox_last = sum(r.total_images for r in RCT_SPECIES[:-1]) - 1
        per_image[fox_last].extend(per_image.pop())

    images = []
    for i, species_list in enumerate(per_image):
        boxes = tuple(LabeledBox(_grid_box(k), s) for k, s in enumerate(species_list))
        images.append(
            AnnotatedImage(
                image_id=f"rct_{i + 1:04d}",
                boxes=boxes,
                width=REPLICA_WIDTH,
                height=REPLICA_HEIGHT,
                capture_tag="night" if i % 3 == 2 else "day",
            )
        )
    return Dataset("rct_replica", tuple(images), tuple(r.species for r in RCT_SPECIES))


def load_rct_replica() -> Dataset:
    """Load the 946-image replica manifest shipped with the package."""
    data = resources.files("camtrap_eval.data").joinpath(PACKAGED_MANIFEST).read_bytes()
    return parse_dataset(data, "rct_replica")
