"""Population statistics from box counts: abundance, Shannon diversity, mark-recapture."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Mapping, Sequence

from .dataset import Dataset
from .errors import CamtrapError, EmptyInputError, UndefinedEstimateError
from .evaluation import Detection


@dataclass(frozen=True)
class CountTable:
    """Boxes per species, per image and in total.

    Counts are box counts: the same animal seen in two images is counted twice.
    """

    per_image: dict[str, dict[str, int]]
    totals: dict[str, int]


@dataclass(frozen=True)
class AbundanceReport:
    proportions: dict[str, float]
    shannon_index: float


@dataclass(frozen=True)
class SurveySample:
    marked: int
    captured: int
    recaptured: int

    def __post_init__(self) -> None:
        for name in ("marked", "captured", "recaptured"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise CamtrapError(f"{name} must be a non-negative integer, got {value!r}")
        if self.recaptured > self.marked or self.recaptured > self.captured:
            raise CamtrapError(
                f"recaptured ({self.recaptured}) cannot exceed marked ({self.marked}) or captured ({self.captured})"
            )


def species_counts(source: Dataset | Mapping[str, Sequence[Detection]]) -> CountTable:
    if isinstance(source, Dataset):
        labels = {img.image_id: [s for _, s in img.boxes] for img in source.images}
    else:
        labels = {image_id: [d.species for d in dets] for image_id, dets in source.items()}
    per_image: dict[str, dict[str, int]] = {}
    totals: dict[str, int] = {}
    for image_id in sorted(labels):
        counts: dict[str, int] = {}
        for species in labels[image_id]:
            counts[species] = counts.get(species, 0) + 1
        per_image[image_id] = dict(sorted(counts.items()))
        for species, n in counts.items():
            totals[species] = totals.get(species, 0) + n
    return CountTable(per_image, dict(sorted(totals.items())))


def relative_abundance(table: CountTable) -> AbundanceReport:
    """Per-species share of all counted boxes and the Shannon index in nats."""
    total = sum(table.totals.values())
    if total <= 0:
        raise EmptyInputError("relative abundance of an empty count table")
    proportions = {s: n / total for s, n in table.totals.items()}
    h = -math.fsum(p * math.log(p) for p in proportions.values() if p > 0)
    return AbundanceReport(proportions, h + 0.0)


def lincoln_petersen(sample: SurveySample, variant: Literal["classic", "chapman"] = "classic") -> float:
    """Closed-population size estimate from a two-survey mark-recapture design.

    ``classic`` is M*C/R and is undefined when nothing is recaptured;
    ``chapman`` is the bias-corrected (M+1)(C+1)/(R+1) - 1.
    """
    m, c, r = sample.marked, sample.captured, sample.recaptured
    if variant == "classic":
        if r == 0:
            raise UndefinedEstimateError(
                "classic Lincoln-Petersen is undefined with zero recaptures; use the chapman variant"
            )
        return m * c / r
    if variant == "chapman":
        return (m + 1) * (c + 1) / (r + 1) - 1
    raise CamtrapError(f"unknown Lincoln-Petersen variant {variant!r}")
