"""Synthetic detections derived from ground truth under a controlled noise model.

Each image draws from its own sub-stream keyed by ``image_id``, so the output
does not depend on iteration order or parallelism.  Every ground-truth box
consumes the same draws whether or not it survives (drop, four corner
jitters, class flip, score), which couples runs that differ only in one
noise level: raising ``drop_prob`` on the same seed drops a superset of
boxes and leaves the survivors unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dataset import AnnotatedImage, BoundingBox, Dataset
from .errors import CamtrapError, InfeasibleFlipError
from .evaluation import Detection, DetectionSet
from .rng import MASK64, SplitMix64


@dataclass(frozen=True)
class NoiseModel:
    jitter_frac: float = 0.0
    class_flip_prob: float = 0.0
    drop_prob: float = 0.0
    spurious_rate: float = 0.0
    score_floor: float = 0.0

    def __post_init__(self) -> None:
        if not self.jitter_frac >= 0:
            raise CamtrapError(f"jitter_frac must be >= 0, got {self.jitter_frac}")
        if not self.spurious_rate >= 0:
            raise CamtrapError(f"spurious_rate must be >= 0, got {self.spurious_rate}")
        for name in ("class_flip_prob", "drop_prob", "score_floor"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise CamtrapError(f"{name} must be in [0, 1], got {value}")


def _spurious_region(img: AnnotatedImage) -> tuple[float, float, float, float] | None:
    if img.width is not None and img.height is not None:
        return (0.0, 0.0, float(img.width), float(img.height))
    if not img.boxes:
        return None
    x0 = min(b.x_min for b, _ in img.boxes)
    y0 = min(b.y_min for b, _ in img.boxes)
    x1 = max(b.x_max for b, _ in img.boxes)
    y1 = max(b.y_max for b, _ in img.boxes)
    # Hull inflated 2x about its centre; a declared dimension still caps it.
    hw, hh = x1 - x0, y1 - y0
    rx0, ry0 = max(0.0, x0 - hw / 2), max(0.0, y0 - hh / 2)
    rx1, ry1 = x1 + hw / 2, y1 + hh / 2
    if img.width is not None:
        rx1 = min(rx1, float(img.width))
    if img.height is not None:
        ry1 = min(ry1, float(img.height))
    return (rx0, ry0, rx1, ry1)


def _clamp(v: float, hi: int | None) -> float:
    v = max(v, 0.0)
    return v if hi is None else min(v, float(hi))


def _simulate_image(
    img: AnnotatedImage, registry: tuple[str, ...], noise: NoiseModel, seed: int
) -> list[Detection]:
    rng = SplitMix64.substream(seed, img.image_id)
    floor = noise.score_floor
    out: list[Detection] = []
    for box, species in img.boxes:
        dropped = rng.uniform() < noise.drop_prob
        w, h = box.x_max - box.x_min, box.y_max - box.y_min
        j = noise.jitter_frac
        x0 = box.x_min + rng.gauss() * j * w
        y0 = box.y_min + rng.gauss() * j * h
        x1 = box.x_max + rng.gauss() * j * w
        y1 = box.y_max + rng.gauss() * j * h
        flip = rng.uniform() < noise.class_flip_prob
        other = rng.below(len(registry) - 1) if len(registry) > 1 else 0
        score = floor + (1.0 - floor) * rng.uniform()
        if dropped:
            continue
        if j > 0:
            x0, x1 = _clamp(min(x0, x1), img.width), _clamp(max(x0, x1), img.width)
            y0, y1 = _clamp(min(y0, y1), img.height), _clamp(max(y0, y1), img.height)
            if not (x1 > x0 and y1 > y0):
                # Jittered entirely out of frame; nothing left to detect.
                continue
            det_box = BoundingBox(x0, y0, x1, y1)
        else:
            det_box = box
        if flip:
            candidates = [s for s in registry if s != species]
            species = candidates[other]
        out.append(Detection(det_box, species, min(score, 1.0)))

    region = _spurious_region(img)
    n_spurious = rng.poisson(noise.spurious_rate)
    if region is None or not registry:
        return out
    rx0, ry0, rx1, ry1 = region
    for _ in range(n_spurious):
        xa = rx0 + rng.uniform() * (rx1 - rx0)
        xb = rx0 + rng.uniform() * (rx1 - rx0)
        ya = ry0 + rng.uniform() * (ry1 - ry0)
        yb = ry0 + rng.uniform() * (ry1 - ry0)
        species = registry[rng.below(len(registry))]
        score = floor + (1.0 - floor) * rng.uniform()
        if xa == xb or ya == yb:
            continue
        out.append(Detection(BoundingBox(min(xa, xb), min(ya, yb), max(xa, xb), max(ya, yb)), species, score))
    return out


def simulate(ds: Dataset, noise: NoiseModel, seed: int = 42) -> DetectionSet:
    """Perturb every image's ground truth into detections.

    Returns a mapping ordered by image id.  Raises
    :class:`InfeasibleFlipError` when class flips are requested but the
    registry offers no alternative species.
    """
    if not 0 <= seed <= MASK64:
        raise CamtrapError(f"seed must be an unsigned 64-bit integer, got {seed}")
    registry = ds.species_registry
    if noise.class_flip_prob > 0 and len(registry) < 2:
        raise InfeasibleFlipError(
            f"class_flip_prob={noise.class_flip_prob} needs at least 2 species, registry has {len(registry)}"
        )
    by_id = ds.by_id()
    return {image_id: _simulate_image(by_id[image_id], registry, noise, seed) for image_id in sorted(by_id)}
