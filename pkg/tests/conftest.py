from __future__ import annotations

import sys
from pathlib import Path

import pytest
from hypothesis import settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from camtrap_eval.dataset import AnnotatedImage, BoundingBox, Dataset, LabeledBox  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

SPECIES = ("zebra", "wildebeest", "Gazelle Thomsons", "buffalo")


@st.composite
def boxes(draw, max_coord: int = 200):
    x0 = draw(st.integers(0, max_coord - 1))
    y0 = draw(st.integers(0, max_coord - 1))
    x1 = draw(st.integers(x0 + 1, max_coord))
    y1 = draw(st.integers(y0 + 1, max_coord))
    return BoundingBox(x0, y0, x1, y1)


@st.composite
def datasets(draw, max_images: int = 8, max_boxes: int = 5):
    n = draw(st.integers(0, max_images))
    images = []
    for i in range(n):
        lbs = draw(st.lists(st.tuples(boxes(), st.sampled_from(SPECIES)), max_size=max_boxes))
        dims = draw(st.booleans())
        images.append(
            AnnotatedImage(
                image_id=f"img_{i:03d}",
                boxes=tuple(LabeledBox(b, s) for b, s in lbs),
                width=200 if dims else None,
                height=200 if dims else None,
                capture_tag=draw(st.sampled_from([None, "day", "night"])),
            )
        )
    return Dataset("hyp", tuple(images))


def make_image(image_id, *boxes_and_species, width=None, height=None):
    return AnnotatedImage(
        image_id,
        tuple(LabeledBox(BoundingBox(*xyxy), s) for xyxy, s in boxes_and_species),
        width,
        height,
    )


@pytest.fixture
def zebra_scene():
    gt = [LabeledBox(BoundingBox(0, 0, 10, 10), "zebra"), LabeledBox(BoundingBox(20, 20, 30, 30), "wildebeest")]
    from camtrap_eval.evaluation import Detection

    preds = [
        Detection(BoundingBox(1, 1, 11, 11), "zebra", 0.9),
        Detection(BoundingBox(19, 19, 29, 29), "zebra", 0.8),
        Detection(BoundingBox(50, 50, 60, 60), "wildebeest", 0.7),
    ]
    return gt, preds


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_ac" in nodeid and (rep.when == "call" or not rep.passed):
                name = nodeid.split("::")[-1][len("test_"):]
                lines.append((name, "PASS" if rep.passed else "FAIL"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, status in sorted(lines):
            terminalreporter.write_line(f"{status}  {name.upper()[:4]}  {name[5:]}")
