from __future__ import annotations

import random

import pytest

from logoreveal.document import LayeredDocument
from logoreveal.fixtures import make_doc
from logoreveal.timeline_lang import (
    EASING_NAMES,
    Offset,
    PropertySpec,
    Stagger,
    TimelineEntry,
    TimelineProgram,
    Unit,
)


@pytest.fixture
def small_doc() -> LayeredDocument:
    return make_doc(
        (200, 150),
        [
            {"id": "bg", "box": (0, 0, 200, 150), "color": (245, 245, 245, 255)},
            {"id": "a", "box": (100, 40, 60, 40), "color": (200, 40, 40, 255)},
            {"id": "b", "box": (20, 80, 40, 40), "color": (40, 40, 200, 255), "shape": "circle"},
        ],
    )


@pytest.fixture
def two_el_doc() -> LayeredDocument:
    return make_doc(
        (800, 600),
        [
            {"id": "a", "box": (100, 50, 200, 100), "color": (200, 40, 40, 255)},
            {"id": "b", "box": (400, 300, 120, 120), "color": (40, 200, 90, 255)},
        ],
    )


_PROPS = ("translateX", "translateY", "scale", "rotate", "opacity", "left", "top", "width", "height")


def random_entry(rng: random.Random, ids: list[str], allow_loop: bool = True) -> TimelineEntry:
    targets = "#" + rng.choice(ids)
    n_props = rng.randint(1, 3)
    properties = {}
    for prop in rng.sample(_PROPS, n_props):
        if prop == "opacity":
            spec = PropertySpec(to=round(rng.uniform(0.2, 1.0), 2), from_value=0.0, unit=Unit.SCALAR)
        elif prop == "scale":
            spec = PropertySpec(to=round(rng.uniform(0.5, 1.5), 2), from_value=round(rng.uniform(0.2, 1.0), 2), unit=Unit.SCALAR)
        elif prop == "rotate":
            spec = PropertySpec(to=rng.randint(-180, 360), from_value=rng.randint(-90, 90), unit=Unit.DEG)
        else:
            from_value = rng.choice([None, rng.randint(-512, 512)])
            spec = PropertySpec(to=rng.randint(-256, 512), from_value=from_value, unit=Unit.PX)
        properties[prop] = spec
    offset_kind = rng.choice(["sequential", "sequential", "absolute", "relative"])
    if offset_kind == "absolute":
        offset = Offset.absolute(rng.randint(0, 600))
    elif offset_kind == "relative":
        offset = Offset.relative(rng.randint(-150, 150))
    else:
        offset = Offset.sequential()
    delay = rng.choice([0.0, float(rng.randint(10, 120)), Stagger(float(rng.randint(10, 60)))])
    loop = False
    if allow_loop and rng.random() < 0.25:
        loop = rng.randint(2, 3)
    return TimelineEntry(
        targets=targets,
        properties=properties,
        duration=float(rng.randint(100, 400)),
        delay=delay,
        easing=rng.choice(EASING_NAMES),
        loop=loop,
        direction=rng.choice(["normal", "normal", "alternate"]),
        offset=offset,
    )


def random_program(rng: random.Random, ids: list[str], max_entries: int = 3, allow_loop: bool = True) -> TimelineProgram:
    n = rng.randint(1, max_entries)
    return TimelineProgram(entries=[random_entry(rng, ids, allow_loop) for _ in range(n)])
