"""Deterministic fixture builders: synthetic layer rasters, the shipped desk
corpus, scripted scenarios for offline runs, and the scripted evaluation packs
(repair arms, injected-fault corpus). Everything here is a pure function of its
arguments so regenerated fixtures are byte-stable."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .document import LayeredDocument, Layer, load_project, save_png
from .gateway import ScenarioRule, ScriptedScenario
from .geometry import BoundingBox
from .repair import RepairSettings
from .timeline_lang import TimelineProgram, parse
from .verify import Tolerances

# --- synthetic rasters ----------------------------------------------------------


def shape_image(width: int, height: int, rgba: tuple[int, int, int, int], shape: str = "rect") -> np.ndarray:
    """Solid synthetic layer raster; opaque inside the shape, transparent outside."""
    img = np.zeros((height, width, 4), dtype=np.uint8)
    yy, xx = np.mgrid[0:height, 0:width]
    cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
    if shape == "rect":
        mask = np.ones((height, width), dtype=bool)
    elif shape == "circle":
        r = min(width, height) / 2.0
        mask = (xx - cx) ** 2 + (yy - cy) ** 2 <= r**2
    elif shape == "triangle":
        # upright triangle: apex top-center, base bottom
        t = yy / max(height - 1, 1)
        half = t * (width / 2.0)
        mask = np.abs(xx - cx) <= half
    elif shape == "ring":
        r = min(width, height) / 2.0
        d2 = (xx - cx) ** 2 + (yy - cy) ** 2
        mask = (d2 <= r**2) & (d2 >= (0.55 * r) ** 2)
    elif shape == "diamond":
        mask = np.abs(xx - cx) / max(cx, 1) + np.abs(yy - cy) / max(cy, 1) <= 1.0
    else:
        raise ValueError(f"unknown shape {shape!r}")
    img[mask] = rgba
    return img


def make_doc(
    canvas: tuple[int, int],
    layer_specs: list[dict],
    title: str = "fixture",
    source_id: str = "fixture",
) -> LayeredDocument:
    """In-memory document from layer specs: {id, box:(l,t,w,h), color, shape?, kind?, alt?, opacity?}."""
    layers = []
    for z, spec in enumerate(layer_specs):
        left, top, w, h = spec["box"]
        image = shape_image(int(w), int(h), spec.get("color", (200, 60, 60, 255)), spec.get("shape", "rect"))
        layers.append(
            Layer(
                id=spec["id"],
                kind=spec.get("kind", "image"),
                bbox=BoundingBox(left, top, w, h),
                z_index=z,
                alt_text=spec.get("alt", ""),
                image_path=f"layers/{spec['id']}.png",
                opacity=spec.get("opacity", 1.0),
                image=image,
            )
        )
    return LayeredDocument(
        canvas_width=canvas[0], canvas_height=canvas[1], layers=tuple(layers), title=title, source_id=source_id
    )


def write_project(doc: LayeredDocument, out_dir: Path) -> Path:
    """Materialize a document as project.json + layers/*.png."""
    out_dir.mkdir(parents=True, exist_ok=True)
    layers = []
    for layer in doc.layers:
        assert layer.image is not None
        save_png(out_dir / layer.image_path, layer.image)
        layers.append(
            {
                "id": layer.id,
                "kind": layer.kind,
                "bbox": layer.bbox.as_dict(),
                "z": layer.z_index,
                "alt_text": layer.alt_text,
                "image": layer.image_path,
                "opacity": layer.opacity,
            }
        )
    manifest = {
        "canvas": {"width": doc.canvas_width, "height": doc.canvas_height},
        "title": doc.title,
        "source_id": doc.source_id,
        "layers": layers,
    }
    path = out_dir / "project.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


# --- desk corpus -----------------------------------------------------------------

_W, _H = 400, 300


def _template_specs() -> dict[str, dict]:
    """Five original desk templates; ids and captions are fixture data."""
    return {
        "sunrise": {
            "layers": [
                {"id": "backdrop", "box": (0, 0, _W, _H), "color": (24, 38, 66, 255), "alt_caption": "deep blue night sky backdrop"},
                {"id": "mountain_l", "box": (20, 150, 160, 120), "color": (58, 94, 84, 255), "shape": "triangle", "alt_caption": "left mountain silhouette"},
                {"id": "mountain_r", "box": (220, 150, 160, 120), "color": (58, 94, 84, 255), "shape": "triangle", "alt_caption": "right mountain silhouette"},
                {"id": "sun", "box": (160, 60, 80, 80), "color": (244, 170, 66, 255), "shape": "circle", "alt_caption": "rising orange sun disk"},
                {"id": "title_w", "box": (120, 240, 160, 30), "kind": "text-word", "alt": "SUNRISE TRAIL", "color": (240, 240, 240, 255)},
            ],
            "roles": {"backdrop": "background", "mountain_l": "secondary", "mountain_r": "secondary", "sun": "primary", "title_w": "text"},
            "groups": {"mountains": ["mountain_l", "mountain_r"]},
            "entrance": {"mode": "in-place", "description": "the sun rises into place from just below the ridge line"},
        },
        "cat_club": {
            "layers": [
                {"id": "backdrop", "box": (0, 0, _W, _H), "color": (250, 242, 228, 255), "alt_caption": "cream colored backdrop"},
                {"id": "cat", "box": (140, 70, 120, 110), "color": (90, 74, 66, 255), "shape": "circle", "alt_caption": "front-facing cartoon cat head"},
                {"id": "paw1", "box": (40, 60, 36, 36), "color": (196, 148, 130, 255), "shape": "diamond", "alt_caption": "paw print"},
                {"id": "paw2", "box": (330, 90, 36, 36), "color": (196, 148, 130, 255), "shape": "diamond", "alt_caption": "paw print"},
                {"id": "paw3", "box": (60, 200, 36, 36), "color": (196, 148, 130, 255), "shape": "diamond", "alt_caption": "paw print"},
                {"id": "cat_t1", "box": (120, 220, 40, 44), "kind": "text-letter", "alt": "C", "color": (70, 60, 54, 255)},
                {"id": "cat_t2", "box": (180, 228, 40, 44), "kind": "text-letter", "alt": "A", "color": (70, 60, 54, 255)},
                {"id": "cat_t3", "box": (240, 220, 40, 44), "kind": "text-letter", "alt": "T", "color": (70, 60, 54, 255)},
            ],
            "roles": {"backdrop": "background", "cat": "primary", "paw1": "secondary", "paw2": "secondary", "paw3": "secondary", "cat_t1": "text", "cat_t2": "text", "cat_t3": "text"},
            "groups": {"paws": ["paw1", "paw2", "paw3"]},
            "entrance": {"mode": "in-place", "description": "the cat faces forward and should enter from in place, scaling up"},
        },
        "night_rocket": {
            "layers": [
                {"id": "backdrop", "box": (0, 0, _W, _H), "color": (16, 18, 38, 255), "alt_caption": "dark space backdrop"},
                {"id": "star1", "box": (50, 40, 24, 24), "color": (240, 230, 160, 255), "shape": "diamond", "alt_caption": "small star"},
                {"id": "star2", "box": (320, 60, 24, 24), "color": (240, 230, 160, 255), "shape": "diamond", "alt_caption": "small star"},
                {"id": "star3", "box": (90, 110, 24, 24), "color": (240, 230, 160, 255), "shape": "diamond", "alt_caption": "small star"},
                {"id": "rocket", "box": (170, 80, 60, 130), "color": (214, 214, 222, 255), "shape": "triangle", "alt_caption": "rocket ship pointing up"},
                {"id": "title_w", "box": (130, 240, 140, 28), "kind": "text-word", "alt": "LIFT OFF", "color": (230, 230, 240, 255)},
            ],
            "roles": {"backdrop": "background", "star1": "secondary", "star2": "secondary", "star3": "secondary", "rocket": "primary", "title_w": "text"},
            "groups": {"stars": ["star1", "star2", "star3"]},
            "entrance": {"mode": "path-entrance", "description": "the rocket points up and should launch in from the bottom edge"},
        },
        "harbor_wave": {
            "layers": [
                {"id": "backdrop", "box": (0, 0, _W, _H), "color": (222, 240, 248, 255), "alt_caption": "pale sky backdrop"},
                {"id": "cloud_l", "box": (40, 40, 90, 40), "color": (255, 255, 255, 255), "shape": "circle", "alt_caption": "soft cloud"},
                {"id": "cloud_r", "box": (280, 60, 90, 40), "color": (255, 255, 255, 255), "shape": "circle", "alt_caption": "soft cloud"},
                {"id": "wave", "box": (80, 140, 240, 90), "color": (32, 110, 168, 255), "shape": "ring", "alt_caption": "curling ocean wave"},
                {"id": "title_w", "box": (140, 250, 120, 28), "kind": "text-word", "alt": "HARBOR", "color": (30, 60, 90, 255)},
            ],
            "roles": {"backdrop": "background", "cloud_l": "secondary", "cloud_r": "secondary", "wave": "primary", "title_w": "text"},
            "groups": {"clouds": ["cloud_l", "cloud_r"]},
            "entrance": {"mode": "path-entrance", "description": "the wave rolls in from the left side of the canvas"},
        },
        "alpine_ski": {
            "layers": [
                {"id": "backdrop", "box": (0, 0, _W, _H), "color": (235, 242, 250, 255), "alt_caption": "pale alpine backdrop"},
                {"id": "tree_l", "box": (40, 160, 50, 90), "color": (40, 98, 70, 255), "shape": "triangle", "alt_caption": "pine tree"},
                {"id": "tree_r", "box": (320, 150, 50, 90), "color": (40, 98, 70, 255), "shape": "triangle", "alt_caption": "pine tree"},
                {"id": "skier", "box": (150, 70, 100, 100), "color": (190, 40, 60, 255), "shape": "diamond", "alt_caption": "silhouette of person skiing"},
                {"id": "title_w", "box": (120, 250, 160, 28), "kind": "text-word", "alt": "ALPINE CLUB", "color": (40, 50, 70, 255)},
            ],
            "roles": {"backdrop": "background", "tree_l": "secondary", "tree_r": "secondary", "skier": "primary", "title_w": "text"},
            "groups": {"trees": ["tree_l", "tree_r"]},
            "entrance": {"mode": "path-entrance", "description": "the skier glides in from the left side of the screen"},
        },
    }


def _template_doc(name: str, spec: dict) -> LayeredDocument:
    return make_doc((_W, _H), spec["layers"], title=name.replace("_", " "), source_id=name)


def _variant_programs(spec: dict) -> list[str]:
    """Four scripted synthesis replies per template. Variant 3 carries the from-to
    array bug on a secondary element so the repair loop has real work."""
    roles = spec["roles"]
    primary = next(i for i, r in roles.items() if r == "primary")
    secondaries = [i for i, r in roles.items() if r == "secondary"]
    texts = [i for i, r in roles.items() if r == "text"]
    group_id = next(iter(spec["groups"]))
    text_sel = ",".join(f"#{t}" for t in texts) if texts else f"#{primary}"
    buggy = secondaries[0]

    v0 = f"""timeline
.add({{targets: '#{primary}', translateX: [-512, 0], duration: 900, easing: 'easeOutCubic'}})
.add({{targets: '{group_id}', opacity: [0, 1], duration: 500, delay: stagger(80), easing: 'linear'}})
.add({{targets: '{text_sel}', translateY: [40, 0], opacity: [0, 1], duration: 400, delay: stagger(60), easing: 'easeOutQuad'}});
"""
    v1 = f"""timeline
.add({{targets: '#{primary}', scale: [0.2, 1], opacity: [0, 1], duration: 800, easing: 'easeOutBack'}})
.add({{targets: '{group_id}', translateY: [-512, 0], duration: 600, delay: stagger(100), easing: 'easeOutQuad'}}, '-=200')
.add({{targets: '{text_sel}', opacity: [0, 1], duration: 450, delay: stagger(50), easing: 'easeInOutSine'}});
"""
    v2 = f"""timeline
.add({{targets: '#{primary}', rotate: [0, 360], scale: [0.5, 1], duration: 1000, easing: 'easeInOutCubic'}})
.add({{targets: '{group_id}', opacity: [0, 1], scale: [0.6, 1], duration: 500, delay: stagger(70), easing: 'easeOutQuad'}})
.add({{targets: '{text_sel}', translateX: [-60, 0], opacity: [0, 1], duration: 400, easing: 'easeOutSine'}});
"""
    v3 = f"""timeline
.add({{targets: '#{primary}', translateY: [512, 0], duration: 850, easing: 'easeOutQuad'}})
.add({{targets: '#{buggy}', translateX: [10, -10, 0], duration: 400, easing: 'linear'}})
.add({{targets: '{text_sel}', opacity: [0, 1], duration: 400, delay: stagger(40), easing: 'linear'}});
"""
    return [v0, v1, v2, v3]


_CONCEPT_TEXTS = [
    "{primary_caption} ({primary}) slides in for the hero moment, then the {group} settle in one by one before the text fades up last.",
    "A gentle reveal: {primary_caption} ({primary}) scales up from the center with a soft overshoot while the secondary {group} drop in, and the text letters fade in to close.",
    "{primary_caption} ({primary}) makes one full turn as it grows into place; the {group} pop in around it and the title slides in from the left.",
    "The scene builds bottom-up: {primary_caption} ({primary}) rises from below the canvas, the {group} sparkle in, and the text types on last.",
]


def template_scenario(name: str, spec: dict) -> dict:
    """Scripted stub responses for every stage of one template, four variants."""
    roles = spec["roles"]
    primary = next(i for i, r in roles.items() if r == "primary")
    group_id = next(iter(spec["groups"]))
    primary_caption = next(l.get("alt_caption", l.get("alt", "")) for l in spec["layers"] if l["id"] == primary)

    rules: list[dict] = []
    for layer in spec["layers"]:
        if layer.get("kind", "image") == "image":
            rules.append(
                {"match": {"tag": "caption", "element_id": layer["id"]}, "response": layer["alt_caption"]}
            )
    rules.append({"match": {"tag": "hierarchy"}, "response": json.dumps(roles)})
    rules.append({"match": {"tag": "entrance"}, "response": json.dumps(spec["entrance"])})
    rules.append(
        {
            "match": {"tag": "grouping"},
            "response": json.dumps({"groups": [{"id": g, "members": m} for g, m in spec["groups"].items()]}),
        }
    )
    for i, concept in enumerate(_CONCEPT_TEXTS):
        rules.append(
            {
                "match": {"tag": "concept", "sample_index": i},
                "response": concept.format(primary=primary, primary_caption=primary_caption, group=group_id),
            }
        )
    for i, program in enumerate(_variant_programs(spec)):
        rules.append(
            {
                "match": {"tag": "synthesis", "sample_index": i},
                "response": f"```javascript\n{program}```",
            }
        )
    buggy = [i for i, r in roles.items() if r == "secondary"][0]
    fix = f"timeline\n.add({{targets: '#{buggy}', translateX: [10, 0], duration: 400, easing: 'linear'}});\n"
    rules.append({"match": {"tag": "repair", "element_id": buggy}, "response": f"```javascript\n{fix}```"})
    # edit support: slow-text request used by the service tests
    texts = [i for i, r in roles.items() if r == "text"]
    text_sel = ",".join(f"#{t}" for t in texts) if texts else f"#{primary}"
    edit_snippet = (
        f"timeline\n.add({{targets: '{text_sel}', opacity: [0, 1], duration: 150, delay: stagger(20), easing: 'linear'}});\n"
    )
    rules.append({"match": {"tag": "edit"}, "response": f"```javascript\n{edit_snippet}```"})
    return {"strict": True, "rules": rules}


def write_desk_corpus(out_dir: Path) -> list[Path]:
    """The shipped 5-template corpus: project.json, layer PNGs, scenario.json each."""
    manifests = []
    for name, spec in _template_specs().items():
        doc = _template_doc(name, spec)
        template_dir = out_dir / name
        manifest = write_project(doc, template_dir)
        scenario = template_scenario(name, spec)
        (template_dir / "scenario.json").write_text(
            json.dumps(scenario, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        manifests.append(manifest)
    return manifests


def load_desk_corpus(corpus_dir: Path) -> list[Path]:
    manifests = sorted(corpus_dir.glob("*/project.json"))
    if not manifests:
        raise FileNotFoundError(f"no templates under {corpus_dir}")
    return manifests


# --- scripted repair-arm packs ------------------------------------------------------

# Solve-at-attempt counts over 100 runs per arm; `None` marks never-solved runs.
PASSK_DISTRIBUTIONS = {
    "imgs": {1: 64, 2: 21, 3: 7, 4: 4, None: 4},
    "noimgs": {1: 64, 2: 4, 3: 7, 4: 7, None: 18},
}


@dataclass(frozen=True)
class PassKRun:
    run_id: str
    scenario: ScriptedScenario
    settings: RepairSettings
    solved_at: int | None  # scripted ground truth


def passk_doc() -> LayeredDocument:
    return make_doc(
        (200, 150),
        [
            {"id": "bg", "box": (0, 0, 200, 150), "color": (245, 245, 245, 255)},
            {"id": "mark", "box": (70, 50, 60, 40), "color": (40, 90, 200, 255), "shape": "circle"},
        ],
        title="repair fixture",
        source_id="passk",
    )


def passk_program() -> TimelineProgram:
    return parse(
        "timeline\n.add({targets: '#mark', translateX: [10, -10, 0], duration: 400, easing: 'linear'});\n"
    )


_FIX = "```javascript\ntimeline\n.add({targets: '#mark', translateX: [10, 0], duration: 400, easing: 'linear'});\n```"
_NON_FIX = "```javascript\ntimeline\n.add({targets: '#mark', translateX: [10, -5], duration: 400, easing: 'linear'});\n```"


def passk_pack(arm: str, k: int = 4) -> list[PassKRun]:
    """100 scripted repair runs reproducing an arm's solve-rate column exactly."""
    distribution = PASSK_DISTRIBUTIONS[arm]
    settings = RepairSettings(k=k, with_images=(arm == "imgs"), tolerances=Tolerances())
    runs: list[PassKRun] = []
    index = 0
    for solved_at, count in distribution.items():
        for _ in range(count):
            rules = []
            for attempt in range(1, k + 1):
                response = _FIX if solved_at is not None and attempt >= solved_at else _NON_FIX
                rules.append(ScenarioRule(response=response, tag="repair", element_id="mark", attempt=attempt))
            runs.append(
                PassKRun(
                    run_id=f"{arm}_{index:03d}",
                    scenario=ScriptedScenario(rules=rules),
                    settings=settings,
                    solved_at=solved_at,
                )
            )
            index += 1
    return runs


# --- injected-fault corpus ----------------------------------------------------------


def fault_doc() -> LayeredDocument:
    return make_doc(
        (200, 150),
        [
            {"id": "bg", "box": (0, 0, 200, 150), "color": (250, 250, 250, 255)},
            {"id": "el_a", "box": (20, 30, 60, 40), "color": (200, 60, 60, 255)},
            {"id": "el_b", "box": (110, 60, 40, 40), "color": (60, 160, 90, 255), "shape": "circle"},
        ],
        title="fault fixture",
        source_id="faults",
    )


_CLEAN = "timeline\n.add({{targets: '#{el}', translateX: [-512, 0], duration: 300, easing: 'easeOutQuad'}});\n"
_POSITION_FAULT = ".add({{targets: '#{el}', translateX: [10, -10, 0], duration: 300, easing: 'linear'}})"
_SCALE_FAULT = ".add({{targets: '#{el}', width: ['30%', '100%'], duration: 300, easing: 'linear'}})"


def fault_pack() -> tuple[LayeredDocument, list[TimelineProgram]]:
    """125 synthesis results with exactly 42 position and 26 scale faults injected:
    38 runs carry position faults (34 single, 4 double), 23 carry scale faults
    (20 single, 3 double), 64 are clean. 38/125 = 30.4%, 23/125 = 18.4%."""
    doc = fault_doc()
    programs: list[TimelineProgram] = []

    def program_of(parts: list[str]) -> TimelineProgram:
        return parse("timeline\n" + "\n".join(parts) + ";\n")

    for _ in range(34):
        programs.append(program_of([_POSITION_FAULT.format(el="el_a")]))
    for _ in range(4):
        programs.append(
            program_of([_POSITION_FAULT.format(el="el_a"), _POSITION_FAULT.format(el="el_b")])
        )
    for _ in range(20):
        programs.append(program_of([_SCALE_FAULT.format(el="el_a")]))
    for _ in range(3):
        programs.append(program_of([_SCALE_FAULT.format(el="el_a"), _SCALE_FAULT.format(el="el_b")]))
    for _ in range(64):
        programs.append(parse(_CLEAN.format(el="el_a")))
    assert len(programs) == 125
    return doc, programs
