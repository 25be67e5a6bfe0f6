#!/usr/bin/env python3
"""Regenerate the runtime-parity fixture under frontend/test/fixtures/: an
emitted page exercising the whole property set plus the interpreter's expected
final-frame state. The frontend suite loads the page headlessly and asserts the
page runtime settles on the same numbers."""

from __future__ import annotations

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from logoreveal.canvas_html import GroupingPlan, RoleAssignment, augment_html, build_html, emit_animation_page
from logoreveal.fixtures import make_doc
from logoreveal.interp import final_frame, selector_env
from logoreveal.timeline_lang import parse

PROGRAM = """timeline
.add({targets: '#hero', translateX: [-512, 0], rotate: [0, 360], duration: 600, easing: 'easeOutCubic'})
.add({targets: '#hero', scale: [1, 1.25], duration: 200, direction: 'alternate', easing: 'linear'})
.add({targets: 'sparks', opacity: [0, 0.8], translateY: ['-50%', '0%'], duration: 400, delay: stagger(80), easing: 'easeOutQuad'}, '-=100')
.add({targets: '#bar', width: ['10%', '40%'], left: [40, 80], duration: 300, easing: 'easeInOutSine'}, 900)
.add({targets: '#cap_t', translateY: [24, 6], opacity: [0, 1], duration: 250, loop: 2, easing: 'easeOutBack'});
"""


def fixture_doc():
    return make_doc(
        (320, 240),
        [
            {"id": "bg", "box": (0, 0, 320, 240), "color": (240, 240, 245, 255)},
            {"id": "hero", "box": (120, 80, 80, 60), "color": (200, 60, 40, 255), "shape": "circle"},
            {"id": "spark1", "box": (30, 30, 24, 24), "color": (250, 220, 80, 255), "shape": "diamond"},
            {"id": "spark2", "box": (260, 40, 24, 24), "color": (250, 220, 80, 255), "shape": "diamond"},
            {"id": "bar", "box": (40, 200, 32, 10), "color": (40, 90, 200, 255)},
            {"id": "cap_t", "box": (120, 170, 80, 20), "kind": "text-word", "alt": "HELLO", "color": (30, 30, 30, 255)},
        ],
        title="parity fixture",
    )


def main() -> None:
    doc = fixture_doc()
    roles = RoleAssignment(
        roles={
            "bg": "background",
            "hero": "primary",
            "spark1": "secondary",
            "spark2": "secondary",
            "bar": "secondary",
            "cap_t": "text",
        }
    )
    groups = GroupingPlan.of({"sparks": ["spark1", "spark2"]})
    canvas = augment_html(build_html(doc), roles, groups)
    env = selector_env(doc, roles=roles.roles, groups=groups.as_dict())

    program = parse(PROGRAM, strict=True)
    page = emit_animation_page(canvas, program, doc)
    frame = final_frame(program, doc, env)
    expected = {}
    for element_id, state in frame.elements.items():
        expected[element_id] = {
            "left": state.left,
            "top": state.top,
            "width": state.width,
            "height": state.height,
            "opacity": state.opacity,
            "translateX": state.translate_x,
            "translateY": state.translate_y,
            "rotate": state.rotate,
            "scaleX": state.scale_x,
            "scaleY": state.scale_y,
        }

    out_dir = Path(__file__).resolve().parent.parent / "frontend" / "test" / "fixtures"
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "page.html").write_text(page, encoding="utf-8")
    (out_dir / "expected_final.json").write_text(
        json.dumps(expected, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"wrote {out_dir / 'page.html'} ({len(page)} bytes) and expected_final.json")


if __name__ == "__main__":
    main()
