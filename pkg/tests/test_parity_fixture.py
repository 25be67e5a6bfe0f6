"""Keeps the committed runtime-parity fixture in lockstep with the engine: if
either the page emitter or the interpreter changes behavior, this fails and
scripts/make_parity_fixture.py must be rerun (and the frontend suite with it).
"""

import importlib.util
import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "frontend" / "test" / "fixtures"


def load_generator():
    spec = importlib.util.spec_from_file_location(
        "make_parity_fixture", ROOT / "scripts" / "make_parity_fixture.py"
    )
    module = importlib.util.module_from_spec(spec)
    sys.modules.setdefault("make_parity_fixture", module)
    spec.loader.exec_module(module)
    return module


def test_committed_fixture_matches_engine(tmp_path):
    gen = load_generator()
    from logoreveal.canvas_html import augment_html, build_html, emit_animation_page
    from logoreveal.canvas_html import GroupingPlan, RoleAssignment
    from logoreveal.interp import final_frame, selector_env
    from logoreveal.timeline_lang import parse

    doc = gen.fixture_doc()
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
    program = parse(gen.PROGRAM, strict=True)

    page = emit_animation_page(canvas, program, doc)
    assert page == (FIXTURES / "page.html").read_text(encoding="utf-8"), (
        "fixture page drifted; rerun scripts/make_parity_fixture.py"
    )

    frame = final_frame(program, doc, env)
    committed = json.loads((FIXTURES / "expected_final.json").read_text(encoding="utf-8"))
    assert set(committed) == set(frame.elements)
    for element_id, want in committed.items():
        state = frame.elements[element_id]
        got = {
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
        for key, value in want.items():
            assert got[key] == value, (element_id, key)
