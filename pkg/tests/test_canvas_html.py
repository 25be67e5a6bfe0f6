import random

import pytest

from logoreveal import canvas_html as ch
from logoreveal import timeline_lang as tl
from logoreveal.document import Layer, LayeredDocument
from logoreveal.fixtures import make_doc
from logoreveal.geometry import BoundingBox


def doc_one_layer():
    return make_doc(
        (800, 600),
        [{"id": "star", "box": (10, 20, 100, 50), "color": (220, 30, 30, 255), "alt": "red star"}],
    )


def test_empty_doc_builds_container_only():
    doc = LayeredDocument(canvas_width=100, canvas_height=50, layers=())
    canvas = ch.build_html(doc)
    assert canvas.text == '<div id="canvas" style="position:relative;width:100px;height:50px">\n</div>\n'
    assert canvas.element_index == {}


def test_single_layer_golden_style():
    doc = doc_one_layer()
    canvas = ch.build_html(doc)
    assert "left:10px;top:20px;width:100px;height:50px;z-index:0" in canvas.text
    assert 'alt="red star"' in canvas.text


def test_element_order_is_z_order():
    doc = make_doc(
        (100, 100),
        [
            {"id": "bottom", "box": (0, 0, 10, 10), "color": (0, 0, 0, 255)},
            {"id": "top", "box": (5, 5, 10, 10), "color": (255, 255, 255, 255)},
        ],
    )
    canvas = ch.build_html(doc)
    assert canvas.text.index('id="bottom"') < canvas.text.index('id="top"')


def test_build_is_byte_deterministic():
    doc = doc_one_layer()
    assert ch.build_html(doc).text == ch.build_html(doc).text


def test_parse_roundtrip_reproduces_index():
    doc = make_doc(
        (400, 300),
        [
            {"id": "bg", "box": (0, 0, 400, 300), "color": (9, 9, 9, 255), "alt": "backdrop"},
            {"id": "mark", "box": (40.25, 60.5, 80, 20.75), "color": (200, 0, 0, 255), "alt": "mark & co"},
        ],
    )
    canvas = ch.build_html(doc)
    parsed = ch.parse_html(canvas.text)
    assert parsed.element_index == canvas.element_index
    assert parsed.canvas_width == 400 and parsed.canvas_height == 300


def test_parse_rejects_missing_style_key():
    text = (
        '<div id="canvas" style="position:relative;width:100px;height:100px">\n'
        '  <img id="a" src="a.png" alt="" style="position:absolute;left:1px;width:5px;height:5px;z-index:0">\n'
        "</div>\n"
    )
    with pytest.raises(ch.SchemaViolation) as exc:
        ch.parse_html(text)
    assert "top" in str(exc.value)
    assert "img#a" in str(exc.value)


def test_parse_rejects_unknown_root():
    with pytest.raises(ch.SchemaViolation):
        ch.parse_html("<section><img id='x'></section>")


def roles_groups_fixture():
    doc = make_doc(
        (400, 300),
        [
            {"id": "bg", "box": (0, 0, 400, 300), "color": (4, 4, 4, 255)},
            {"id": "hero", "box": (100, 60, 120, 90), "color": (250, 60, 60, 255)},
            {"id": "s1", "box": (20, 20, 30, 30), "color": (250, 250, 60, 255)},
            {"id": "s2", "box": (340, 30, 30, 30), "color": (250, 250, 60, 255)},
            {"id": "s3", "box": (40, 240, 30, 30), "color": (250, 250, 60, 255)},
        ],
    )
    roles = ch.RoleAssignment(
        roles={"bg": "background", "hero": "primary", "s1": "secondary", "s2": "secondary", "s3": "secondary"}
    )
    groups = ch.GroupingPlan.of({"stars": ["s1", "s2", "s3"]})
    return doc, roles, groups


def test_augment_writes_classes_and_group_divs():
    doc, roles, groups = roles_groups_fixture()
    augmented = ch.augment_html(ch.build_html(doc), roles, groups)
    assert 'class="primary"' in augmented.text
    assert 'class="background"' in augmented.text
    assert '<div id="stars">' in augmented.text
    stars_block = augmented.text.split('<div id="stars">')[1].split("</div>")[0]
    for member in ("s1", "s2", "s3"):
        assert f'id="{member}"' in stars_block


def test_augment_preserves_geometry():
    doc, roles, groups = roles_groups_fixture()
    base = ch.build_html(doc)
    augmented = ch.augment_html(base, roles, groups)
    for element_id, info in base.element_index.items():
        after = augmented.element_index[element_id]
        assert after.bbox == info.bbox
        assert after.z_index == info.z_index


def test_augmented_roundtrip_recovers_roles_and_groups():
    doc, roles, groups = roles_groups_fixture()
    augmented = ch.augment_html(ch.build_html(doc), roles, groups)
    parsed = ch.parse_html(augmented.text)
    assert parsed.element_index == augmented.element_index
    assert parsed.element_index["s1"].group_id == "stars"
    assert parsed.element_index["hero"].role == "primary"


def test_multiple_primaries_rejected():
    doc, roles, groups = roles_groups_fixture()
    bad = ch.RoleAssignment(roles={**roles.roles, "s1": "primary"})
    with pytest.raises(ch.MultiplePrimaries):
        ch.augment_html(ch.build_html(doc), bad, ch.GroupingPlan())


def test_missing_primary_rejected():
    doc, roles, groups = roles_groups_fixture()
    bad = ch.RoleAssignment(roles={**roles.roles, "hero": "secondary"})
    with pytest.raises(ch.MissingPrimary):
        ch.augment_html(ch.build_html(doc), bad, ch.GroupingPlan())


def test_unknown_id_in_roles_rejected():
    doc, roles, groups = roles_groups_fixture()
    bad = ch.RoleAssignment(roles={**roles.roles, "ghost": "secondary"})
    with pytest.raises(ch.UnknownId):
        ch.augment_html(ch.build_html(doc), bad, groups)


def test_group_member_must_be_secondary():
    doc, roles, groups = roles_groups_fixture()
    bad_groups = ch.GroupingPlan.of({"stars": ["hero"]})
    with pytest.raises(ValueError):
        ch.augment_html(ch.build_html(doc), roles, bad_groups)


def test_geometry_roundtrip_randomized():
    rng = random.Random(31337)
    for _ in range(100):
        n = rng.randint(1, 6)
        layers = []
        for i in range(n):
            w = rng.randint(1, 120) + rng.choice([0, 0.25, 0.5])
            h = rng.randint(1, 90) + rng.choice([0, 0.75])
            layers.append(
                {
                    "id": f"el{i}",
                    "box": (rng.randint(-50, 300), rng.randint(-50, 200), w, h),
                    "color": (rng.randint(0, 255), rng.randint(0, 255), rng.randint(0, 255), 255),
                    "alt": f"layer {i} <&> \"quoted\"",
                }
            )
        doc = make_doc((400, 300), layers)
        canvas = ch.build_html(doc)
        parsed = ch.parse_html(canvas.text)
        for layer in doc.layers:
            info = parsed.element_index[layer.id]
            assert info.bbox == layer.bbox
            assert info.z_index == layer.z_index
            assert info.alt_text == layer.alt_text


def test_emit_page_contains_runtime_images_and_program():
    doc, roles, groups = roles_groups_fixture()
    augmented = ch.augment_html(ch.build_html(doc), roles, groups)
    program = tl.parse("timeline.add({targets:'#hero', translateX:[-512,0], duration:800});")
    page = ch.emit_animation_page(augmented, program, doc)
    assert page.startswith("<!DOCTYPE html>")
    assert "data:image/png;base64," in page
    assert tl.serialize(program) in page  # serialized entries verbatim
    assert "timeline" in page
    assert "requestAnimationFrame" in page  # runtime inlined


def test_emit_page_minimal_for_empty_doc():
    doc = LayeredDocument(canvas_width=64, canvas_height=64, layers=())
    page = ch.emit_animation_page(ch.build_html(doc), tl.TimelineProgram(), doc)
    assert "<div id=\"canvas\"" in page


def test_emit_page_oversize_guard():
    doc, roles, groups = roles_groups_fixture()
    canvas = ch.build_html(doc)
    with pytest.raises(ch.OversizeAsset):
        ch.emit_animation_page(canvas, tl.TimelineProgram(), doc, max_total_bytes=10)


def test_emit_page_rejects_error_programs():
    doc, _, _ = roles_groups_fixture()
    canvas = ch.build_html(doc)
    broken = tl.parse("timeline.add({targets:'#hero', filter:'blur(2px)', opacity:1});")
    with pytest.raises(tl.NonCanonicalizable):
        ch.emit_animation_page(canvas, broken, doc)
