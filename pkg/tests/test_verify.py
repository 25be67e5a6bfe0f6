import pytest

from logoreveal import timeline_lang as tl
from logoreveal import verify as vf
from logoreveal.fixtures import make_doc
from logoreveal.interp import final_frame


def doc_800():
    # the percent-confusion fixture: 200px-wide line in an 800px canvas
    return make_doc(
        (800, 600),
        [
            {"id": "line", "box": (300, 280, 200, 6), "color": (20, 20, 20, 255)},
            {"id": "mark", "box": (100, 100, 80, 60), "color": (200, 60, 60, 255)},
        ],
    )


def test_identity_program_has_no_bugs(small_doc):
    assert vf.verify(tl.TimelineProgram(), small_doc) == []


def test_from_to_misuse_yields_position_bug(small_doc):
    program = tl.parse("timeline.add({targets:'#a', translateX:[10,-10,0], duration:400});")
    bugs = vf.verify(program, small_doc)
    assert len(bugs) == 1
    bug = bugs[0]
    assert bug.kind == "position"
    assert bug.element_id == "a"
    assert bug.delta_left == pytest.approx(-10.0, abs=1e-6)
    assert bug.delta_top == pytest.approx(0.0, abs=1e-6)


def test_percent_confusion_yields_scale_bug():
    doc = doc_800()
    program = tl.parse("timeline.add({targets:'#line', width:['0%','100%'], duration:300});")
    bugs = vf.verify(program, doc)
    scale_bugs = [b for b in bugs if b.kind == "scale"]
    assert len(scale_bugs) == 1
    assert scale_bugs[0].delta_width == pytest.approx(600.0, abs=1e-6)


def test_opacity_bug():
    doc = doc_800()
    program = tl.parse("timeline.add({targets:'#mark', opacity:[1,0.5], duration:300});")
    bugs = vf.verify(program, doc)
    assert [b.kind for b in bugs] == ["opacity"]
    assert bugs[0].delta_opacity == pytest.approx(-0.5)


def test_element_can_carry_position_and_scale_bugs(small_doc):
    program = tl.parse(
        "timeline.add({targets:'#a', translateX:[0,25], width:[60,120], duration:300, easing:'linear'});"
    )
    bugs = vf.verify(program, small_doc)
    kinds = sorted(b.kind for b in bugs if b.element_id == "a")
    assert kinds == ["position", "scale"]


def test_loop_residue_detected_as_scale_bug(small_doc):
    program = tl.parse(
        "timeline.add({targets:'#a', scale:[1,1.2], duration:400, loop:true, easing:'linear'}, 0)"
        ".add({targets:'#b', opacity:[0,1], duration:500}, 100);"
    )
    bugs = vf.verify(program, small_doc)
    assert any(b.kind == "scale" and b.element_id == "a" for b in bugs)


def test_sub_tolerance_residue_ignored(small_doc):
    program = tl.parse("timeline.add({targets:'#a', translateX:[0.4,0.5], duration:200});")
    assert vf.verify(program, small_doc) == []


def test_tolerance_monotonicity(small_doc):
    program = tl.parse(
        "timeline.add({targets:'#a', translateX:[10,-10,0], duration:300})"
        ".add({targets:'#b', width:[40,45], duration:300});"
    )
    counts = []
    for eps in (0.5, 1.0, 2.0, 6.0, 20.0):
        tol = vf.Tolerances(eps_pos=eps, eps_size=eps, eps_opacity=0.01)
        counts.append(len(vf.verify(program, small_doc, tol)))
    assert counts == sorted(counts, reverse=True)


def test_rotation_detected_indirectly_via_aabb(small_doc):
    program = tl.parse("timeline.add({targets:'#a', rotate:[0,45], duration:300});")
    bugs = vf.verify(program, small_doc)
    kinds = {b.kind for b in bugs if b.element_id == "a"}
    assert kinds == {"position", "scale"}  # no explicit rotation check


def test_verification_matches_dense_final_state(small_doc):
    # re-deriving bugs from the final frame directly yields the identical list
    program = tl.parse("timeline.add({targets:'#a', translateX:[10,-10,0], duration:400});")
    tol = vf.Tolerances()
    via_verify = vf.verify(program, small_doc, tol)
    via_frame = vf.frame_bugs(final_frame(program, small_doc), small_doc, tol)
    assert via_verify == via_frame


def test_attach_crops_lazy_and_per_layer(small_doc):
    assert vf.attach_crops([], small_doc, tl.TimelineProgram()) == []
    program = tl.parse(
        "timeline.add({targets:'#a', translateX:[10,-10,0], duration:300})"
        ".add({targets:'#b', translateY:[5,-8,0], duration:300});"
    )
    bugs = vf.verify(program, small_doc)
    assert len(bugs) == 2
    with_crops = vf.attach_crops(bugs, small_doc, program)
    assert all(b.crops is not None for b in with_crops)
    assert with_crops[0].crops.target_crop != with_crops[1].crops.target_crop


def test_write_bugs_json(tmp_path, small_doc):
    program = tl.parse("timeline.add({targets:'#a', translateX:[10,-10,0], duration:300});")
    bugs = vf.attach_crops(vf.verify(program, small_doc), small_doc, program)
    path = vf.write_bugs(bugs, tmp_path)
    import json

    records = json.loads(path.read_text(encoding="utf-8"))
    assert records[0]["deltas"]["left"] == pytest.approx(-10.0)
    assert (tmp_path / records[0]["crops"]["target"]).exists()
    assert (tmp_path / records[0]["crops"]["final"]).exists()


def test_describe_mentions_dimension_and_delta(small_doc):
    program = tl.parse("timeline.add({targets:'#a', translateX:[10,-10,0], duration:300});")
    bug = vf.verify(program, small_doc)[0]
    text = bug.describe()
    assert "left" in text and "-10" in text


def test_tolerances_validate():
    with pytest.raises(ValueError):
        vf.Tolerances(eps_pos=-1)
