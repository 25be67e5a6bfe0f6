import random

import pytest

from logoreveal import timeline_lang as tl
from logoreveal.interp import CompiledProgram

from conftest import random_program


def sampled_states(program, doc, element_id, times, env=None):
    compiled = CompiledProgram(program, doc, env)
    return [compiled.state_at(t).elements[element_id] for t in times]


def assert_motion_unchanged(before, after, doc, element_id, horizon=2000.0, n=100, seed=0, env=None):
    rng = random.Random(seed)
    times = [rng.uniform(0.0, horizon) for _ in range(n)]
    for got, want in zip(sampled_states(after, doc, element_id, times, env), sampled_states(before, doc, element_id, times, env)):
        for field in ("left", "top", "width", "height", "translate_x", "translate_y",
                      "scale_x", "scale_y", "rotate", "opacity"):
            assert getattr(got, field) == pytest.approx(getattr(want, field), abs=1e-6), field


def test_single_entry_replacement_is_local(small_doc):
    program = tl.parse(
        "timeline.add({targets:'#a', translateX:[10,-10,0], duration:400})"
        ".add({targets:'#b', opacity:[0,1], duration:500});"
    )
    snippet = tl.parse("timeline.add({targets:'#a', translateX:[10,0], duration:400});")
    merged = tl.merge_patch(program, "a", snippet)
    assert len(merged.entries) == 2
    assert merged.entries[0].properties["translateX"].to == 0
    # untouched entry serializes byte-identically
    assert tl.serialize_entry(merged.entries[1]) == tl.serialize_entry(program.entries[1])
    assert_motion_unchanged(program, merged, small_doc, "b")


def test_first_replacement_inherits_offset(small_doc):
    program = tl.parse(
        "timeline.add({targets:'#b', opacity:[0,1], duration:500})"
        ".add({targets:'#a', translateX:[5,0], duration:300}, '-=100');"
    )
    snippet = tl.parse("timeline.add({targets:'#a', translateX:[7,0], duration:300});")
    merged = tl.merge_patch(program, "a", snippet)
    assert merged.entries[1].offset == tl.Offset.relative(-100)


def test_snippet_targeting_other_element_rejected(small_doc):
    program = tl.parse("timeline.add({targets:'#a', opacity:[0,1], duration:400});")
    snippet = tl.parse("timeline.add({targets:'#b', opacity:[0,1], duration:400});")
    with pytest.raises(tl.SnippetTargetsOthers):
        tl.merge_patch(program, "a", snippet)


def test_no_matching_entries(small_doc):
    program = tl.parse("timeline.add({targets:'#b', opacity:[0,1], duration:400});")
    snippet = tl.parse("timeline.add({targets:'#a', opacity:[0,1], duration:400});")
    with pytest.raises(tl.NoMatchingEntries):
        tl.merge_patch(program, "a", snippet)


def test_shared_selector_split_keeps_others(small_doc):
    env = tl.SelectorEnv(
        ids=["bg", "a", "b"],
        roles={"a": "secondary", "b": "secondary", "bg": "background"},
        groups={"stars": ["a", "b"]},
    )
    program = tl.parse(
        "timeline.add({targets:'.secondary', opacity:[0,1], duration:500, delay:stagger(50)})"
        ".add({targets:'#bg', opacity:[0.5,1], duration:300});"
    )
    snippet = tl.parse("timeline.add({targets:'#a', opacity:[0,1], duration:200});")
    merged = tl.merge_patch(program, "a", snippet, env)
    # clone for b retained with the shared entry's position, snippet inserted for a
    selectors = [e.targets for e in merged.entries]
    assert "#b" in selectors
    compiled = CompiledProgram(merged, small_doc, env)
    assert any(item.element_id == "a" for item in compiled.schedule.items)
    assert_motion_unchanged(program, merged, small_doc, "b", env=env)
    assert_motion_unchanged(program, merged, small_doc, "bg", env=env)


def test_extent_change_midprogram_pins_later_entries(small_doc):
    program = tl.parse(
        "timeline.add({targets:'#a', opacity:[0,1], duration:500})"
        ".add({targets:'#b', opacity:[0,1], duration:300});"
    )
    # replacement is twice as long; b must stay pinned at its original start (500)
    snippet = tl.parse("timeline.add({targets:'#a', opacity:[0,1], duration:1000});")
    merged = tl.merge_patch(program, "a", snippet)
    env = tl.SelectorEnv(ids=["bg", "a", "b"])
    starts = {(e.targets): s for e, _, s in tl.entry_starts(merged, env)}
    assert starts["#b"] == 500.0
    assert_motion_unchanged(program, merged, small_doc, "b")


def test_byte_identity_when_extent_preserved(small_doc):
    program = tl.parse(
        "timeline.add({targets:'#a', translateX:[10,-10,0], duration:400})"
        ".add({targets:'#b', opacity:[0,1], duration:500})"
        ".add({targets:'#bg', opacity:[0.2,1], duration:200}, '-=50');"
    )
    snippet = tl.parse("timeline.add({targets:'#a', translateX:[10,0], duration:400});")
    merged = tl.merge_patch(program, "a", snippet)
    for before, after in zip(program.entries[1:], merged.entries[1:]):
        assert tl.serialize_entry(after) == tl.serialize_entry(before)


def test_merge_patch_multi_for_edits(small_doc):
    program = tl.parse(
        "timeline.add({targets:'#a,#b', translateY:[40,0], duration:600, delay:stagger(60)})"
        ".add({targets:'#bg', opacity:[0,1], duration:300});"
    )
    snippet = tl.parse("timeline.add({targets:'#a,#b', translateY:[40,0], duration:150, delay:stagger(20)});")
    merged = tl.merge_patch_multi(program, {"a", "b"}, snippet)
    assert merged.entries[0].duration == 150
    assert_motion_unchanged(program, merged, small_doc, "bg")


def test_locality_randomized_patches(two_el_doc):
    rng = random.Random(777)
    checked = 0
    for _ in range(200):
        program = random_program(rng, ["a", "b"], max_entries=3)
        target = rng.choice(["a", "b"])
        other = "b" if target == "a" else "a"
        snippet = random_program(rng, [target], max_entries=2)
        try:
            merged = tl.merge_patch(program, target, snippet)
        except tl.NoMatchingEntries:
            continue
        assert_motion_unchanged(program, merged, two_el_doc, other, seed=checked)
        checked += 1
    assert checked >= 100
