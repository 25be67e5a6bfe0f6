import random

import pytest
from hypothesis import given, settings, strategies as st

from logoreveal import timeline_lang as tl

from conftest import random_program


def parse_one(src: str) -> tl.TimelineEntry:
    program = tl.parse(src)
    assert not program.errors, [d.format() for d in program.errors]
    assert len(program.entries) == 1
    return program.entries[0]


def test_prompt_shaped_entry():
    entry = parse_one(
        "timeline.add({targets:'#a', translateX:[-512,0], duration:800, easing:'easeOutQuad'})"
    )
    assert entry.targets == "#a"
    spec = entry.properties["translateX"]
    assert (spec.from_value, spec.to, spec.unit) == (-512, 0, tl.Unit.PX)
    assert entry.duration == 800
    assert entry.easing == "easeOutQuad"


def test_from_to_extra_keeps_first_two_with_lint():
    program = tl.parse("timeline.add({targets:'#a', translateX:[10,-10,0], duration:500})")
    assert not program.errors
    spec = program.entries[0].properties["translateX"]
    assert (spec.from_value, spec.to) == (10, -10)
    assert any(d.code == "FROM_TO_EXTRA" for d in program.warnings)


def test_unsupported_property_is_error_with_span():
    program = tl.parse("timeline.add({targets:'#a', filter:'blur(4px)', opacity:[0,1]})")
    errors = [d for d in program.errors if d.code == "UNSUPPORTED_PROPERTY"]
    assert errors
    diag = errors[0]
    assert diag.span[0] < diag.span[1]
    assert diag.line >= 1


def test_defaults_applied():
    entry = parse_one("timeline.add({targets:'#a', opacity:[0,1]})")
    assert entry.duration == 1000
    assert entry.easing == "easeOutQuad"
    assert entry.delay == 0
    assert entry.loop is False
    assert entry.direction == "normal"
    assert entry.offset.kind == "sequential"


def test_comments_and_whitespace_tolerated():
    src = """timeline
    // entrance
    .add({
      targets: '#a', /* slide */
      translateX: [-512, 0],
      duration: 800
    });
    """
    assert not tl.parse(src).errors


def test_stagger_and_offsets():
    src = (
        "timeline"
        ".add({targets:'#a', opacity:[0,1], duration:500})"
        ".add({targets:'#b', opacity:[0,1], delay: stagger(50)}, '-=200')"
        ".add({targets:'#c', opacity:[0,1]}, 1200);"
    )
    program = tl.parse(src)
    assert not program.errors
    assert program.entries[1].delay == tl.Stagger(50)
    assert program.entries[1].offset == tl.Offset.relative(-200)
    assert program.entries[2].offset == tl.Offset.absolute(1200)


def test_percent_values():
    entry = parse_one("timeline.add({targets:'#a', width:['0%','100%'], duration:300})")
    spec = entry.properties["width"]
    assert spec.unit is tl.Unit.PERCENT
    assert (spec.from_value, spec.to) == (0, 100)


def test_unit_mismatch_rejected():
    program = tl.parse("timeline.add({targets:'#a', width:[10,'100%']})")
    assert any(d.code == "UNIT_MISMATCH" for d in program.errors)


def test_percent_on_scale_rejected():
    program = tl.parse("timeline.add({targets:'#a', scale:['50%','100%']})")
    assert any(d.code == "BAD_VALUE" for d in program.errors)


def test_unknown_easing_is_error():
    program = tl.parse("timeline.add({targets:'#a', opacity:1, easing:'easeOutBounce'})")
    assert any(d.code == "UNKNOWN_EASING" for d in program.errors)


def test_missing_targets_and_no_properties():
    assert any(d.code == "BAD_TARGETS" for d in tl.parse("timeline.add({opacity:[0,1]})").errors)
    assert any(d.code == "NO_PROPERTIES" for d in tl.parse("timeline.add({targets:'#a', duration:500})").errors)


def test_strict_parse_raises():
    with pytest.raises(tl.ParseError):
        tl.parse("timeline.add({targets:'#a', filter:'x', opacity:1})", strict=True)


def test_serialize_requires_clean_program():
    program = tl.parse("timeline.add({targets:'#a', filter:'x', opacity:1})")
    with pytest.raises(tl.NonCanonicalizable):
        tl.serialize(program)


def test_serialize_golden_stagger_and_defaults():
    program = tl.parse(
        "timeline.add({targets:'.letters', opacity:[0,1], delay:stagger(50), duration:400, easing:'linear'})"
    )
    out = tl.serialize(program)
    assert "delay: stagger(50)" in out
    # defaults serialized explicitly for duration/easing
    program2 = tl.parse("timeline.add({targets:'#a', opacity:[0,1]})")
    assert "duration: 1000" in tl.serialize(program2)


def test_roundtrip_on_fixture_sources():
    sources = [
        "timeline.add({targets:'#a', translateX:[-512,0], duration:800, easing:'easeOutQuad'});",
        "timeline.add({targets:'#a', rotate:[0,360], scale:[0.5,1], duration:1000, loop:2, direction:'alternate'});",
        "timeline.add({targets:'#a', width:['0%','100%'], duration:300}).add({targets:'#b', opacity:[0,1]}, '+=100');",
        "timeline.add({targets:'#t1,#t2', translateY:[40,0], delay:stagger(60), duration:400});",
        "timeline;",
    ]
    for src in sources:
        program = tl.parse(src)
        assert not program.errors
        text = tl.serialize(program)
        reparsed = tl.parse(text)
        assert reparsed.structurally_equal(program), src
        assert tl.serialize(reparsed) == text  # canonical fixed point


@settings(max_examples=150)
@given(seed=st.integers(0, 10_000))
def test_roundtrip_random_programs(seed):
    rng = random.Random(seed)
    program = random_program(rng, ["a", "b", "c"])
    text = tl.serialize(program)
    reparsed = tl.parse(text)
    assert not reparsed.errors
    assert reparsed.structurally_equal(program)
    assert tl.serialize(reparsed) == text


@settings(max_examples=300)
@given(st.text(max_size=200))
def test_parser_total_on_arbitrary_text(text):
    program = tl.parse(text)  # must not raise
    assert isinstance(program, tl.TimelineProgram)
    if text.strip() and not text.lstrip().startswith("timeline"):
        assert program.errors


@settings(max_examples=200)
@given(st.text(alphabet="timeline.add({targets:'#ab',}[]0-9;%\"\n ", max_size=120))
def test_parser_total_on_adversarial_soup(text):
    tl.parse(text)


def test_selector_env_resolution():
    env = tl.SelectorEnv(
        ids=["bg", "s1", "s2", "t1"],
        roles={"bg": "background", "s1": "secondary", "s2": "secondary", "t1": "text"},
        groups={"stars": ["s1", "s2"]},
    )
    assert env.resolve("#s1") == ["s1"]
    assert env.resolve(".secondary") == ["s1", "s2"]
    assert env.resolve("stars") == ["s1", "s2"]
    assert env.resolve("#stars") == ["s1", "s2"]
    assert env.resolve("#t1,#s1") == ["s1", "t1"]  # document order
    assert env.resolve(".missing") == []
