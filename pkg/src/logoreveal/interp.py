"""Deterministic timeline evaluation: easing, scheduling, interpolation, final frame.

Replaces in-browser execution of generated animation code with exact arithmetic over
the DSL subset, so verification and repair can run headless and reproducibly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .document import LayeredDocument, Layer
from .geometry import BoundingBox, transformed_aabb
from .timeline_lang import (
    Diagnostic,
    PropertySpec,
    SelectorEnv,
    Severity,
    Stagger,
    TimelineEntry,
    TimelineProgram,
    Unit,
    entry_starts,
)

_C1 = 1.70158
_C3 = _C1 + 1.0


def _ease_in_out_quad(t: float) -> float:
    return 2 * t * t if t < 0.5 else 1 - (-2 * t + 2) ** 2 / 2


def _ease_in_out_cubic(t: float) -> float:
    return 4 * t * t * t if t < 0.5 else 1 - (-2 * t + 2) ** 3 / 2


def _ease_out_elastic(t: float) -> float:
    if t <= 0.0:
        return 0.0
    if t >= 1.0:
        return 1.0
    return 2 ** (-10 * t) * math.sin((10 * t - 0.75) * (2 * math.pi / 3)) + 1


EASINGS: dict[str, Callable[[float], float]] = {
    "linear": lambda t: t,
    "easeInQuad": lambda t: t * t,
    "easeOutQuad": lambda t: 1 - (1 - t) ** 2,
    "easeInOutQuad": _ease_in_out_quad,
    "easeInCubic": lambda t: t**3,
    "easeOutCubic": lambda t: 1 - (1 - t) ** 3,
    "easeInOutCubic": _ease_in_out_cubic,
    "easeInSine": lambda t: 1 - math.cos(t * math.pi / 2),
    "easeOutSine": lambda t: math.sin(t * math.pi / 2),
    "easeInOutSine": lambda t: -(math.cos(math.pi * t) - 1) / 2,
    "easeOutBack": lambda t: 1 + _C3 * (t - 1) ** 3 + _C1 * (t - 1) ** 2,
    "easeOutElastic": _ease_out_elastic,
}


class UnknownEasing(Exception):
    pass


def ease(name: str, t: float) -> float:
    """Easing curve value; t is a fraction in [0, 1]."""
    fn = EASINGS.get(name)
    if fn is None:
        raise UnknownEasing(name)
    return fn(min(max(t, 0.0), 1.0))


@dataclass(frozen=True)
class ScheduleItem:
    entry: TimelineEntry
    element_id: str
    start: float
    effective_delay: float
    duration: float
    period: float
    looping: bool  # infinite loop
    repetitions: int

    @property
    def begin(self) -> float:
        return self.start + self.effective_delay

    @property
    def total_active(self) -> Optional[float]:
        """Active span after the delay; None when looping forever."""
        if self.looping:
            return None
        return self.period * self.repetitions


@dataclass
class Schedule:
    items: list[ScheduleItem] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)


def resolve_schedule(
    program: TimelineProgram,
    doc: LayeredDocument,
    env: Optional[SelectorEnv] = None,
) -> Schedule:
    """Absolute start per (entry, element). Sequential entries chain off the previous
    entry's end; relative offsets add to it; stagger gives element k an extra k*step."""
    env = env or selector_env(doc)
    schedule = Schedule()
    resolved = entry_starts(program, env)
    resolved_entries = {id(entry) for entry, _, _ in resolved}
    for entry in program.entries:
        if id(entry) not in resolved_entries:
            schedule.diagnostics.append(
                Diagnostic(
                    Severity.WARNING,
                    "UNMATCHED_SELECTOR",
                    f"selector {entry.targets!r} matches no element; entry skipped",
                    (0, 0),
                    0,
                    0,
                )
            )
    for entry, matched, start in resolved:
        for k, element_id in enumerate(matched):
            delay = entry.delay.step * k if isinstance(entry.delay, Stagger) else entry.delay
            schedule.items.append(
                ScheduleItem(
                    entry=entry,
                    element_id=element_id,
                    start=start,
                    effective_delay=delay,
                    duration=entry.duration,
                    period=entry.period,
                    looping=entry.is_infinite_loop,
                    repetitions=entry.repetitions(),
                )
            )
    return schedule


def selector_env(doc: LayeredDocument, roles: Optional[dict] = None, groups: Optional[dict] = None) -> SelectorEnv:
    return SelectorEnv(
        ids=[layer.id for layer in doc.layers],
        roles=dict(roles or {}),
        groups={k: list(v) for k, v in (groups or {}).items()},
    )


@dataclass(frozen=True)
class ElementState:
    left: float
    top: float
    width: float
    height: float
    translate_x: float
    translate_y: float
    scale_x: float
    scale_y: float
    rotate: float
    opacity: float
    aabb: BoundingBox

    @property
    def box(self) -> BoundingBox:
        return BoundingBox(self.left, self.top, self.width, self.height)


@dataclass(frozen=True)
class FrameState:
    time: float
    elements: dict[str, ElementState]

    def __getitem__(self, element_id: str) -> ElementState:
        return self.elements[element_id]


_LAYOUT_DEFAULTS = {
    "translateX": 0.0,
    "translateY": 0.0,
    "scale": 1.0,
    "scaleX": 1.0,
    "scaleY": 1.0,
    "rotate": 0.0,
}


def _layout_value(prop: str, layer: Layer) -> float:
    if prop == "left":
        return layer.bbox.left
    if prop == "top":
        return layer.bbox.top
    if prop == "width":
        return layer.bbox.width
    if prop == "height":
        return layer.bbox.height
    if prop == "opacity":
        return layer.opacity
    return _LAYOUT_DEFAULTS[prop]


def _to_canonical(value: float, unit: Unit, prop: str, layer: Layer, doc: LayeredDocument) -> float:
    if unit is not Unit.PERCENT:
        return value
    if prop == "translateX":
        return value / 100.0 * layer.bbox.width
    if prop == "translateY":
        return value / 100.0 * layer.bbox.height
    if prop in ("left", "width"):
        return value / 100.0 * doc.canvas_width
    return value / 100.0 * doc.canvas_height


@dataclass
class _Segment:
    begin: float
    duration: float
    period: float
    repetitions: int
    looping: bool
    easing: str
    explicit_from: Optional[float]  # canonical units, None when chained
    to_value: float
    from_value: float = 0.0  # filled in during track compilation

    def value_at(self, t: float) -> float:
        local = t - self.begin
        if self.looping:
            phase = local % self.period
        else:
            total = self.period * self.repetitions
            phase = self.period if local >= total else local % self.period
        if phase <= self.duration:
            progress = phase / self.duration
        else:
            progress = (self.period - phase) / self.duration
        eased = ease(self.easing, progress)
        return self.from_value + (self.to_value - self.from_value) * eased


class CompiledProgram:
    """Per-(element, property) tracks with chained implicit 'from' values resolved,
    so frames at many t share one pass of schedule work."""

    def __init__(
        self,
        program: TimelineProgram,
        doc: LayeredDocument,
        env: Optional[SelectorEnv] = None,
    ):
        self.doc = doc
        self.schedule = resolve_schedule(program, doc, env)
        self._tracks: dict[tuple[str, str], list[_Segment]] = {}
        by_layer = {layer.id: layer for layer in doc.layers}
        for item in self.schedule.items:
            layer = by_layer[item.element_id]
            for prop, spec in item.entry.properties.items():
                seg = _Segment(
                    begin=item.begin,
                    duration=item.duration,
                    period=item.period,
                    repetitions=item.repetitions,
                    looping=item.looping,
                    easing=item.entry.easing,
                    explicit_from=(
                        None
                        if spec.from_value is None
                        else _to_canonical(spec.from_value, spec.unit, prop, layer, doc)
                    ),
                    to_value=_to_canonical(spec.to, spec.unit, prop, layer, doc),
                )
                self._tracks.setdefault((item.element_id, prop), []).append(seg)
        for (element_id, prop), segs in self._tracks.items():
            segs.sort(key=lambda s: s.begin)
            layout = _layout_value(prop, by_layer[element_id])
            for j, seg in enumerate(segs):
                if seg.explicit_from is not None:
                    seg.from_value = seg.explicit_from
                else:
                    seg.from_value = self._track_value(segs[:j], layout, seg.begin)

    @staticmethod
    def _track_value(segs: list[_Segment], layout: float, t: float) -> float:
        active = None
        for seg in segs:
            if seg.begin <= t:
                active = seg
            else:
                break
        if active is None:
            if segs and segs[0].explicit_from is not None:
                return segs[0].explicit_from
            return layout
        return active.value_at(t)

    def property_value(self, element_id: str, prop: str, layer: Layer, t: float) -> float:
        segs = self._tracks.get((element_id, prop))
        layout = _layout_value(prop, layer)
        if not segs:
            return layout
        return self._track_value(segs, layout, t)

    def t_end(self) -> float:
        """Logical end: the last moment any finite animation is still active.
        Infinite loops have no end and are excluded; 0 when nothing is finite."""
        end = 0.0
        for item in self.schedule.items:
            total = item.total_active
            if total is None:
                continue
            end = max(end, item.begin + total)
        return end

    def state_at(self, t: float) -> FrameState:
        elements: dict[str, ElementState] = {}
        for layer in self.doc.layers:
            get = lambda prop: self.property_value(layer.id, prop, layer, t)
            left, top = get("left"), get("top")
            width, height = max(get("width"), 0.0), max(get("height"), 0.0)
            tx, ty = get("translateX"), get("translateY")
            scale = get("scale")
            sx, sy = scale * get("scaleX"), scale * get("scaleY")
            rot = get("rotate")
            opacity = min(max(get("opacity"), 0.0), 1.0)
            box = BoundingBox(left, top, width, height)
            aabb = transformed_aabb(box, tx, ty, rot, sx, sy)
            elements[layer.id] = ElementState(
                left=left,
                top=top,
                width=width,
                height=height,
                translate_x=tx,
                translate_y=ty,
                scale_x=sx,
                scale_y=sy,
                rotate=rot,
                opacity=opacity,
                aabb=aabb,
            )
        return FrameState(time=t, elements=elements)


def sample(
    program: TimelineProgram,
    doc: LayeredDocument,
    t: float,
    env: Optional[SelectorEnv] = None,
) -> FrameState:
    """Resolved visual state of every element at time t (ms)."""
    return CompiledProgram(program, doc, env).state_at(t)


def final_frame(
    program: TimelineProgram,
    doc: LayeredDocument,
    env: Optional[SelectorEnv] = None,
) -> FrameState:
    """State at the timeline's logical end; still-looping entries are evaluated at
    their loop phase, which is what leaves the small residual deltas repair hunts."""
    compiled = CompiledProgram(program, doc, env)
    return compiled.state_at(compiled.t_end())


def layout_frame(doc: LayeredDocument) -> FrameState:
    """Static target layout as a FrameState (the identity frame)."""
    return CompiledProgram(TimelineProgram(), doc).state_at(0.0)
