"""Layer-wise visual bug detection: final-frame bounding box and opacity versus
the target layout. Rotation shows up indirectly through the axis-aligned box;
z-order, color, and filter properties are out of scope by design.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .document import LayeredDocument
from .geometry import BoundingBox
from .interp import FrameState, final_frame, layout_frame
from .render import DiffCropPair, RenderOptions, make_diff_crops, write_diff_crops
from .timeline_lang import SelectorEnv, TimelineProgram

BUG_KINDS = ("position", "scale", "opacity")


@dataclass(frozen=True)
class Tolerances:
    eps_pos: float = 1.0
    eps_size: float = 1.0
    eps_opacity: float = 0.01

    def __post_init__(self):
        if self.eps_pos < 0 or self.eps_size < 0 or self.eps_opacity < 0:
            raise ValueError("tolerances must be >= 0")


@dataclass(frozen=True)
class LayerBug:
    element_id: str
    kind: str  # position | scale | opacity
    expected_box: BoundingBox
    expected_opacity: float
    actual_box: BoundingBox
    actual_opacity: float
    deltas: tuple[float, float, float, float, float]  # dleft, dtop, dwidth, dheight, dopacity
    crops: Optional[DiffCropPair] = field(default=None, compare=False)
    crop_error: Optional[str] = field(default=None, compare=False)

    @property
    def delta_left(self) -> float:
        return self.deltas[0]

    @property
    def delta_top(self) -> float:
        return self.deltas[1]

    @property
    def delta_width(self) -> float:
        return self.deltas[2]

    @property
    def delta_height(self) -> float:
        return self.deltas[3]

    @property
    def delta_opacity(self) -> float:
        return self.deltas[4]

    def describe(self) -> str:
        """Human/LLM-facing delta text naming each failing dimension."""
        parts = []
        if self.kind == "position":
            if abs(self.delta_left) > 0:
                parts.append(f"left is off by {self.delta_left:+.2f}px")
            if abs(self.delta_top) > 0:
                parts.append(f"top is off by {self.delta_top:+.2f}px")
        elif self.kind == "scale":
            if abs(self.delta_width) > 0:
                parts.append(f"width is off by {self.delta_width:+.2f}px")
            if abs(self.delta_height) > 0:
                parts.append(f"height is off by {self.delta_height:+.2f}px")
        else:
            parts.append(f"opacity is off by {self.delta_opacity:+.3f}")
        where = (
            f"expected box (left={self.expected_box.left:.2f}, top={self.expected_box.top:.2f}, "
            f"width={self.expected_box.width:.2f}, height={self.expected_box.height:.2f}), "
            f"got (left={self.actual_box.left:.2f}, top={self.actual_box.top:.2f}, "
            f"width={self.actual_box.width:.2f}, height={self.actual_box.height:.2f})"
        )
        return f"{self.kind} bug on '{self.element_id}': " + "; ".join(parts) + ". " + where

    def to_dict(self) -> dict:
        return {
            "element_id": self.element_id,
            "kind": self.kind,
            "expected": {"box": self.expected_box.as_dict(), "opacity": self.expected_opacity},
            "actual": {"box": self.actual_box.as_dict(), "opacity": self.actual_opacity},
            "deltas": {
                "left": self.deltas[0],
                "top": self.deltas[1],
                "width": self.deltas[2],
                "height": self.deltas[3],
                "opacity": self.deltas[4],
            },
        }


def frame_bugs(frame: FrameState, doc: LayeredDocument, tol: Tolerances) -> list[LayerBug]:
    """Classify per-layer discrepancies of an already-computed final frame."""
    bugs: list[LayerBug] = []
    for layer in doc.layers:
        state = frame.elements[layer.id]
        expected_box = layer.bbox
        actual_box = state.aabb
        deltas = (
            actual_box.left - expected_box.left,
            actual_box.top - expected_box.top,
            actual_box.width - expected_box.width,
            actual_box.height - expected_box.height,
            state.opacity - layer.opacity,
        )

        def bug(kind: str) -> LayerBug:
            return LayerBug(
                element_id=layer.id,
                kind=kind,
                expected_box=expected_box,
                expected_opacity=layer.opacity,
                actual_box=actual_box,
                actual_opacity=state.opacity,
                deltas=deltas,
            )

        if abs(deltas[0]) > tol.eps_pos or abs(deltas[1]) > tol.eps_pos:
            bugs.append(bug("position"))
        if abs(deltas[2]) > tol.eps_size or abs(deltas[3]) > tol.eps_size:
            bugs.append(bug("scale"))
        if abs(deltas[4]) > tol.eps_opacity:
            bugs.append(bug("opacity"))
    return bugs


def verify(
    program: TimelineProgram,
    doc: LayeredDocument,
    tol: Tolerances = Tolerances(),
    env: Optional[SelectorEnv] = None,
) -> list[LayerBug]:
    """One LayerBug per failing (element, kind); an empty list means error-free."""
    return frame_bugs(final_frame(program, doc, env), doc, tol)


def attach_crops(
    bugs: list[LayerBug],
    doc: LayeredDocument,
    program: TimelineProgram,
    env: Optional[SelectorEnv] = None,
    margin: float = 16.0,
    opts: RenderOptions = RenderOptions(),
) -> list[LayerBug]:
    """Populate TARGET/FINAL crop pairs; render errors are recorded per bug and
    never fail the batch. With zero bugs, nothing is rendered."""
    if not bugs:
        return []
    target = layout_frame(doc)
    final = final_frame(program, doc, env)
    out: list[LayerBug] = []
    for bug in bugs:
        try:
            pair = make_diff_crops(doc, target, final, bug.element_id, margin=margin, opts=opts)
            out.append(replace(bug, crops=pair))
        except Exception as exc:  # propagate per bug, not batch-wide
            out.append(replace(bug, crop_error=f"{type(exc).__name__}: {exc}"))
    return out


def write_bugs(bugs: list[LayerBug], out_dir: Path) -> Path:
    """Persist bugs.json (no image bytes) plus crop files under bugs/<element>/."""
    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for bug in bugs:
        record = bug.to_dict()
        if bug.crops is not None:
            crop_dir = out_dir / "bugs" / bug.element_id
            write_diff_crops(bug.crops, crop_dir)
            record["crops"] = {
                "target": str(crop_dir.relative_to(out_dir) / "target.png"),
                "final": str(crop_dir.relative_to(out_dir) / "final.png"),
            }
        if bug.crop_error:
            record["crop_error"] = bug.crop_error
        records.append(record)
    path = out_dir / "bugs.json"
    path.write_text(json.dumps(records, indent=2, sort_keys=True), encoding="utf-8")
    return path
