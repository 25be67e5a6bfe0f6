"""Software compositor: FrameStates to RGBA rasters, frame sequences, and the
labeled TARGET/FINAL crop pairs that feed repair prompts.

Layers are inverse-mapped through their affine transform, sampled bilinearly in
premultiplied alpha, and composited source-over in z order. Labels travel as
metadata, never burned into pixels.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .document import LayeredDocument, MissingImage, save_png, to_png_bytes
from .geometry import Affine, BoundingBox, element_transform
from .interp import CompiledProgram, ElementState, FrameState, layout_frame
from .timeline_lang import SelectorEnv, TimelineProgram


class ElementMissing(Exception):
    pass


@dataclass(frozen=True)
class RenderOptions:
    scale: int = 1
    background: tuple[int, int, int, int] = (255, 255, 255, 255)
    sampling: str = "bilinear"  # or "nearest"

    def __post_init__(self):
        if self.scale not in (1, 2):
            raise ValueError(f"scale must be 1 or 2, got {self.scale}")
        if self.sampling not in ("bilinear", "nearest"):
            raise ValueError(f"sampling must be 'bilinear' or 'nearest', got {self.sampling}")


@dataclass(frozen=True)
class DiffCropPair:
    target_crop: bytes
    final_crop: bytes
    crop_region: BoundingBox
    labels: tuple[str, str] = ("TARGET", "FINAL")
    delta: dict = field(default_factory=dict)

    def sidecar(self) -> dict:
        return {
            "labels": list(self.labels),
            "crop_region": self.crop_region.as_dict(),
            "delta": self.delta,
        }


def _layer_affine(state: ElementState, intrinsic_w: int, intrinsic_h: int, out_scale: float) -> Affine:
    """Forward map from layer-image pixel coordinates to output raster coordinates."""
    box = state.box
    place = Affine.translation(box.left, box.top).compose(
        Affine.scaling(box.width / intrinsic_w, box.height / intrinsic_h)
    )
    transform = element_transform(
        box, state.translate_x, state.translate_y, state.rotate, state.scale_x, state.scale_y
    )
    forward = transform.compose(place)
    if out_scale != 1.0:
        forward = Affine.scaling(out_scale, out_scale).compose(forward)
    return forward


def _sample_layer(
    layer_premul: np.ndarray, inverse: Affine, out_h: int, out_w: int, sampling: str
) -> np.ndarray:
    """Gather the layer into output space; premultiplied float32, zero outside."""
    src_h, src_w = layer_premul.shape[:2]
    xs = np.arange(out_w, dtype=np.float64) + 0.5
    ys = np.arange(out_h, dtype=np.float64) + 0.5
    gx, gy = np.meshgrid(xs, ys)
    sx = inverse.a * gx + inverse.b * gy + inverse.c
    sy = inverse.d * gx + inverse.e * gy + inverse.f
    u = sx - 0.5
    v = sy - 0.5
    out = np.zeros((out_h, out_w, 4), dtype=np.float32)

    if sampling == "nearest":
        ui = np.rint(u).astype(np.int64)
        vi = np.rint(v).astype(np.int64)
        valid = (ui >= 0) & (ui < src_w) & (vi >= 0) & (vi < src_h)
        out[valid] = layer_premul[vi[valid], ui[valid]]
        return out

    u0 = np.floor(u).astype(np.int64)
    v0 = np.floor(v).astype(np.int64)
    du = (u - u0).astype(np.float32)
    dv = (v - v0).astype(np.float32)
    for oy, ox, weight in (
        (0, 0, (1 - du) * (1 - dv)),
        (0, 1, du * (1 - dv)),
        (1, 0, (1 - du) * dv),
        (1, 1, du * dv),
    ):
        ui = u0 + ox
        vi = v0 + oy
        valid = (ui >= 0) & (ui < src_w) & (vi >= 0) & (vi < src_h)
        if not valid.any():
            continue
        contrib = np.zeros((out_h, out_w, 4), dtype=np.float32)
        contrib[valid] = layer_premul[vi[valid], ui[valid]]
        out += contrib * weight[..., None]
    return out


def render_frame(
    doc: LayeredDocument, frame: FrameState, opts: RenderOptions = RenderOptions()
) -> np.ndarray:
    """Composite every layer at its frame state, bottom z first, source-over."""
    out_w = int(round(doc.canvas_width * opts.scale))
    out_h = int(round(doc.canvas_height * opts.scale))
    bg = np.array(opts.background, dtype=np.float32) / 255.0
    acc = np.empty((out_h, out_w, 4), dtype=np.float32)
    acc[..., :3] = bg[:3] * bg[3]
    acc[..., 3] = bg[3]

    for layer in doc.layers:
        if layer.image is None:
            raise MissingImage(layer.id, layer.image_path or "<no image>")
        state = frame.elements[layer.id]
        if state.opacity <= 0.0 or state.width <= 0.0 or state.height <= 0.0:
            continue
        if state.scale_x == 0.0 or state.scale_y == 0.0:
            continue
        src = layer.image.astype(np.float32) / 255.0
        premul = src.copy()
        premul[..., :3] *= premul[..., 3:4]
        forward = _layer_affine(state, layer.image.shape[1], layer.image.shape[0], float(opts.scale))
        sampled = _sample_layer(premul, forward.invert(), out_h, out_w, opts.sampling)
        sampled *= state.opacity
        src_a = sampled[..., 3:4]
        acc = sampled + acc * (1.0 - src_a)

    rgb = acc[..., :3]
    alpha = acc[..., 3:4]
    safe = np.where(alpha > 1e-6, alpha, 1.0)
    straight = np.concatenate([rgb / safe, alpha], axis=-1)
    return np.clip(np.rint(straight * 255.0), 0, 255).astype(np.uint8)


def static_composite(doc: LayeredDocument, opts: RenderOptions = RenderOptions()) -> np.ndarray:
    """The document's target layout, rendered with no animation applied."""
    return render_frame(doc, layout_frame(doc), opts)


def render_sequence(
    doc: LayeredDocument,
    program: TimelineProgram,
    fps: float,
    opts: RenderOptions = RenderOptions(),
    env: Optional[SelectorEnv] = None,
) -> list[np.ndarray]:
    """Frames at t = 0, 1000/fps, ... through T_end inclusive."""
    if not 1 <= fps <= 60:
        raise ValueError(f"fps must be in [1, 60], got {fps}")
    compiled = CompiledProgram(program, doc, env)
    t_end = compiled.t_end()
    step = 1000.0 / fps
    times = [i * step for i in range(int(math.floor(t_end / step)) + 1)]
    if not times or abs(times[-1] - t_end) > 1e-9:
        times.append(t_end)
    return [render_frame(doc, compiled.state_at(t), opts) for t in times]


def write_sequence(frames: list[np.ndarray], out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, frame in enumerate(frames):
        path = out_dir / f"{i:04d}.png"
        save_png(path, frame)
        paths.append(path)
    return paths


def _pixel_region(region: BoundingBox, canvas_w: float, canvas_h: float) -> tuple[int, int, int, int]:
    x0 = int(math.floor(region.left))
    y0 = int(math.floor(region.top))
    x1 = int(math.ceil(region.right))
    y1 = int(math.ceil(region.bottom))
    x0 = min(max(x0, 0), int(canvas_w) - 1)
    y0 = min(max(y0, 0), int(canvas_h) - 1)
    x1 = min(max(x1, x0 + 1), int(canvas_w))
    y1 = min(max(y1, y0 + 1), int(canvas_h))
    return x0, y0, x1, y1


def make_diff_crops(
    doc: LayeredDocument,
    target_frame: FrameState,
    final_frame: FrameState,
    element_id: str,
    margin: float = 16.0,
    opts: RenderOptions = RenderOptions(),
) -> DiffCropPair:
    """Two same-size crops spanning the element's target and actual placements."""
    if element_id not in target_frame.elements or element_id not in final_frame.elements:
        raise ElementMissing(element_id)
    target_box = target_frame.elements[element_id].aabb
    final_box = final_frame.elements[element_id].aabb
    region = target_box.hull(final_box).inflate(margin).clip_to(doc.canvas_width, doc.canvas_height)
    x0, y0, x1, y1 = _pixel_region(region, doc.canvas_width, doc.canvas_height)

    target_raster = render_frame(doc, target_frame, opts)
    final_raster = render_frame(doc, final_frame, opts)
    s = opts.scale
    target_crop = target_raster[y0 * s : y1 * s, x0 * s : x1 * s]
    final_crop = final_raster[y0 * s : y1 * s, x0 * s : x1 * s]

    target_op = target_frame.elements[element_id].opacity
    final_op = final_frame.elements[element_id].opacity
    delta = {
        "left": final_box.left - target_box.left,
        "top": final_box.top - target_box.top,
        "width": final_box.width - target_box.width,
        "height": final_box.height - target_box.height,
        "opacity": final_op - target_op,
    }
    return DiffCropPair(
        target_crop=to_png_bytes(target_crop),
        final_crop=to_png_bytes(final_crop),
        crop_region=BoundingBox(x0, y0, x1 - x0, y1 - y0),
        delta=delta,
    )


def write_diff_crops(pair: DiffCropPair, out_dir: Path) -> dict:
    """Persist a crop pair as bugs/<element>/target.png|final.png plus bug.json."""
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "target.png").write_bytes(pair.target_crop)
    (out_dir / "final.png").write_bytes(pair.final_crop)
    sidecar = pair.sidecar()
    sidecar["files"] = {"target": "target.png", "final": "final.png"}
    (out_dir / "bug.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True), encoding="utf-8")
    return sidecar
