"""Layered logo documents: manifest loading, validation, crops, magnified views.

A project is a JSON manifest plus per-layer RGBA PNG files. Layer rasters live in
memory as uint8 (H, W, 4) numpy arrays.
"""

from __future__ import annotations

import io
import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from .geometry import BoundingBox

LAYER_KINDS = ("image", "text-word", "text-letter")


class MissingImage(Exception):
    def __init__(self, layer_id: str, path: str):
        self.layer_id = layer_id
        self.path = path
        super().__init__(f"layer {layer_id!r}: image {path!r} is missing or not a decodable raster")


class DuplicateId(Exception):
    def __init__(self, layer_id: str):
        self.layer_id = layer_id
        super().__init__(f"duplicate layer id {layer_id!r}")


class BadDimensions(Exception):
    pass


class EmptyLayer(Exception):
    pass


class ManifestError(Exception):
    pass


@dataclass(frozen=True)
class Layer:
    id: str
    kind: str
    bbox: BoundingBox
    z_index: int
    alt_text: str = ""
    image_path: Optional[str] = None
    opacity: float = 1.0
    image: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ManifestError(f"layer {self.id!r}: unknown kind {self.kind!r}")
        if self.bbox.width <= 0 or self.bbox.height <= 0:
            raise BadDimensions(f"layer {self.id!r}: bbox must have positive size, got {self.bbox}")
        if not 0.0 <= self.opacity <= 1.0:
            raise ManifestError(f"layer {self.id!r}: opacity {self.opacity} outside [0, 1]")

    @property
    def is_text(self) -> bool:
        return self.kind in ("text-word", "text-letter")


@dataclass(frozen=True)
class LayeredDocument:
    canvas_width: float
    canvas_height: float
    layers: tuple[Layer, ...]
    title: str = ""
    source_id: str = ""

    def __post_init__(self):
        if self.canvas_width <= 0 or self.canvas_height <= 0:
            raise BadDimensions(f"canvas must be positive, got {self.canvas_width}x{self.canvas_height}")
        seen: set[str] = set()
        for layer in self.layers:
            if layer.id in seen:
                raise DuplicateId(layer.id)
            seen.add(layer.id)
            w, h = self.canvas_width, self.canvas_height
            b = layer.bbox
            if not (-w <= b.left and b.right <= 2 * w and -h <= b.top and b.bottom <= 2 * h):
                raise BadDimensions(f"layer {layer.id!r}: bbox {b} is outside the permitted bleed zone")

    def layer(self, layer_id: str) -> Layer:
        for layer in self.layers:
            if layer.id == layer_id:
                return layer
        raise KeyError(layer_id)

    def layer_ids(self) -> list[str]:
        return [layer.id for layer in self.layers]


# --- raster helpers ------------------------------------------------------------


def from_png_bytes(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as img:
        return np.asarray(img.convert("RGBA"), dtype=np.uint8).copy()


def to_png_bytes(array: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(array.astype(np.uint8), mode="RGBA").save(buf, format="PNG")
    return buf.getvalue()


def load_rgba(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGBA"), dtype=np.uint8).copy()


def save_png(path: Path, array: np.ndarray) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(array.astype(np.uint8), mode="RGBA").save(path, format="PNG")


# --- operations ----------------------------------------------------------------


def tight_bbox(layer_image: np.ndarray) -> BoundingBox:
    """Smallest rectangle containing every pixel with alpha > 0, in image coordinates."""
    if layer_image.size == 0:
        raise EmptyLayer("empty raster")
    alpha = layer_image[:, :, 3]
    ys, xs = np.nonzero(alpha)
    if len(xs) == 0:
        raise EmptyLayer("layer is fully transparent")
    left, top = int(xs.min()), int(ys.min())
    return BoundingBox(left, top, int(xs.max()) - left + 1, int(ys.max()) - top + 1)


def crop_to_alpha(layer_image: np.ndarray) -> tuple[np.ndarray, BoundingBox]:
    box = tight_bbox(layer_image)
    l, t = int(box.left), int(box.top)
    w, h = int(box.width), int(box.height)
    return layer_image[t : t + h, l : l + w].copy(), box


def magnified_view(layer: Layer, size: int = 512) -> np.ndarray:
    """Aspect-fit the tight-cropped layer into a size x size transparent square,
    centered; this is the captioning input."""
    if layer.image is None:
        raise MissingImage(layer.id, layer.image_path or "<no image>")
    crop, _ = crop_to_alpha(layer.image)
    h, w = crop.shape[:2]
    scale = min(size / w, size / h)
    content_w = max(1, round(w * scale))
    content_h = max(1, round(h * scale))
    resized = Image.fromarray(crop, mode="RGBA").resize((content_w, content_h), Image.LANCZOS)
    out = Image.new("RGBA", (size, size), (0, 0, 0, 0))
    out.paste(resized, ((size - content_w) // 2, (size - content_h) // 2))
    return np.asarray(out, dtype=np.uint8).copy()


def _generate_id(rng: random.Random, taken: set[str]) -> str:
    while True:
        candidate = f"el_{rng.randrange(16**6):06x}"
        if candidate not in taken:
            return candidate


def load_project(manifest_path: Path | str, id_seed: int = 0) -> LayeredDocument:
    """Load and validate a project manifest plus its layer rasters.

    Missing z values are assigned from list order; missing bboxes come from the
    alpha-channel tight crop of the (canvas-aligned) layer image, which is then
    cropped to match; missing ids are drawn from a seeded generator so repeated
    loads are reproducible.
    """
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {manifest_path}: {exc}") from exc

    canvas = manifest.get("canvas") or {}
    width = canvas.get("width")
    height = canvas.get("height")
    if not isinstance(width, (int, float)) or not isinstance(height, (int, float)) or width <= 0 or height <= 0:
        raise BadDimensions(f"manifest canvas must give positive width/height, got {canvas!r}")

    rng = random.Random(id_seed)
    taken: set[str] = {e["id"] for e in manifest.get("layers", []) if isinstance(e, dict) and "id" in e}
    base = manifest_path.parent
    records = []
    for index, entry in enumerate(manifest.get("layers", [])):
        if not isinstance(entry, dict):
            raise ManifestError(f"layer #{index} is not an object")
        layer_id = entry.get("id") or _generate_id(rng, taken)
        taken.add(layer_id)
        kind = entry.get("kind", "image")
        image_rel = entry.get("image")
        if not image_rel:
            raise ManifestError(f"layer {layer_id!r}: no image file given")
        image_path = base / image_rel
        try:
            image = load_rgba(image_path)
        except (OSError, ValueError) as exc:
            raise MissingImage(layer_id, str(image_path)) from exc

        if entry.get("bbox") is not None:
            bbox = BoundingBox.from_dict(entry["bbox"])
        else:
            try:
                image, bbox = crop_to_alpha(image)
            except EmptyLayer as exc:
                raise BadDimensions(f"layer {layer_id!r}: fully transparent and no bbox given") from exc

        alt_text = entry.get("alt_text", "")
        if kind in ("text-word", "text-letter") and not alt_text:
            raise ManifestError(f"layer {layer_id!r}: text layers must carry their text content as alt_text")

        z = entry.get("z", index)
        records.append(
            (
                z,
                index,
                Layer(
                    id=layer_id,
                    kind=kind,
                    bbox=bbox,
                    z_index=int(z),
                    alt_text=alt_text,
                    image_path=str(image_rel),
                    opacity=float(entry.get("opacity", 1.0)),
                    image=image,
                ),
            )
        )

    records.sort(key=lambda r: (r[0], r[1]))
    return LayeredDocument(
        canvas_width=float(width),
        canvas_height=float(height),
        layers=tuple(r[2] for r in records),
        title=manifest.get("title", ""),
        source_id=manifest.get("source_id", manifest_path.stem),
    )


def ingest_directory(directory: Path | str, canvas: Optional[tuple[int, int]] = None) -> dict:
    """Build a manifest dict from a directory of layer PNGs (filename order = z order)."""
    directory = Path(directory)
    files = sorted(p for p in directory.iterdir() if p.suffix.lower() == ".png")
    if not files:
        raise ManifestError(f"no .png layers found in {directory}")
    sizes = []
    for path in files:
        with Image.open(path) as img:
            sizes.append(img.size)
    if canvas is None:
        canvas = (max(w for w, _ in sizes), max(h for _, h in sizes))
    layers = []
    for path in files:
        stem = re.sub(r"[^A-Za-z0-9_]", "_", path.stem)
        layers.append({"id": stem, "kind": "image", "image": path.name})
    return {
        "canvas": {"width": canvas[0], "height": canvas[1]},
        "title": directory.name,
        "layers": layers,
    }
