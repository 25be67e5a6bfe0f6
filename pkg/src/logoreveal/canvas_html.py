"""Deterministic HTML representation of the canvas, role/group augmentation,
lossless parsing, and the final self-contained animated page.

Formatting is canonical (fixed attribute order, one element per line, integer or
2-decimal px values) so golden files, diffs, and caches stay stable. Group divs
carry no geometry; children keep absolute coordinates.
"""

from __future__ import annotations

import base64
import html
import re
from dataclasses import dataclass, field, replace
from html.parser import HTMLParser
from pathlib import Path
from typing import Optional

from .document import LayeredDocument, to_png_bytes
from .geometry import BoundingBox
from .timeline_lang import TimelineProgram, serialize as serialize_program

ROLES = ("primary", "secondary", "text", "background")

_RUNTIME_PATH = Path(__file__).parent / "assets" / "runtime.js"


class SchemaViolation(Exception):
    def __init__(self, node_path: str, message: str):
        self.node_path = node_path
        super().__init__(f"{node_path}: {message}")


class UnknownId(Exception):
    pass


class MultiplePrimaries(Exception):
    pass


class MissingPrimary(Exception):
    pass


class OversizeAsset(Exception):
    pass


@dataclass(frozen=True)
class ElementInfo:
    bbox: BoundingBox
    z_index: int
    alt_text: str
    role: Optional[str] = None
    group_id: Optional[str] = None
    opacity: float = 1.0
    src: str = ""


@dataclass(frozen=True)
class CanvasHtml:
    text: str
    element_index: dict[str, ElementInfo]
    canvas_width: float
    canvas_height: float

    def ids(self) -> list[str]:
        return list(self.element_index.keys())


@dataclass(frozen=True)
class RoleAssignment:
    roles: dict[str, str]

    def validate(self) -> None:
        for element_id, role in self.roles.items():
            if role not in ROLES:
                raise ValueError(f"unknown role {role!r} for {element_id!r}")
        primaries = [i for i, r in self.roles.items() if r == "primary"]
        if len(primaries) > 1:
            raise MultiplePrimaries(f"multiple primary elements: {primaries}")
        if not primaries:
            raise MissingPrimary("no primary element assigned")

    def primary_id(self) -> str:
        self.validate()
        return next(i for i, r in self.roles.items() if r == "primary")


@dataclass(frozen=True)
class GroupingPlan:
    groups: tuple[tuple[str, tuple[str, ...]], ...] = ()

    @classmethod
    def of(cls, groups: dict[str, list[str]]) -> "GroupingPlan":
        return cls(tuple((gid, tuple(members)) for gid, members in groups.items()))

    def as_dict(self) -> dict[str, list[str]]:
        return {gid: list(members) for gid, members in self.groups}

    def member_to_group(self) -> dict[str, str]:
        out: dict[str, str] = {}
        for gid, members in self.groups:
            for member in members:
                if member in out:
                    raise ValueError(f"element {member!r} appears in groups {out[member]!r} and {gid!r}")
                out[member] = gid
        return out


def _fmt_px(value: float) -> str:
    quantized = round(value, 2)
    if quantized == int(quantized):
        return str(int(quantized))
    return f"{quantized:.2f}".rstrip("0")


def _style_for(info: ElementInfo) -> str:
    style = (
        f"position:absolute;left:{_fmt_px(info.bbox.left)}px;top:{_fmt_px(info.bbox.top)}px;"
        f"width:{_fmt_px(info.bbox.width)}px;height:{_fmt_px(info.bbox.height)}px;"
        f"z-index:{info.z_index}"
    )
    if info.opacity != 1.0:
        style += f";opacity:{round(info.opacity, 2)}"
    return style


def _img_line(element_id: str, info: ElementInfo, indent: str, src_override: Optional[str] = None) -> str:
    attrs = [f'id="{html.escape(element_id, quote=True)}"']
    if info.role:
        attrs.append(f'class="{info.role}"')
    src = src_override if src_override is not None else info.src
    attrs.append(f'src="{html.escape(src, quote=True)}"')
    attrs.append(f'alt="{html.escape(info.alt_text, quote=True)}"')
    attrs.append(f'style="{_style_for(info)}"')
    return f"{indent}<img " + " ".join(attrs) + ">"


def _serialize_canvas(
    element_index: dict[str, ElementInfo],
    canvas_width: float,
    canvas_height: float,
    src_overrides: Optional[dict[str, str]] = None,
) -> str:
    lines = [
        f'<div id="canvas" style="position:relative;width:{_fmt_px(canvas_width)}px;'
        f'height:{_fmt_px(canvas_height)}px">'
    ]
    emitted: set[str] = set()
    for element_id, info in element_index.items():
        if element_id in emitted:
            continue
        if info.group_id is None:
            override = src_overrides.get(element_id) if src_overrides else None
            lines.append(_img_line(element_id, info, "  ", override))
            emitted.add(element_id)
        else:
            gid = info.group_id
            lines.append(f'  <div id="{html.escape(gid, quote=True)}">')
            for member_id, member in element_index.items():
                if member.group_id == gid:
                    override = src_overrides.get(member_id) if src_overrides else None
                    lines.append(_img_line(member_id, member, "    ", override))
                    emitted.add(member_id)
            lines.append("  </div>")
    lines.append("</div>")
    return "\n".join(lines) + "\n"


def build_html(doc: LayeredDocument) -> CanvasHtml:
    """Canonical canvas HTML: one absolutely positioned img per layer, z order
    bottom-first, byte-deterministic for a given document. Geometry is quantized
    to 2 decimal px."""
    index: dict[str, ElementInfo] = {}
    for layer in doc.layers:
        index[layer.id] = ElementInfo(
            bbox=layer.bbox,
            z_index=layer.z_index,
            alt_text=layer.alt_text,
            opacity=layer.opacity,
            src=layer.image_path or f"{layer.id}.png",
        )
    text = _serialize_canvas(index, doc.canvas_width, doc.canvas_height)
    return CanvasHtml(
        text=text,
        element_index=index,
        canvas_width=doc.canvas_width,
        canvas_height=doc.canvas_height,
    )


def augment_html(canvas: CanvasHtml, roles: RoleAssignment, groups: GroupingPlan) -> CanvasHtml:
    """Write roles into class attributes and nest each group's members under a
    geometry-free parent div. Never touches any element's bbox or z-index."""
    roles.validate()
    for element_id in roles.roles:
        if element_id not in canvas.element_index:
            raise UnknownId(f"role assigned to unknown element {element_id!r}")
    missing = [i for i in canvas.element_index if i not in roles.roles]
    if missing:
        raise UnknownId(f"roles missing for elements {missing}")

    member_group = groups.member_to_group()
    for member, gid in member_group.items():
        if member not in canvas.element_index:
            raise UnknownId(f"group {gid!r} names unknown element {member!r}")
        if roles.roles[member] != "secondary":
            raise ValueError(f"group {gid!r} member {member!r} has role {roles.roles[member]!r}, not secondary")
        if gid in canvas.element_index:
            raise ValueError(f"group id {gid!r} collides with an element id")

    index = {
        element_id: replace(info, role=roles.roles[element_id], group_id=member_group.get(element_id))
        for element_id, info in canvas.element_index.items()
    }
    text = _serialize_canvas(index, canvas.canvas_width, canvas.canvas_height)
    return CanvasHtml(
        text=text,
        element_index=index,
        canvas_width=canvas.canvas_width,
        canvas_height=canvas.canvas_height,
    )


_STYLE_KEY_RE = re.compile(r"\s*([a-z-]+)\s*:\s*([^;]+)")


def _parse_style(style: str, node_path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for chunk in style.split(";"):
        if not chunk.strip():
            continue
        m = _STYLE_KEY_RE.match(chunk)
        if not m:
            raise SchemaViolation(node_path, f"unreadable style declaration {chunk!r}")
        out[m.group(1)] = m.group(2).strip()
    return out


def _px(value: str, key: str, node_path: str) -> float:
    m = re.fullmatch(r"(-?\d+(?:\.\d+)?)px", value)
    if not m:
        raise SchemaViolation(node_path, f"style {key} must be a px value, got {value!r}")
    return float(m.group(1))


class _CanvasParser(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.canvas_width: Optional[float] = None
        self.canvas_height: Optional[float] = None
        self.elements: dict[str, ElementInfo] = {}
        self.group_stack: list[str] = []
        self.div_depth = 0
        self.img_count = 0
        self.saw_canvas = False

    def _path(self, tag: str) -> str:
        inside = "".join(f"/div#{g}" for g in self.group_stack)
        return f"/div#canvas{inside}/{tag}[{self.img_count}]"

    def handle_starttag(self, tag, attrs):
        attrs = dict(attrs)
        if tag == "div":
            self.div_depth += 1
            if self.div_depth == 1:
                if attrs.get("id") != "canvas":
                    raise SchemaViolation("/", "root element must be <div id=\"canvas\">")
                style = _parse_style(attrs.get("style", ""), "/div#canvas")
                if "width" not in style or "height" not in style:
                    raise SchemaViolation("/div#canvas", "canvas div must declare width and height")
                self.canvas_width = _px(style["width"], "width", "/div#canvas")
                self.canvas_height = _px(style["height"], "height", "/div#canvas")
                self.saw_canvas = True
            else:
                gid = attrs.get("id")
                if not gid:
                    raise SchemaViolation(self._path("div"), "group div needs an id")
                if attrs.get("style"):
                    raise SchemaViolation(f"/div#canvas/div#{gid}", "group divs must not carry geometry")
                self.group_stack.append(gid)
            return
        if tag != "img":
            raise SchemaViolation(self._path(tag), f"unexpected element <{tag}>")
        self.img_count += 1
        node_path = self._path("img")
        element_id = attrs.get("id")
        if not element_id:
            raise SchemaViolation(node_path, "img needs an id")
        node_path = f"{node_path[:-len(f'[{self.img_count}]')]}#{element_id}"
        if element_id in self.elements:
            raise SchemaViolation(node_path, f"duplicate element id {element_id!r}")
        style = _parse_style(attrs.get("style", ""), node_path)
        for key in ("left", "top", "width", "height", "z-index"):
            if key not in style:
                raise SchemaViolation(node_path, f"style is missing {key}")
        bbox = BoundingBox(
            _px(style["left"], "left", node_path),
            _px(style["top"], "top", node_path),
            _px(style["width"], "width", node_path),
            _px(style["height"], "height", node_path),
        )
        try:
            z_index = int(style["z-index"])
        except ValueError as exc:
            raise SchemaViolation(node_path, f"z-index must be an integer, got {style['z-index']!r}") from exc
        opacity = 1.0
        if "opacity" in style:
            opacity = float(style["opacity"])
        role = attrs.get("class")
        if role is not None and role not in ROLES:
            raise SchemaViolation(node_path, f"class must be one of {ROLES}, got {role!r}")
        self.elements[element_id] = ElementInfo(
            bbox=bbox,
            z_index=z_index,
            alt_text=attrs.get("alt", ""),
            role=role,
            group_id=self.group_stack[-1] if self.group_stack else None,
            opacity=opacity,
            src=attrs.get("src", ""),
        )

    def handle_endtag(self, tag):
        if tag == "div":
            if self.group_stack:
                self.group_stack.pop()
            else:
                self.div_depth -= 1


def parse_html(text: str) -> CanvasHtml:
    """Reconstruct the element index from canonical (or schema-conforming) canvas
    HTML; raises SchemaViolation with a node path on anything else."""
    parser = _CanvasParser()
    parser.feed(text)
    parser.close()
    if not parser.saw_canvas:
        raise SchemaViolation("/", "no <div id=\"canvas\"> found")
    return CanvasHtml(
        text=text,
        element_index=parser.elements,
        canvas_width=parser.canvas_width or 0.0,
        canvas_height=parser.canvas_height or 0.0,
    )


def runtime_source() -> str:
    return _RUNTIME_PATH.read_text(encoding="utf-8")


def emit_animation_page(
    canvas: CanvasHtml,
    program: TimelineProgram,
    doc: LayeredDocument,
    max_total_bytes: int = 25 * 1024 * 1024,
    title: str = "",
) -> str:
    """Self-contained page: base64 layer images, the vendored runtime inline,
    and the serialized timeline program in a trailing script block."""
    program_src = serialize_program(program)  # NonCanonicalizable on error diagnostics
    overrides: dict[str, str] = {}
    total = 0
    for element_id in canvas.element_index:
        layer = doc.layer(element_id)
        if layer.image is None:
            raise UnknownId(f"layer {element_id!r} has no raster to embed")
        png = to_png_bytes(layer.image)
        total += len(png)
        overrides[element_id] = "data:image/png;base64," + base64.b64encode(png).decode("ascii")
    if total > max_total_bytes:
        raise OversizeAsset(f"embedded assets total {total} bytes, cap is {max_total_bytes}")

    body = _serialize_canvas(canvas.element_index, canvas.canvas_width, canvas.canvas_height, overrides)
    page_title = html.escape(title or doc.title or "animated logo")
    return (
        "<!DOCTYPE html>\n"
        "<html>\n<head>\n<meta charset=\"utf-8\">\n"
        f"<title>{page_title}</title>\n"
        "<style>\nhtml,body{margin:0;padding:0}\n#canvas{overflow:hidden;background:#ffffff}\n</style>\n"
        "</head>\n<body>\n"
        + body
        + "<script>\n"
        + runtime_source()
        + "\n</script>\n<script>\n"
        + program_src
        + "</script>\n</body>\n</html>\n"
    )
