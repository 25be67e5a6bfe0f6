"""Axis-aligned boxes and the affine transform math shared across the engine."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class BoundingBox:
    left: float
    top: float
    width: float
    height: float

    def __post_init__(self):
        if self.width < 0 or self.height < 0:
            raise ValueError(f"negative box dimensions: {self.width}x{self.height}")

    @property
    def right(self) -> float:
        return self.left + self.width

    @property
    def bottom(self) -> float:
        return self.top + self.height

    @property
    def center(self) -> tuple[float, float]:
        return (self.left + self.width / 2.0, self.top + self.height / 2.0)

    @property
    def area(self) -> float:
        return self.width * self.height

    def hull(self, other: "BoundingBox") -> "BoundingBox":
        left = min(self.left, other.left)
        top = min(self.top, other.top)
        right = max(self.right, other.right)
        bottom = max(self.bottom, other.bottom)
        return BoundingBox(left, top, right - left, bottom - top)

    def inflate(self, margin: float) -> "BoundingBox":
        return BoundingBox(
            self.left - margin,
            self.top - margin,
            self.width + 2 * margin,
            self.height + 2 * margin,
        )

    def clip_to(self, width: float, height: float) -> "BoundingBox":
        """Intersect with the [0,0,width,height] canvas; empty intersections collapse to a zero box."""
        left = min(max(self.left, 0.0), width)
        top = min(max(self.top, 0.0), height)
        right = min(max(self.right, 0.0), width)
        bottom = min(max(self.bottom, 0.0), height)
        return BoundingBox(left, top, max(right - left, 0.0), max(bottom - top, 0.0))

    def as_dict(self) -> dict:
        return {"left": self.left, "top": self.top, "width": self.width, "height": self.height}

    @classmethod
    def from_dict(cls, d: dict) -> "BoundingBox":
        return cls(float(d["left"]), float(d["top"]), float(d["width"]), float(d["height"]))


@dataclass(frozen=True)
class Affine:
    """Row-major 2x3 matrix: maps (x, y) -> (a*x + b*y + c, d*x + e*y + f)."""

    a: float
    b: float
    c: float
    d: float
    e: float
    f: float

    @classmethod
    def identity(cls) -> "Affine":
        return cls(1.0, 0.0, 0.0, 0.0, 1.0, 0.0)

    @classmethod
    def translation(cls, tx: float, ty: float) -> "Affine":
        return cls(1.0, 0.0, tx, 0.0, 1.0, ty)

    @classmethod
    def scaling(cls, sx: float, sy: float) -> "Affine":
        return cls(sx, 0.0, 0.0, 0.0, sy, 0.0)

    @classmethod
    def rotation_deg(cls, degrees: float) -> "Affine":
        r = math.radians(degrees)
        cos, sin = math.cos(r), math.sin(r)
        return cls(cos, -sin, 0.0, sin, cos, 0.0)

    def compose(self, inner: "Affine") -> "Affine":
        """self applied after inner: (self @ inner)(p) == self(inner(p))."""
        return Affine(
            self.a * inner.a + self.b * inner.d,
            self.a * inner.b + self.b * inner.e,
            self.a * inner.c + self.b * inner.f + self.c,
            self.d * inner.a + self.e * inner.d,
            self.d * inner.b + self.e * inner.e,
            self.d * inner.c + self.e * inner.f + self.f,
        )

    def apply(self, x: float, y: float) -> tuple[float, float]:
        return (self.a * x + self.b * y + self.c, self.d * x + self.e * y + self.f)

    def invert(self) -> "Affine":
        det = self.a * self.e - self.b * self.d
        if abs(det) < 1e-12:
            raise ValueError("singular affine transform")
        ia = self.e / det
        ib = -self.b / det
        id_ = -self.d / det
        ie = self.a / det
        ic = -(ia * self.c + ib * self.f)
        if_ = -(id_ * self.c + ie * self.f)
        return Affine(ia, ib, ic, id_, ie, if_)


def element_transform(
    box: BoundingBox,
    translate_x: float,
    translate_y: float,
    rotate_deg: float,
    scale_x: float,
    scale_y: float,
) -> Affine:
    """Canvas-space transform about the box center, applied translate -> rotate -> scale.

    A canvas point p maps to center + (tx, ty) + R(theta) @ S @ (p - center),
    i.e. the CSS transform list translate() rotate() scale() with a centered origin.
    """
    cx, cy = box.center
    to_local = Affine.translation(-cx, -cy)
    back = Affine.translation(cx + translate_x, cy + translate_y)
    rs = Affine.rotation_deg(rotate_deg).compose(Affine.scaling(scale_x, scale_y))
    return back.compose(rs.compose(to_local))


def transformed_aabb(
    box: BoundingBox,
    translate_x: float = 0.0,
    translate_y: float = 0.0,
    rotate_deg: float = 0.0,
    scale_x: float = 1.0,
    scale_y: float = 1.0,
) -> BoundingBox:
    """Axis-aligned hull of the box's four transformed corners."""
    m = element_transform(box, translate_x, translate_y, rotate_deg, scale_x, scale_y)
    corners = [
        m.apply(box.left, box.top),
        m.apply(box.right, box.top),
        m.apply(box.right, box.bottom),
        m.apply(box.left, box.bottom),
    ]
    xs = [p[0] for p in corners]
    ys = [p[1] for p in corners]
    return BoundingBox(min(xs), min(ys), max(xs) - min(xs), max(ys) - min(ys))
