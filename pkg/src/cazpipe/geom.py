"""Pixel-box primitives shared by the whole pipeline.

Boxes are closed-open integer rectangles in frame coordinates (origin
top-left, x right, y down): pixel (x, y) is inside iff
x_min <= x < x_max and y_min <= y < y_max.  Area is therefore
width * height with no +1 fencepost, which keeps IoU deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class PixelBox:
    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"degenerate box: {self}")

    @property
    def width(self) -> int:
        return self.x_max - self.x_min

    @property
    def height(self) -> int:
        return self.y_max - self.y_min

    @property
    def area(self) -> int:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0

    def union(self, other: "PixelBox") -> "PixelBox":
        """Bounding union: the smallest box containing both."""
        return PixelBox(
            min(self.x_min, other.x_min),
            min(self.y_min, other.y_min),
            max(self.x_max, other.x_max),
            max(self.y_max, other.y_max),
        )

    def intersect(self, other: "PixelBox") -> "PixelBox | None":
        x0 = max(self.x_min, other.x_min)
        y0 = max(self.y_min, other.y_min)
        x1 = min(self.x_max, other.x_max)
        y1 = min(self.y_max, other.y_max)
        if x0 >= x1 or y0 >= y1:
            return None
        return PixelBox(x0, y0, x1, y1)

    def contains_point(self, x: float, y: float) -> bool:
        return self.x_min <= x < self.x_max and self.y_min <= y < self.y_max


def iou(a: PixelBox, b: PixelBox) -> float:
    """Intersection over union of two boxes; 0 when the union has no area."""
    inter = a.intersect(b)
    inter_area = inter.area if inter is not None else 0
    union_area = a.area + b.area - inter_area
    if union_area == 0:
        return 0.0
    return inter_area / union_area


def inflate(b: PixelBox, margin: int, frame: tuple[int, int]) -> PixelBox:
    """Move each side outward by `margin` pixels, clamped to the frame."""
    if margin < 0:
        raise ValueError("margin must be >= 0")
    w, h = frame
    return PixelBox(
        max(0, b.x_min - margin),
        max(0, b.y_min - margin),
        min(w, b.x_max + margin),
        min(h, b.y_max + margin),
    )


def round_up_32(n: int) -> int:
    """Smallest multiple of 32 >= n; 0 maps to 32 (minimum usable canvas)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return 32
    return ((n + 31) // 32) * 32
