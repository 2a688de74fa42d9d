"""Variable downsizing and depth-aware FFDH packing of CAZones.

Closer zones are downsized harder (D = d0 - b * depth, floored at d_min) so
distant objects keep their pixels.  Downsized zones are shelf-packed,
left-justified, into square canvases whose side is a multiple of 32: HP
zones first in decreasing-height order, then LP zones first-fit into the
open canvases and finally into new ones.  Every placed rectangle carries a
gap margin on all sides; everything outside a slot is a null background
color the detector treats as non-content.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import cv2
import numpy as np

from .cazone import CAZone, HP, LP
from .geom import PixelBox, round_up_32

NULL_BG = (128, 128, 128)
DEFAULT_GAP = 4


class ZoneTooLarge(Exception):
    """A downsized zone plus gaps cannot fit the chosen canvas."""


@dataclass(frozen=True)
class DownsizeParams:
    d0: float = 3.0
    b: float = 2.0 / 75.0
    d_min: float = 1.0

    def __post_init__(self):
        if not self.d0 >= self.d_min >= 1:
            raise ValueError("need d0 >= d_min >= 1")
        if self.b < 0:
            raise ValueError("b must be >= 0")


def downsize_factor(depth: float, p: DownsizeParams) -> float:
    """Linear-in-depth factor, floored so it never drops below d_min."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    return max(p.d_min, p.d0 - p.b * depth)


def downsized_dims(zone: CAZone, p: DownsizeParams) -> tuple[int, int]:
    """Slot size after downsizing; ceiling division so no content is lost."""
    d = downsize_factor(zone.depth, p)
    return math.ceil(zone.box.width / d), math.ceil(zone.box.height / d)


@dataclass(frozen=True)
class Placement:
    zone: CAZone
    offset: tuple[int, int]  # top-left of the content slot on the canvas
    scale: float  # downsize factor D applied to the source box

    @property
    def slot(self) -> PixelBox:
        w = math.ceil(self.zone.box.width / self.scale)
        h = math.ceil(self.zone.box.height / self.scale)
        return PixelBox(self.offset[0], self.offset[1], self.offset[0] + w, self.offset[1] + h)


@dataclass
class CompositeImage:
    side: int
    placements: list[Placement] = field(default_factory=list)
    priority: str = LP  # HP iff at least one HP placement

    def refresh_priority(self):
        self.priority = HP if any(p.zone.priority == HP for p in self.placements) else LP


def choose_canvas(zones: list[CAZone], p: DownsizeParams, gap: int = DEFAULT_GAP) -> int:
    """Canvas side: max downsized dimension plus edge gaps, rounded up to 32s."""
    if not zones:
        return 32
    max_dim = max(max(downsized_dims(z, p)) for z in zones)
    return round_up_32(max_dim + 2 * gap)


class _Level:
    def __init__(self, y: int, height: int):
        self.y = y
        self.height = height
        self.x = 0


class _Canvas:
    def __init__(self, side: int):
        self.side = side
        self.levels: list[_Level] = []
        self.placements: list[tuple[CAZone, tuple[int, int], float]] = []

    def try_place(self, w: int, h: int) -> tuple[int, int] | None:
        """First level where the rect fits, else a new bottom level."""
        for lv in self.levels:
            if h <= lv.height and lv.x + w <= self.side:
                pos = (lv.x, lv.y)
                lv.x += w
                return pos
        y = self.levels[-1].y + self.levels[-1].height if self.levels else 0
        if y + h <= self.side:
            lv = _Level(y, h)
            lv.x = w
            self.levels.append(lv)
            return (0, y)
        return None


def pack_ffdh(
    zones: list[CAZone],
    side: int,
    gap: int = DEFAULT_GAP,
    p: DownsizeParams = DownsizeParams(),
) -> list[CompositeImage]:
    """Depth-aware FFDH: HP zones first, then LP zones into any open canvas.

    Both priority classes are sorted by decreasing downsized height (ties:
    decreasing width, then input index).  Rectangles carry the gap margin on
    all four sides, so slots stay >= 2*gap apart and off the canvas edge.
    """
    prepared = []
    for idx, z in enumerate(zones):
        w, h = downsized_dims(z, p)
        if w + 2 * gap > side or h + 2 * gap > side:
            raise ZoneTooLarge(
                f"zone {idx}: downsized {w}x{h} plus gap {gap} exceeds canvas {side}"
            )
        prepared.append((z, w, h, idx))

    canvases: list[_Canvas] = []

    def place_all(items):
        items = sorted(items, key=lambda t: (-t[2], -t[1], t[3]))
        for z, w, h, _ in items:
            we, he = w + 2 * gap, h + 2 * gap
            pos = None
            for cv_ in canvases:
                pos = cv_.try_place(we, he)
                if pos is not None:
                    cv_.placements.append((z, (pos[0] + gap, pos[1] + gap), downsize_factor(z.depth, p)))
                    break
            if pos is None:
                c = _Canvas(side)
                pos = c.try_place(we, he)
                assert pos is not None  # guaranteed by the size check above
                c.placements.append((z, (pos[0] + gap, pos[1] + gap), downsize_factor(z.depth, p)))
                canvases.append(c)

    place_all([t for t in prepared if t[0].priority == HP])
    place_all([t for t in prepared if t[0].priority == LP])

    out = []
    for c in canvases:
        comp = CompositeImage(
            side=side,
            placements=[Placement(zone=z, offset=off, scale=s) for z, off, s in c.placements],
        )
        comp.refresh_priority()
        out.append(comp)
    return out


def assemble(
    composite: CompositeImage,
    frame: np.ndarray,
    null_bg: tuple[int, int, int] = NULL_BG,
) -> np.ndarray:
    """Render a composite to an (S, S, 3) uint8 raster.

    Each placement's source region is area-average resampled by its factor
    into its slot; every other pixel is the null background color.
    """
    s = composite.side
    canvas = np.empty((s, s, 3), dtype=np.uint8)
    canvas[:] = null_bg
    for pl in composite.placements:
        b = pl.zone.box
        src = frame[b.y_min : b.y_max, b.x_min : b.x_max]
        slot = pl.slot
        if pl.scale == 1.0 and src.shape[0] == slot.height and src.shape[1] == slot.width:
            resized = src
        else:
            resized = cv2.resize(
                src, (slot.width, slot.height), interpolation=cv2.INTER_AREA
            )
        canvas[slot.y_min : slot.y_max, slot.x_min : slot.x_max] = resized
    return canvas


def write_ppm(raster: np.ndarray, path) -> None:
    """Binary PPM (P6) export for golden-file tests and visualization."""
    h, w, _ = raster.shape
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode())
        f.write(raster.astype(np.uint8).tobytes())
