"""Detector interface, reference detectors, and back-mapping.

Real DNN inference is out of scope; any object with a
detect(raster, placements) method can be plugged in.  The bundled
OracleDetector answers from scene ground truth (for end-to-end fidelity
tests), the NullBackgroundDetector from raster content only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .geom import PixelBox
from .packing import NULL_BG, Placement


@dataclass(frozen=True)
class Detection:
    box: PixelBox
    class_label: str
    score: float
    priority: str | None = None

    def __post_init__(self):
        if not 0 <= self.score <= 1:
            raise ValueError("score must be in [0, 1]")


class Detector(Protocol):
    def detect(self, raster: np.ndarray, placements: list[Placement]) -> list[Detection]:
        ...


def frame_box_to_composite(box: PixelBox, pl: Placement) -> PixelBox | None:
    """Map a frame-coordinate box into a placement's slot, clipped to it.

    Returns None when the box misses the placement's source region.
    """
    src = pl.zone.box
    clipped = box.intersect(src)
    if clipped is None:
        return None
    d = pl.scale
    ox, oy = pl.offset
    x0 = ox + round((clipped.x_min - src.x_min) / d)
    y0 = oy + round((clipped.y_min - src.y_min) / d)
    x1 = ox + round((clipped.x_max - src.x_min) / d)
    y1 = oy + round((clipped.y_max - src.y_min) / d)
    if x0 >= x1 or y0 >= y1:
        return None
    slot = pl.slot
    return PixelBox(
        max(slot.x_min, x0), max(slot.y_min, y0), min(slot.x_max, x1), min(slot.y_max, y1)
    )


class OracleDetector:
    """Answers with ground truth: for each placement, every truth box whose
    frame region intersects the placement's source box, expressed in
    composite coordinates with score 1.0."""

    def __init__(self, truth: list[tuple[PixelBox, float, str]]):
        self.truth = truth

    def detect(self, raster: np.ndarray, placements: list[Placement]) -> list[Detection]:
        out = []
        for pl in placements:
            for box, _depth, label in self.truth:
                comp_box = frame_box_to_composite(box, pl)
                if comp_box is not None:
                    out.append(Detection(box=comp_box, class_label=label, score=1.0))
        return out


class NullBackgroundDetector:
    """Content stub: reports the non-background extent of each slot."""

    def __init__(self, null_bg: tuple[int, int, int] = NULL_BG):
        self.null_bg = np.array(null_bg, dtype=np.uint8)

    def detect(self, raster: np.ndarray, placements: list[Placement]) -> list[Detection]:
        out = []
        for pl in placements:
            slot = pl.slot
            patch = raster[slot.y_min : slot.y_max, slot.x_min : slot.x_max]
            content = (patch != self.null_bg).any(axis=-1)
            if not content.any():
                continue
            ys, xs = np.nonzero(content)
            out.append(
                Detection(
                    box=PixelBox(
                        slot.x_min + int(xs.min()),
                        slot.y_min + int(ys.min()),
                        slot.x_min + int(xs.max()) + 1,
                        slot.y_min + int(ys.max()) + 1,
                    ),
                    class_label="object",
                    score=0.5,
                )
            )
        return out


def backmap(
    dets: list[Detection], placements: list[Placement], frame: tuple[int, int]
) -> list[Detection]:
    """Map composite-coordinate detections back to frame coordinates.

    A detection belongs to the placement whose slot contains its center;
    detections on background (no owning slot) are discarded.
    """
    w, h = frame
    out = []
    for det in dets:
        cx, cy = det.box.center
        owner = next((pl for pl in placements if pl.slot.contains_point(cx, cy)), None)
        if owner is None:
            continue
        src = owner.zone.box
        ox, oy = owner.offset
        d = owner.scale
        x0 = src.x_min + round((det.box.x_min - ox) * d)
        y0 = src.y_min + round((det.box.y_min - oy) * d)
        x1 = src.x_min + round((det.box.x_max - ox) * d)
        y1 = src.y_min + round((det.box.y_max - oy) * d)
        x0, y0 = max(0, x0), max(0, y0)
        x1, y1 = min(w, x1), min(h, y1)
        if x0 >= x1 or y0 >= y1:
            continue
        out.append(
            Detection(
                box=PixelBox(x0, y0, x1, y1),
                class_label=det.class_label,
                score=det.score,
                priority=owner.zone.priority,
            )
        )
    return out
