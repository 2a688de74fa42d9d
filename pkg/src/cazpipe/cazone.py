"""Depth-based merging of 2D clusters into prioritized CAZones.

Two clusters merge when they are close (similar depth and, after a
depth-proportional margin, IoU > 0.1) or when they overlap heavily
(IoU > 0.3) regardless of depth.  Merging repeats until no pair
qualifies; a merged zone takes the bounding union of the boxes and the
minimum depth.  Zones within the speed-dependent safety distance are
high priority (HP), the rest low priority (LP).
"""

from __future__ import annotations

from dataclasses import dataclass

from .geom import PixelBox, inflate, iou
from .lidar import Cluster2D

HP = "HP"
LP = "LP"


@dataclass(frozen=True)
class MergeParams:
    a: float = 0.5  # check_close margin, px per meter of depth
    L: float = 5.0  # max depth difference for "close", meters
    inflate_c: float = 0.2  # pre-merge inflation, px per meter of depth
    iou_close: float = 0.1
    iou_overlap: float = 0.3

    def __post_init__(self):
        if self.a < 0 or self.inflate_c < 0 or self.L <= 0:
            raise ValueError("a, inflate_c must be >= 0 and L > 0")
        if not 0 < self.iou_close < self.iou_overlap < 1:
            raise ValueError("need 0 < iou_close < iou_overlap < 1")


@dataclass
class SafetyPolicy:
    """Speed (m/s) -> safe following distance (m), monotone nondecreasing."""

    entries: list[tuple[float, float]]

    def __post_init__(self):
        self.entries = sorted((float(s), float(d)) for s, d in self.entries)
        if not self.entries:
            raise ValueError("safety policy needs at least one entry")
        dists = [d for _, d in self.entries]
        if any(b < a for a, b in zip(dists, dists[1:])) or min(dists) <= 0:
            raise ValueError("safety distances must be positive and nondecreasing")

    def distance_for(self, speed: float) -> float:
        """Nearest entry with speed >= the query, else the last entry."""
        for s, d in self.entries:
            if s >= speed:
                return d
        return self.entries[-1][1]


@dataclass(frozen=True)
class CAZone:
    box: PixelBox
    depth: float
    priority: str  # HP or LP


def pre_inflate(
    clusters: list[Cluster2D], p: MergeParams, frame: tuple[int, int]
) -> list[Cluster2D]:
    """Inverse-depth inflation: grow each cluster by inflate_c * depth px per side.

    Farther clusters are inflated more, compensating LiDAR beam divergence.
    """
    return [
        Cluster2D(
            box=inflate(c.box, int(round(p.inflate_c * c.depth)), frame),
            depth=c.depth,
        )
        for c in clusters
    ]


def check_close(
    c1: Cluster2D, c2: Cluster2D, p: MergeParams, frame: tuple[int, int]
) -> bool:
    """Close = similar depth and inflated-box IoU above the close threshold."""
    if abs(c1.depth - c2.depth) > p.L:
        return False
    b1 = inflate(c1.box, int(round(p.a * c1.depth)), frame)
    b2 = inflate(c2.box, int(round(p.a * c2.depth)), frame)
    return iou(b1, b2) > p.iou_close


def _find_partner(
    zones: list[Cluster2D], i: int, p: MergeParams, frame: tuple[int, int]
) -> int | None:
    for j in range(len(zones)):
        if j != i and check_close(zones[i], zones[j], p, frame):
            return j
    for j in range(len(zones)):
        if j != i and iou(zones[i].box, zones[j].box) > p.iou_overlap:
            return j
    return None


def merge(
    clusters: list[Cluster2D], p: MergeParams, frame: tuple[int, int]
) -> list[Cluster2D]:
    """Merge clusters to a fixed point.

    Scans in input order; the first qualifying partner merges immediately
    into the scanning cluster (bounding-union box, minimum depth).  Finishes
    when a full scan produces no merge.
    """
    zones = list(clusters)
    i = 0
    while i < len(zones):
        j = _find_partner(zones, i, p, frame)
        if j is None:
            i += 1
            continue
        a, b = zones[i], zones[j]
        merged = Cluster2D(box=a.box.union(b.box), depth=min(a.depth, b.depth))
        zones[i] = merged
        del zones[j]
        if j < i:
            i -= 1
        # stay on i: the grown box may capture further partners
    return zones


def assign_priority(
    zones: list[Cluster2D], ego_speed: float, policy: SafetyPolicy
) -> list[CAZone]:
    """HP iff depth <= safety distance at the ego speed (boundary is HP)."""
    if ego_speed < 0:
        raise ValueError("ego_speed must be >= 0")
    safety = policy.distance_for(ego_speed)
    return [
        CAZone(box=z.box, depth=z.depth, priority=HP if z.depth <= safety else LP)
        for z in zones
    ]
