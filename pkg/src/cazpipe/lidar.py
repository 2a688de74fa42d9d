"""LiDAR processing: camera-FOV crop, angle-threshold depth clustering over
the range image, and projection of 3D clusters to depth-labeled 2D clusters.

Clustering follows the classic range-image segmentation rule: two adjacent
beams with ranges d1 >= d2 separated by angular step alpha belong to the same
object iff

    beta = atan2(d2 * sin(alpha), d1 - d2 * cos(alpha)) > theta

i.e. the surface between them is steep enough that the depth step is not a
discontinuity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .geom import PixelBox
from .scene import NO_RETURN, CameraModel, RangeImage, pixel_box_of_points


@dataclass(frozen=True)
class ClusterParams:
    theta: float = math.radians(10.0)  # split threshold; the cited method's usual default
    min_cluster_points: int = 5

    def __post_init__(self):
        if not 0 < self.theta < math.pi / 2:
            raise ValueError("theta must be in (0, pi/2)")
        if self.min_cluster_points < 1:
            raise ValueError("min_cluster_points must be >= 1")


@dataclass
class Cluster3D:
    point_indices: list[tuple[int, int]]  # (ring, azimuth) cells
    min_range: float


@dataclass(frozen=True)
class Cluster2D:
    box: PixelBox
    depth: float

    def __post_init__(self):
        if self.depth <= 0:
            raise ValueError("depth must be > 0")
        if self.box.area == 0:
            raise ValueError("box must be nonempty")


def crop_fov(ri: RangeImage, cam: CameraModel) -> RangeImage:
    """Blank every column whose azimuth falls outside the camera's horizontal FOV."""
    half = math.radians(cam.hfov_deg) / 2.0
    keep = np.abs(ri.azimuth) <= half
    ranges = ri.ranges.copy()
    ranges[:, ~keep] = NO_RETURN
    return RangeImage(
        ranges=ranges,
        azimuth=ri.azimuth,
        elevation=ri.elevation,
        alpha_h=ri.alpha_h,
        alpha_v=ri.alpha_v,
        max_range=ri.max_range,
    )


def beam_angle(d1: float, d2: float, alpha: float) -> float:
    """Angle beta between the farther beam and the chord to the nearer return.

    d1 >= d2 > 0.  Adjacent points belong to the same segment iff beta > theta.
    """
    return math.atan2(d2 * math.sin(alpha), d1 - d2 * math.cos(alpha))


def _edge_mask(a: np.ndarray, b: np.ndarray, alpha: float, theta: float) -> np.ndarray:
    """Same-segment mask for two aligned range slabs (vectorized beam_angle)."""
    both = np.isfinite(a) & np.isfinite(b)
    d1 = np.maximum(a, b)
    d2 = np.minimum(a, b)
    with np.errstate(invalid="ignore"):
        beta = np.arctan2(d2 * math.sin(alpha), d1 - d2 * math.cos(alpha))
    return both & (beta > theta)


def depth_cluster(ri: RangeImage, p: ClusterParams) -> list[Cluster3D]:
    """Connected components over the 4-neighborhood of the range grid.

    An edge joins two finite cells iff beam_angle exceeds theta (alpha_h for
    row neighbors, alpha_v for column neighbors).  Components smaller than
    min_cluster_points are discarded.
    """
    ranges = ri.ranges
    finite = np.isfinite(ranges)
    n = int(finite.sum())
    if n == 0:
        return []
    node_id = np.full(ranges.shape, -1, dtype=np.int64)
    node_id[finite] = np.arange(n)

    rows, cols = [], []
    h = _edge_mask(ranges[:, :-1], ranges[:, 1:], ri.alpha_h, p.theta)
    ii, jj = np.nonzero(h)
    rows.append(node_id[ii, jj])
    cols.append(node_id[ii, jj + 1])
    v = _edge_mask(ranges[:-1, :], ranges[1:, :], ri.alpha_v, p.theta)
    ii, jj = np.nonzero(v)
    rows.append(node_id[ii, jj])
    cols.append(node_id[ii + 1, jj])

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    n_comp, labels = connected_components(adj, directed=False)

    cell_rows, cell_cols = np.nonzero(finite)
    clusters = []
    for k in range(n_comp):
        member = labels == k
        if member.sum() < p.min_cluster_points:
            continue
        cells = list(zip(cell_rows[member].tolist(), cell_cols[member].tolist()))
        min_range = float(ranges[cell_rows[member], cell_cols[member]].min())
        clusters.append(Cluster3D(point_indices=cells, min_range=min_range))
    return clusters


def project_cluster(c: Cluster3D, ri: RangeImage, cam: CameraModel) -> Cluster2D | None:
    """Project every member point; tight pixel bound clipped to the image.

    depth is the cluster's closest-point range.  None when no member point
    projects in front of the camera and inside the image.
    """
    idx = np.asarray(c.point_indices)
    rings, azs = idx[:, 0], idx[:, 1]
    r = ri.ranges[rings, azs]
    el = ri.elevation[rings]
    ph = ri.azimuth[azs]
    pts = np.stack(
        [
            r * np.cos(el) * np.cos(ph),
            r * np.cos(el) * np.sin(ph),
            r * np.sin(el),
        ],
        axis=-1,
    )
    uv, z = cam.project(pts)
    front = z > 0
    if not front.any():
        return None
    uv = uv[front]
    inside = (
        (uv[:, 0] >= 0)
        & (uv[:, 0] < cam.width)
        & (uv[:, 1] >= 0)
        & (uv[:, 1] < cam.height)
    )
    if not inside.any():
        return None
    box = pixel_box_of_points(uv, cam.frame)
    if box is None:
        return None
    return Cluster2D(box=box, depth=c.min_range)


def clusters_to_2d(
    clusters: list[Cluster3D], ri: RangeImage, cam: CameraModel
) -> list[Cluster2D]:
    out = []
    for c in clusters:
        c2 = project_cluster(c, ri, cam)
        if c2 is not None:
            out.append(c2)
    return out
