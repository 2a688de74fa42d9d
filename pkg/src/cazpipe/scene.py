"""Synthetic world model and sensor simulation.

A scene is a list of axis-aligned 3D boxes in the vehicle frame
(x forward, y left, z up).  From it we render a LiDAR range image by
ray casting and produce camera-frame ground-truth boxes by projecting
box corners through a pinhole model.  This stands in for a real
driving dataset so the rest of the pipeline is testable at desk scale.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .geom import PixelBox

# "no return" beams carry +inf so a zero range can never be mistaken for one
NO_RETURN = math.inf


class SceneFormatError(ValueError):
    """Malformed scene or config document; message names the offending field."""


@dataclass(frozen=True)
class SceneObject:
    id: str
    center: tuple[float, float, float]
    extent: tuple[float, float, float]
    class_label: str = "vehicle"

    def __post_init__(self):
        if min(self.extent) <= 0:
            raise ValueError(f"object {self.id}: extent components must be > 0")

    def corners(self) -> np.ndarray:
        """(8, 3) array of the box corners in the vehicle frame."""
        c = np.asarray(self.center, dtype=float)
        h = np.asarray(self.extent, dtype=float) / 2.0
        signs = np.array(
            [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)],
            dtype=float,
        )
        return c + signs * h


@dataclass(frozen=True)
class LidarSpec:
    n_rings: int
    n_azimuth: int
    vertical_fov_deg: float
    horizontal_fov_deg: float = 360.0
    max_range_m: float = 75.0

    def __post_init__(self):
        if self.n_rings < 2 or self.n_azimuth < 2:
            raise ValueError("n_rings and n_azimuth must each be >= 2")
        if self.max_range_m <= 0:
            raise ValueError("max_range_m must be > 0")


@dataclass
class RangeImage:
    """LiDAR scan on a (ring x azimuth) grid.

    ranges[i, j] is the measured range in meters or NO_RETURN.  Row 0 is
    the lowest ring.  azimuth/elevation hold per-column / per-row beam
    angles in radians (azimuth 0 = straight ahead, positive to the left).
    """

    ranges: np.ndarray
    azimuth: np.ndarray
    elevation: np.ndarray
    alpha_h: float
    alpha_v: float
    max_range: float

    @property
    def n_rings(self) -> int:
        return self.ranges.shape[0]

    @property
    def n_azimuth(self) -> int:
        return self.ranges.shape[1]

    def directions(self) -> np.ndarray:
        """(n_rings, n_azimuth, 3) unit beam directions in the vehicle frame."""
        el = self.elevation[:, None]
        az = self.azimuth[None, :]
        cos_el = np.cos(el)
        return np.stack(
            [
                np.broadcast_to(cos_el * np.cos(az), self.ranges.shape),
                np.broadcast_to(cos_el * np.sin(az), self.ranges.shape),
                np.broadcast_to(np.sin(el) * np.ones_like(az), self.ranges.shape),
            ],
            axis=-1,
        )

    def point(self, ring: int, az: int) -> np.ndarray:
        """3D point for one finite-range cell."""
        r = self.ranges[ring, az]
        el, ph = self.elevation[ring], self.azimuth[az]
        return r * np.array(
            [math.cos(el) * math.cos(ph), math.cos(el) * math.sin(ph), math.sin(el)]
        )


def _forward_camera_extrinsic() -> np.ndarray:
    # vehicle x -> camera z, vehicle -y -> camera x, vehicle -z -> camera y
    m = np.zeros((4, 4))
    m[0, 1] = -1.0
    m[1, 2] = -1.0
    m[2, 0] = 1.0
    m[3, 3] = 1.0
    return m


@dataclass(frozen=True)
class CameraModel:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    hfov_deg: float = 50.4
    extrinsic: tuple = field(default_factory=lambda: tuple(map(tuple, _forward_camera_extrinsic())))

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be > 0")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    @property
    def frame(self) -> tuple[int, int]:
        return self.width, self.height

    def _matrix(self) -> np.ndarray:
        return np.asarray(self.extrinsic, dtype=float)

    def project(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Project (N, 3) vehicle-frame points.

        Returns (uv, z_cam).  Points with z_cam <= 0 are behind the camera
        plane and their uv values are meaningless.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        m = self._matrix()
        cam = pts @ m[:3, :3].T + m[:3, 3]
        z = cam[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = self.fx * cam[:, 0] / z + self.cx
            v = self.fy * cam[:, 1] / z + self.cy
        return np.stack([u, v], axis=-1), z

    def back_project(self, u: float, v: float, z_cam: float) -> np.ndarray:
        """Invert project() for one pixel at a known camera-frame depth."""
        cam = np.array(
            [(u - self.cx) / self.fx * z_cam, (v - self.cy) / self.fy * z_cam, z_cam]
        )
        m = self._matrix()
        return m[:3, :3].T @ (cam - m[:3, 3])


def render_range_image(scene: list[SceneObject], lidar: LidarSpec) -> RangeImage:
    """Ray-cast the scene into a range image.

    Each beam reports the nearest axis-aligned-box entry distance within
    max_range, or NO_RETURN.  Deterministic for a given scene.
    """
    hfov = math.radians(lidar.horizontal_fov_deg)
    vfov = math.radians(lidar.vertical_fov_deg)
    alpha_h = hfov / lidar.n_azimuth
    alpha_v = vfov / (lidar.n_rings - 1)
    azimuth = -hfov / 2 + (np.arange(lidar.n_azimuth) + 0.5) * alpha_h
    elevation = -vfov / 2 + np.arange(lidar.n_rings) * alpha_v

    ri = RangeImage(
        ranges=np.full((lidar.n_rings, lidar.n_azimuth), NO_RETURN),
        azimuth=azimuth,
        elevation=elevation,
        alpha_h=alpha_h,
        alpha_v=alpha_v,
        max_range=lidar.max_range_m,
    )
    if not scene:
        return ri

    dirs = ri.directions()  # (R, A, 3)
    ranges = ri.ranges
    for obj in scene:
        lo = np.asarray(obj.center) - np.asarray(obj.extent) / 2.0
        hi = np.asarray(obj.center) + np.asarray(obj.extent) / 2.0
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = lo / dirs
            t2 = hi / dirs
        t_near = np.minimum(t1, t2).max(axis=-1)
        t_far = np.maximum(t1, t2).min(axis=-1)
        hit = (t_far >= t_near) & (t_near > 0) & (t_near <= lidar.max_range_m)
        ranges[hit] = np.minimum(ranges[hit], t_near[hit])
    return ri


def pixel_box_of_points(uv: np.ndarray, frame: tuple[int, int]) -> PixelBox | None:
    """Tight closed-open pixel bound of projected points, clipped to the frame.

    Returns None when the clipped box is empty.
    """
    u, v = uv[:, 0], uv[:, 1]
    x0 = int(math.floor(u.min()))
    y0 = int(math.floor(v.min()))
    x1 = int(math.floor(u.max())) + 1
    y1 = int(math.floor(v.max())) + 1
    w, h = frame
    x0, y0 = max(0, x0), max(0, y0)
    x1, y1 = min(w, x1), min(h, y1)
    if x0 >= x1 or y0 >= y1:
        return None
    return PixelBox(x0, y0, x1, y1)


def ground_truth_boxes(
    scene: list[SceneObject], cam: CameraModel, max_range: float = 75.0
) -> list[tuple[PixelBox, float, str]]:
    """Project each object's 8 corners; return (box, depth, class) triples.

    depth is the vehicle-frame distance of the nearest corner in front of
    the camera.  Objects fully behind the camera, outside the image, or
    farther than max_range are omitted.
    """
    out = []
    for obj in scene:
        corners = obj.corners()
        uv, z = cam.project(corners)
        front = z > 0
        if not front.any():
            continue
        depth = float(np.linalg.norm(corners[front], axis=1).min())
        if depth > max_range:
            continue
        box = pixel_box_of_points(uv[front], cam.frame)
        if box is None:
            continue
        # at least one corner must actually land inside the image
        u, v = uv[front, 0], uv[front, 1]
        inside = (u >= 0) & (u < cam.width) & (v >= 0) & (v < cam.height)
        if not inside.any():
            continue
        out.append((box, depth, obj.class_label))
    return out


def render_camera_image(scene: list[SceneObject], cam: CameraModel) -> np.ndarray:
    """Flat-shaded synthetic camera frame, (H, W, 3) uint8.

    Content only matters for visualization and the null-background stub
    detector; geometry comes from ground_truth_boxes.
    """
    img = np.full((cam.height, cam.width, 3), 40, dtype=np.uint8)
    img[cam.height // 2 :, :] = 70  # crude ground half
    boxes = ground_truth_boxes(scene, cam, max_range=math.inf)
    # draw far to near so closer objects occlude
    for box, depth, _ in sorted(boxes, key=lambda t: -t[1]):
        rng = np.random.default_rng(abs(hash((box.x_min, box.y_min))) % (2**32))
        color = rng.integers(90, 255, size=3, dtype=np.uint8)
        img[box.y_min : box.y_max, box.x_min : box.x_max] = color
    return img


# --- scene file I/O -------------------------------------------------------


@dataclass
class Scene:
    lidar: LidarSpec
    camera: CameraModel
    objects: list[SceneObject]
    ego_speed_mps: float


def _require(doc: dict, key: str, ctx: str):
    if key not in doc:
        raise SceneFormatError(f"{ctx}.{key}: missing required field")
    return doc[key]


def scene_from_dict(doc: dict) -> Scene:
    ld = _require(doc, "lidar", "scene")
    lidar = LidarSpec(
        n_rings=int(_require(ld, "n_rings", "scene.lidar")),
        n_azimuth=int(_require(ld, "n_azimuth", "scene.lidar")),
        vertical_fov_deg=float(_require(ld, "vertical_fov_deg", "scene.lidar")),
        horizontal_fov_deg=float(ld.get("horizontal_fov_deg", 360.0)),
        max_range_m=float(ld.get("max_range_m", 75.0)),
    )
    cd = _require(doc, "camera", "scene")
    extr = cd.get("extrinsic")
    if extr is not None:
        extr = np.asarray(extr, dtype=float).reshape(4, 4)
    else:
        extr = _forward_camera_extrinsic()
    camera = CameraModel(
        fx=float(_require(cd, "fx", "scene.camera")),
        fy=float(_require(cd, "fy", "scene.camera")),
        cx=float(_require(cd, "cx", "scene.camera")),
        cy=float(_require(cd, "cy", "scene.camera")),
        width=int(_require(cd, "width", "scene.camera")),
        height=int(_require(cd, "height", "scene.camera")),
        hfov_deg=float(cd.get("hfov_deg", 50.4)),
        extrinsic=tuple(map(tuple, extr)),
    )
    objects = []
    for i, od in enumerate(doc.get("objects", [])):
        ctx = f"scene.objects[{i}]"
        center = _require(od, "center", ctx)
        extent = _require(od, "extent", ctx)
        if len(center) != 3:
            raise SceneFormatError(f"{ctx}.center: expected 3 components")
        if len(extent) != 3 or min(extent) <= 0:
            raise SceneFormatError(f"{ctx}.extent: expected 3 positive components")
        objects.append(
            SceneObject(
                id=str(od.get("id", f"obj{i}")),
                center=tuple(float(x) for x in center),
                extent=tuple(float(x) for x in extent),
                class_label=str(od.get("class", "vehicle")),
            )
        )
    return Scene(
        lidar=lidar,
        camera=camera,
        objects=objects,
        ego_speed_mps=float(doc.get("ego_speed_mps", 0.0)),
    )


def load_scene(path) -> Scene:
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise SceneFormatError(f"{path}: invalid JSON: {e}") from e
    return scene_from_dict(doc)
