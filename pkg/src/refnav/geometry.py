"""Camera model, oriented-box projection, occlusion, and the 36-view grid.

Everything here is pure geometry: no environment access, no randomness.
World coordinates are metric with +z up. The camera frame is right-handed
with +z forward and +y up (which puts +x on the camera's left); pixel
coordinates follow the usual image convention (origin top-left, x right,
y down), so the projection flips both camera axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

HEADING_COUNT = 12
ELEVATION_COUNT = 3
VIEW_COUNT = HEADING_COUNT * ELEVATION_COUNT
ANGLE_STEP = math.pi / 6.0  # 30 degrees between adjacent headings/elevations

Z_NEAR = 0.05  # near-plane vertex cull distance, meters

_ORTHO_TOL = 1e-6


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class OrientedBox3D:
    """3D box: center, three orthonormal axes, and a radius per axis."""

    center: tuple[float, float, float]
    axes: tuple[tuple[float, float, float], ...]
    radii: tuple[float, float, float]

    def __post_init__(self):
        a = np.asarray(self.axes, dtype=float)
        if a.shape != (3, 3):
            raise GeometryError("oriented box needs exactly three axes")
        for i in range(3):
            if abs(np.linalg.norm(a[i]) - 1.0) > _ORTHO_TOL:
                raise GeometryError(f"axis {i} is not unit length")
        for i in range(3):
            for j in range(i + 1, 3):
                if abs(float(np.dot(a[i], a[j]))) > _ORTHO_TOL:
                    raise GeometryError(f"axes {i} and {j} are not orthogonal")
        if any(r <= 0 for r in self.radii):
            raise GeometryError("box radii must be positive")
        if not np.all(np.isfinite(np.asarray(self.center, dtype=float))):
            raise GeometryError("box center must be finite")

    @property
    def center_array(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)

    def to_json(self) -> dict:
        return {
            "center": list(self.center),
            "axes": [list(ax) for ax in self.axes],
            "radii": list(self.radii),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "OrientedBox3D":
        return cls(
            center=tuple(float(v) for v in obj["center"]),
            axes=tuple(tuple(float(v) for v in ax) for ax in obj["axes"]),
            radii=tuple(float(v) for v in obj["radii"]),
        )


@dataclass(frozen=True)
class CameraIntrinsics:
    width: int = 640
    height: int = 480
    vertical_fov: float = math.pi / 3.0

    @property
    def focal(self) -> float:
        return (self.height / 2.0) / math.tan(self.vertical_fov / 2.0)


@dataclass(frozen=True)
class ViewState:
    """One of the 36 discrete camera orientations at a viewpoint."""

    viewpoint: str
    heading: float
    elevation: float
    k: int

    @classmethod
    def from_indices(cls, viewpoint: str, heading_index: int, elevation_index: int) -> "ViewState":
        if not 0 <= heading_index < HEADING_COUNT:
            raise GeometryError(f"heading index {heading_index} out of range")
        if not 0 <= elevation_index < ELEVATION_COUNT:
            raise GeometryError(f"elevation index {elevation_index} out of range")
        return cls(
            viewpoint=viewpoint,
            heading=heading_index * ANGLE_STEP,
            elevation=(elevation_index - 1) * ANGLE_STEP,
            k=HEADING_COUNT * elevation_index + heading_index + 1,
        )


def view_states(viewpoint: str) -> list[ViewState]:
    """All 36 view states at a viewpoint, ordered by index k."""
    return [
        ViewState.from_indices(viewpoint, h, e)
        for e in range(ELEVATION_COUNT)
        for h in range(HEADING_COUNT)
    ]


def view_index_for_direction(direction: np.ndarray) -> int:
    """Index k of the view whose heading/elevation buckets contain a world direction."""
    dx, dy, dz = (float(v) for v in direction)
    heading = math.atan2(dx, dy) % (2 * math.pi)
    h = int(round(heading / ANGLE_STEP)) % HEADING_COUNT
    elevation = math.atan2(dz, math.hypot(dx, dy))
    e = min(max(int(round(elevation / ANGLE_STEP)), -1), 1) + 1
    return HEADING_COUNT * e + h + 1


@dataclass(frozen=True)
class BBox2D:
    """Axis-aligned image box: left-top corner plus width/height, pixels."""

    x: float
    y: float
    w: float
    h: float

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def contains(self, other: "BBox2D") -> bool:
        """Closed containment: other lies entirely inside self."""
        return (
            self.x <= other.x
            and self.y <= other.y
            and other.x2 <= self.x2
            and other.y2 <= self.y2
        )

    def to_list(self) -> list[float]:
        return [self.x, self.y, self.w, self.h]


@dataclass(frozen=True)
class ProjectedObject:
    object_id: str
    bbox: BBox2D
    depth: float
    view: ViewState


@dataclass(frozen=True)
class CameraPose:
    """World-to-camera transform (rotation rows are left/up/forward)."""

    position: tuple[float, float, float]
    rotation: np.ndarray = field(compare=False)

    def apply(self, points: np.ndarray) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        out = (p - np.asarray(self.position, dtype=float)) @ self.rotation.T
        return out[0] if np.asarray(points).ndim == 1 else out


def camera_pose(position, heading: float, elevation: float) -> CameraPose:
    """Pose for a camera at `position` facing `heading` (0 = +y, clockwise
    from above) pitched up by `elevation`."""
    sh, ch = math.sin(heading), math.cos(heading)
    se, ce = math.sin(elevation), math.cos(elevation)
    forward = np.array([sh * ce, ch * ce, se])
    left = np.array([-ch, sh, 0.0])
    up = np.cross(forward, left)
    rotation = np.stack([left, up, forward])
    return CameraPose(position=tuple(float(v) for v in position), rotation=rotation)


_SIGNS = [
    (sx, sy, sz)
    for sx in (-1.0, 1.0)
    for sy in (-1.0, 1.0)
    for sz in (-1.0, 1.0)
]
# reorder to sign-lexicographic with -1 < +1
_SIGNS.sort()


def box_vertices(box: OrientedBox3D) -> np.ndarray:
    """The 8 corners of an oriented box, in sign-lexicographic order."""
    c = box.center_array
    axes = np.asarray(box.axes, dtype=float)
    radii = np.asarray(box.radii, dtype=float)
    return np.array([c + (axes.T * (np.array(s) * radii)).sum(axis=1) for s in _SIGNS])


def project_box(
    box: OrientedBox3D, pose: CameraPose, intr: CameraIntrinsics
) -> tuple[BBox2D, float] | None:
    """Project a box into an image; None when nothing lands in front/in frame.

    Vertices behind the near plane are discarded; the 2D box is the
    axis-aligned hull of the surviving projections clipped to the image
    rectangle. Depth is the camera-space distance to the box center.
    """
    cam = pose.apply(box_vertices(box))
    ahead = cam[:, 2] > Z_NEAR
    if not np.any(ahead):
        return None
    cam = cam[ahead]
    f = intr.focal
    cx, cy = intr.width / 2.0, intr.height / 2.0
    # camera x points left and y up; pixels grow right/down
    px = cx - f * cam[:, 0] / cam[:, 2]
    py = cy - f * cam[:, 1] / cam[:, 2]
    x1 = max(float(px.min()), 0.0)
    y1 = max(float(py.min()), 0.0)
    x2 = min(float(px.max()), float(intr.width))
    y2 = min(float(py.max()), float(intr.height))
    if x1 > x2 or y1 > y2:
        return None
    bbox = BBox2D(x1, y1, x2 - x1, y2 - y1)
    depth = float(np.linalg.norm(pose.apply(box.center_array)))
    return bbox, depth


def occlusion_filter(projections: list[ProjectedObject]) -> list[ProjectedObject]:
    """Drop projections fully covered by a strictly nearer one.

    A projection is occluded when its bbox is contained (closed) in another
    projection's bbox and its depth is strictly larger. Containment is
    checked against the full input set, which makes the filter idempotent.
    """
    out = []
    for p in projections:
        occluded = any(
            q is not p and q.bbox.contains(p.bbox) and p.depth > q.depth
            for q in projections
        )
        if not occluded:
            out.append(p)
    return out


def iou(a: BBox2D, b: BBox2D) -> float:
    """Intersection over union of two image boxes; 0 when the union is empty."""
    ix = max(0.0, min(a.x2, b.x2) - max(a.x, b.x))
    iy = max(0.0, min(a.y2, b.y2) - max(a.y, b.y))
    inter = ix * iy
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union
