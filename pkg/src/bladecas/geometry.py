"""Camera model, frame-labeled rigid transforms, and AR projection math.

Conventions:
  - WORLD is the fixed workstation frame (meters).
  - OBJECT is the frame of the part being repaired.
  - Cameras live in frames named ``CAMERA:<id>``; the extrinsic transform of a
    camera maps WORLD -> CAMERA:<id>.
  - Image coordinates (u, v) are pixels, u right, v down, origin top-left.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

WORLD = "WORLD"
OBJECT = "OBJECT"

# Rotation matrices with drift above this are re-orthonormalized on construction.
_ROT_REPAIR_THRESHOLD = 1e-7
# Beyond this the input is considered not a rotation at all.
_ROT_REJECT_THRESHOLD = 1e-3


class GeometryError(ValueError):
    """Base class for geometry contract violations."""


class FrameMismatchError(GeometryError):
    """Raised when a transform chain or point is in the wrong frame."""


class BehindCameraError(GeometryError):
    """Raised when projecting a point with non-positive camera-frame depth."""


class DegenerateDepthError(GeometryError):
    """Raised when the camera-frame depth is too close to zero to divide by."""


def camera_frame(camera_id: str) -> str:
    return f"CAMERA:{camera_id}"


def _rotation_drift(r: np.ndarray) -> float:
    return max(
        float(np.abs(r.T @ r - np.eye(3)).max()),
        abs(float(np.linalg.det(r)) - 1.0),
    )


def nearest_rotation(r: np.ndarray) -> np.ndarray:
    """Project a near-rotation onto SO(3) (polar decomposition via SVD)."""
    u, _, vt = np.linalg.svd(r)
    rot = u @ vt
    if np.linalg.det(rot) < 0:
        u = u.copy()
        u[:, -1] = -u[:, -1]
        rot = u @ vt
    return rot


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics; skew is retained for the general intrinsic matrix."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    skew: float = 0.0

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise GeometryError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if not (self.width > 0 and self.height > 0):
            raise GeometryError(f"image size must be positive, got {self.width}x{self.height}")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise GeometryError(
                f"principal point ({self.cx}, {self.cy}) outside {self.width}x{self.height} image"
            )

    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, self.skew, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )


@dataclass(frozen=True)
class RigidTransform:
    """Rotation + translation mapping points from ``from_frame`` to ``to_frame``."""

    rotation: np.ndarray
    translation: np.ndarray
    from_frame: str
    to_frame: str

    def __post_init__(self):
        if not self.from_frame or not self.to_frame:
            raise GeometryError("frame labels must be non-empty")
        rot = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        trans = np.asarray(self.translation, dtype=float).reshape(3)
        if not np.all(np.isfinite(rot)) or not np.all(np.isfinite(trans)):
            raise GeometryError("transform entries must be finite")
        if np.linalg.det(rot) <= 0:
            raise GeometryError("rotation has non-positive determinant (reflection or degenerate)")
        drift = _rotation_drift(rot)
        if drift > _ROT_REJECT_THRESHOLD:
            raise GeometryError(f"matrix is not a rotation (orthonormality drift {drift:.2e})")
        if drift > _ROT_REPAIR_THRESHOLD:
            rot = nearest_rotation(rot)
        rot.flags.writeable = False
        trans.flags.writeable = False
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", trans)

    @classmethod
    def identity(cls, frame: str = WORLD) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3), from_frame=frame, to_frame=frame)

    @classmethod
    def from_translation(cls, x: float, y: float, z: float, from_frame: str = WORLD,
                         to_frame: str = WORLD) -> "RigidTransform":
        return cls(np.eye(3), np.array([x, y, z], dtype=float), from_frame, to_frame)

    def matrix(self) -> np.ndarray:
        """4x4 homogeneous matrix."""
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform an (N, 3) or (3,) array of points (no frame checking)."""
        pts = np.asarray(points, dtype=float)
        return pts @ self.rotation.T + self.translation

    def relabel(self, from_frame: str, to_frame: str) -> "RigidTransform":
        return RigidTransform(self.rotation, self.translation, from_frame, to_frame)


@dataclass(frozen=True)
class Pixel:
    u: float
    v: float

    def __post_init__(self):
        if not (math.isfinite(self.u) and math.isfinite(self.v)):
            raise GeometryError(f"pixel coordinates must be finite, got ({self.u}, {self.v})")


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float
    frame: str = WORLD

    def __post_init__(self):
        if not all(math.isfinite(c) for c in (self.x, self.y, self.z)):
            raise GeometryError(f"point coordinates must be finite, got {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


def rot_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Chain two transforms: the result maps b.from_frame to a.to_frame.

    Requires a.from_frame == b.to_frame, i.e. ``a`` picks up where ``b`` ends.
    """
    if a.from_frame != b.to_frame:
        raise FrameMismatchError(
            f"cannot compose: left expects points in {a.from_frame!r}, "
            f"right produces points in {b.to_frame!r}"
        )
    return RigidTransform(
        a.rotation @ b.rotation,
        a.rotation @ b.translation + a.translation,
        from_frame=b.from_frame,
        to_frame=a.to_frame,
    )


def invert(t: RigidTransform) -> RigidTransform:
    rt = t.rotation.T
    return RigidTransform(rt, -rt @ t.translation, from_frame=t.to_frame, to_frame=t.from_frame)


def transform_point(t: RigidTransform, p: Point3) -> Point3:
    if p.frame != t.from_frame:
        raise FrameMismatchError(
            f"point is in frame {p.frame!r} but transform expects {t.from_frame!r}"
        )
    out = t.rotation @ p.as_array() + t.translation
    return Point3(out[0], out[1], out[2], frame=t.to_frame)


def project(k: CameraIntrinsics, p: Point3) -> Pixel:
    """Pinhole projection of a camera-frame point.

    The homogeneous scale equals the camera-frame depth z and cancels in the
    divide, which is why scaling (x, y, z) by any positive factor leaves the
    pixel unchanged.
    """
    if not p.frame.startswith("CAMERA"):
        raise FrameMismatchError(f"project expects a CAMERA-frame point, got frame {p.frame!r}")
    if p.z <= 0:
        raise BehindCameraError(f"point depth {p.z} is not in front of the camera")
    if p.z < 1e-12:
        raise DegenerateDepthError(f"point depth {p.z} too small to project")
    u = k.fx * p.x / p.z + k.skew * p.y / p.z + k.cx
    v = k.fy * p.y / p.z + k.cy
    return Pixel(u, v)


def ar_project(k: CameraIntrinsics, t_world_cam: RigidTransform, t_obj_world: RigidTransform,
               p: Point3) -> Pixel:
    """Project an OBJECT-frame point into the camera image via the world frame."""
    t_obj_cam = compose(t_world_cam, t_obj_world)
    return project(k, transform_point(t_obj_cam, p))


def project_points(k: CameraIntrinsics, points_cam: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized pinhole projection of (N, 3) camera-frame points.

    Returns (pixels (N, 2), in_front mask); pixels of behind-camera points are NaN.
    """
    pts = np.asarray(points_cam, dtype=float).reshape(-1, 3)
    z = pts[:, 2]
    in_front = z > 1e-12
    safe_z = np.where(in_front, z, 1.0)
    u = k.fx * pts[:, 0] / safe_z + k.skew * pts[:, 1] / safe_z + k.cx
    v = k.fy * pts[:, 1] / safe_z + k.cy
    uv = np.stack([u, v], axis=1)
    uv[~in_front] = np.nan
    return uv, in_front


@dataclass(frozen=True)
class Camera:
    """One physical camera: intrinsics plus the static WORLD -> CAMERA extrinsic."""

    camera_id: str
    intrinsics: CameraIntrinsics
    t_world_cam: RigidTransform = field(repr=False)

    def __post_init__(self):
        expected = camera_frame(self.camera_id)
        if self.t_world_cam.from_frame != WORLD or self.t_world_cam.to_frame != expected:
            raise FrameMismatchError(
                f"camera {self.camera_id!r} extrinsic must map {WORLD} -> {expected}, got "
                f"{self.t_world_cam.from_frame} -> {self.t_world_cam.to_frame}"
            )

    @property
    def origin_world(self) -> np.ndarray:
        """Camera center expressed in WORLD coordinates."""
        return invert(self.t_world_cam).translation


def load_camera_config(path) -> dict[str, Camera]:
    """Read a camera configuration file.

    One record per line: ``id fx fy cx cy skew width height`` followed by the
    WORLD -> CAMERA transform as 12 row-major numbers (9 rotation entries then
    3 translation entries, meters). ``#`` starts a comment.
    """
    cameras: dict[str, Camera] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 20:
                raise GeometryError(
                    f"{path}:{lineno}: expected 20 fields (id + 7 intrinsics + 12 extrinsics), "
                    f"got {len(fields)}"
                )
            cam_id = fields[0]
            if cam_id in cameras:
                raise GeometryError(f"{path}:{lineno}: duplicate camera id {cam_id!r}")
            fx, fy, cx, cy, skew = (float(x) for x in fields[1:6])
            width, height = int(fields[6]), int(fields[7])
            nums = [float(x) for x in fields[8:20]]
            rot = np.array(nums[:9]).reshape(3, 3)
            trans = np.array(nums[9:12])
            intr = CameraIntrinsics(fx=fx, fy=fy, cx=cx, cy=cy, width=width, height=height,
                                    skew=skew)
            ext = RigidTransform(rot, trans, from_frame=WORLD, to_frame=camera_frame(cam_id))
            cameras[cam_id] = Camera(cam_id, intr, ext)
    return cameras


def save_camera_config(path, cameras: dict[str, Camera]) -> None:
    lines = ["# id fx fy cx cy skew width height  r00..r22 tx ty tz"]
    for cam_id in sorted(cameras):
        cam = cameras[cam_id]
        k = cam.intrinsics
        ext = cam.t_world_cam
        nums = list(ext.rotation.reshape(-1)) + list(ext.translation)
        lines.append(
            f"{cam_id} {k.fx:.9g} {k.fy:.9g} {k.cx:.9g} {k.cy:.9g} {k.skew:.9g} "
            f"{k.width} {k.height}  " + " ".join(f"{x:.17g}" for x in nums)
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
