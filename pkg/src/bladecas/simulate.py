"""Synthetic stand-ins for the workstation hardware.

Replaces the two depth cameras (ray-cast renders of a triangle mesh), the
barcode scanner (scripted scan events), and the operator's hands (scripted
presence events). A scenario script drives everything and emits an ordered
event stream; a frame of clouds and detections fires on each falling edge of
hand presence.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from bladecas.cloud import PointCloud
from bladecas.geometry import (
    OBJECT,
    WORLD,
    Camera,
    RigidTransform,
    compose,
    invert,
    project_points,
)
from bladecas.mesh import TriangleMesh
from bladecas.pipeline import Detection2D

_RAY_EPS = 1e-12


class SimulationError(ValueError):
    pass


class NoDetectionError(SimulationError):
    """The object is fully outside a camera's view."""


def render_cloud(mesh: TriangleMesh, t_obj_world: RigidTransform, camera: Camera,
                 pixel_stride: int = 4) -> PointCloud:
    """Ray-cast a depth image and return the hit points as a WORLD-frame cloud.

    One ray per ``pixel_stride``-th pixel; each keeps its nearest ray-triangle
    intersection (barycentric determinant test). Misses are omitted. Triangles
    not entirely in front of the camera are skipped.
    """
    if pixel_stride < 1:
        raise SimulationError(f"pixel_stride must be >= 1, got {pixel_stride}")
    k = camera.intrinsics
    t_obj_cam = compose(camera.t_world_cam, t_obj_world)
    verts = t_obj_cam.apply(mesh.vertices)
    tris = mesh.triangles

    us = np.arange(0, k.width, pixel_stride)
    vs = np.arange(0, k.height, pixel_stride)
    n_u, n_v = len(us), len(vs)
    depth = np.full((n_v, n_u), np.inf)

    in_front = verts[:, 2] > _RAY_EPS
    tri_ok = in_front[tris].all(axis=1)
    if not tri_ok.any():
        return PointCloud(np.empty((0, 3)), frame=WORLD)

    uv_all, _ = project_points(k, verts)
    inv_stride = 1.0 / pixel_stride

    for t in tris[tri_ok]:
        v0, v1, v2 = verts[t[0]], verts[t[1]], verts[t[2]]
        tri_uv = uv_all[t]
        # rays through pixels outside the projected bbox cannot hit (the
        # projection of a positive-depth triangle is its vertices' hull)
        u_lo = max(int(math.ceil(tri_uv[:, 0].min() * inv_stride)), 0)
        u_hi = min(int(math.floor(tri_uv[:, 0].max() * inv_stride)), n_u - 1)
        v_lo = max(int(math.ceil(tri_uv[:, 1].min() * inv_stride)), 0)
        v_hi = min(int(math.floor(tri_uv[:, 1].max() * inv_stride)), n_v - 1)
        if u_lo > u_hi or v_lo > v_hi:
            continue
        uu, vv = np.meshgrid(us[u_lo:u_hi + 1], vs[v_lo:v_hi + 1])
        # ray direction with unit z so the ray parameter equals camera depth
        dirs = np.stack([
            (uu - k.cx - k.skew * (vv - k.cy) / k.fy) / k.fx,
            (vv - k.cy) / k.fy,
            np.ones_like(uu, dtype=float),
        ], axis=-1).reshape(-1, 3)

        e1 = v1 - v0
        e2 = v2 - v0
        pvec = np.cross(dirs, e2)
        det = pvec @ e1
        ok = np.abs(det) > _RAY_EPS
        inv_det = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
        tvec = -v0
        bu = (pvec @ tvec) * inv_det
        qvec = np.cross(tvec, e1)
        bv = (dirs @ qvec) * inv_det
        dist = (qvec @ e2) * inv_det
        hit = ok & (bu >= -_RAY_EPS) & (bv >= -_RAY_EPS) & (bu + bv <= 1.0 + _RAY_EPS) \
            & (dist > _RAY_EPS)
        if not hit.any():
            continue
        block = np.full(dirs.shape[0], np.inf)
        block[hit] = dist[hit]
        block = block.reshape(vv.shape)
        region = depth[v_lo:v_hi + 1, u_lo:u_hi + 1]
        np.minimum(region, block, out=region)

    hit_mask = np.isfinite(depth)
    if not hit_mask.any():
        return PointCloud(np.empty((0, 3)), frame=WORLD)
    vv_idx, uu_idx = np.nonzero(hit_mask)
    z = depth[hit_mask]
    u_px = us[uu_idx].astype(float)
    v_px = vs[vv_idx].astype(float)
    y = (v_px - k.cy) / k.fy * z
    x = ((u_px - k.cx) * z - k.skew * y) / k.fx
    cam_pts = np.stack([x, y, z], axis=1)
    world_pts = invert(camera.t_world_cam).apply(cam_pts)
    return PointCloud(world_pts, frame=WORLD)


def add_noise(cloud: PointCloud, sigma: float, seed: int) -> PointCloud:
    """Isotropic zero-mean Gaussian jitter, deterministic per seed."""
    if sigma < 0:
        raise SimulationError(f"noise sigma must be non-negative, got {sigma}")
    if sigma == 0 or len(cloud) == 0:
        return cloud
    rng = np.random.default_rng(seed)
    jitter = rng.normal(scale=sigma, size=cloud.points.shape)
    return PointCloud(cloud.points + jitter, frame=cloud.frame, normals=cloud.normals)


def synth_detection(mesh: TriangleMesh, t_obj_world: RigidTransform, camera: Camera,
                    margin_px: float = 8.0) -> Detection2D:
    """Bounding box of the projected mesh vertices, padded and clamped."""
    k = camera.intrinsics
    t_obj_cam = compose(camera.t_world_cam, t_obj_world)
    cam_pts = t_obj_cam.apply(mesh.vertices)
    uv, in_front = project_points(k, cam_pts)
    if not in_front.any():
        raise NoDetectionError(f"object fully behind camera {camera.camera_id}")
    uv = uv[in_front]
    u_min = float(uv[:, 0].min()) - margin_px
    u_max = float(uv[:, 0].max()) + margin_px
    v_min = float(uv[:, 1].min()) - margin_px
    v_max = float(uv[:, 1].max()) + margin_px
    u_min, u_max = max(u_min, 0.0), min(u_max, float(k.width))
    v_min, v_max = max(v_min, 0.0), min(v_max, float(k.height))
    if u_min >= u_max or v_min >= v_max:
        raise NoDetectionError(f"object outside the image of camera {camera.camera_id}")
    return Detection2D(camera.camera_id, u_min, v_min, u_max, v_max)


# --- scenario scripting ----------------------------------------------------

@dataclass(frozen=True)
class ScanEvent:
    serial: str
    time: float

    def __post_init__(self):
        if not self.serial:
            raise SimulationError("scan event needs a non-empty serial")


@dataclass(frozen=True)
class HandPresenceEvent:
    present: bool
    time: float


@dataclass(frozen=True)
class PlaceObject:
    serial: str
    t_obj_world: RigidTransform
    time: float


@dataclass(frozen=True)
class FrameReady:
    time: float
    clouds: dict[str, PointCloud]
    detections: dict[str, Detection2D]
    serial: str


@dataclass(frozen=True)
class ScenarioScript:
    events: tuple
    noise_sigma: float = 0.0
    camera_ids: tuple[str, ...] = ()

    def __post_init__(self):
        times = [e.time for e in self.events]
        if any(b < a for a, b in zip(times, times[1:])):
            raise SimulationError("scenario event times must be non-decreasing")
        if self.noise_sigma < 0:
            raise SimulationError("noise_sigma must be non-negative")


def parse_scenario(text: str) -> ScenarioScript:
    """Parse the line-oriented scenario format.

    Header lines: ``noise_sigma=<m>``, ``cameras=<id,id,...>``. Events:
    ``t=<sec> scan <serial>``, ``t=<sec> place <serial> <12 floats>``,
    ``t=<sec> hands <0|1>``.
    """
    noise_sigma = 0.0
    camera_ids: tuple[str, ...] = ()
    events = []
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("noise_sigma="):
            noise_sigma = float(line.split("=", 1)[1])
            continue
        if line.startswith("cameras="):
            camera_ids = tuple(c.strip() for c in line.split("=", 1)[1].split(",") if c.strip())
            continue
        parts = line.split()
        if not parts[0].startswith("t="):
            raise SimulationError(f"line {lineno}: expected 't=<sec>', got {parts[0]!r}")
        t = float(parts[0][2:])
        kind = parts[1]
        if kind == "scan":
            events.append(ScanEvent(serial=parts[2], time=t))
        elif kind == "hands":
            events.append(HandPresenceEvent(present=parts[2] == "1", time=t))
        elif kind == "place":
            serial = parts[2]
            if len(parts) != 15:
                raise SimulationError(f"line {lineno}: place needs 12 numbers")
            nums = [float(x) for x in parts[3:]]
            pose = RigidTransform(np.array(nums[:9]).reshape(3, 3), np.array(nums[9:]),
                                  from_frame=OBJECT, to_frame=WORLD)
            events.append(PlaceObject(serial=serial, t_obj_world=pose, time=t))
        else:
            raise SimulationError(f"line {lineno}: unknown event {kind!r}")
    return ScenarioScript(events=tuple(events), noise_sigma=noise_sigma,
                          camera_ids=camera_ids)


def load_scenario(path) -> ScenarioScript:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())


@dataclass
class SceneSimulator:
    """Holds the registered meshes and cameras and plays scenario scripts."""

    cameras: dict[str, Camera]
    meshes: dict[str, TriangleMesh]
    serial_models: dict[str, str]   # serial -> mesh key
    pixel_stride: int = 4
    detection_margin_px: float = 8.0
    base_seed: int = 0

    def run_scenario(self, script: ScenarioScript):
        """Yield ScanEvent / HandPresenceEvent / FrameReady in time order.

        A FrameReady fires on each falling edge of hand presence, rendering
        the object pose current at that time. Unknown serials fail upfront.
        """
        for ev in script.events:
            if isinstance(ev, PlaceObject) and ev.serial not in self.serial_models:
                raise SimulationError(f"place event references unknown serial {ev.serial!r}")
        camera_ids = script.camera_ids or tuple(sorted(self.cameras))
        for cam_id in camera_ids:
            if cam_id not in self.cameras:
                raise SimulationError(f"scenario references unknown camera {cam_id!r}")

        placed: PlaceObject | None = None
        hands_present = False
        frame_counter = 0
        for ev in script.events:
            if isinstance(ev, PlaceObject):
                placed = ev
                continue
            if isinstance(ev, ScanEvent):
                yield ev
                continue
            if isinstance(ev, HandPresenceEvent):
                falling = hands_present and not ev.present
                hands_present = ev.present
                yield ev
                if falling and placed is not None:
                    yield self.render_frame(placed.serial, placed.t_obj_world,
                                            camera_ids, script.noise_sigma,
                                            time=ev.time, frame_index=frame_counter)
                    frame_counter += 1

    def render_frame(self, serial: str, t_obj_world: RigidTransform,
                     camera_ids, noise_sigma: float, time: float,
                     frame_index: int = 0) -> FrameReady:
        mesh = self.meshes[self.serial_models[serial]]
        clouds: dict[str, PointCloud] = {}
        detections: dict[str, Detection2D] = {}
        for ci, cam_id in enumerate(camera_ids):
            cam = self.cameras[cam_id]
            cloud = render_cloud(mesh, t_obj_world, cam, self.pixel_stride)
            cloud = add_noise(cloud, noise_sigma,
                              seed=self.base_seed + 1000 * frame_index + ci)
            clouds[cam_id] = cloud
            try:
                detections[cam_id] = synth_detection(mesh, t_obj_world, cam,
                                                     self.detection_margin_px)
            except NoDetectionError:
                continue
        return FrameReady(time=time, clouds=clouds, detections=detections, serial=serial)
