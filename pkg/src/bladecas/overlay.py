"""Screen-space AR overlay frames: projected defect, zone, and thickness layers.

All geometry lives on the object in OBJECT-frame meters; projection runs
through the full object -> world -> camera chain. Points behind the camera are
dropped per primitive, and polylines are clipped to the image rectangle
segment by segment.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from bladecas.geometry import Camera, RigidTransform, compose, project_points


class OverlayLayer(str, enum.Enum):
    DEFECTS = "Defects"
    ZONES = "Zones"
    WALL_THICKNESS = "WallThickness"


ALL_LAYERS = frozenset(OverlayLayer)


@dataclass(frozen=True)
class PolylinePrimitive:
    layer: OverlayLayer
    points: tuple[tuple[float, float], ...]
    label: str = ""
    highlighted: bool = False


@dataclass(frozen=True)
class LabeledPoint:
    layer: OverlayLayer
    u: float
    v: float
    label: str = ""


@dataclass(frozen=True)
class AROverlayFrame:
    camera_id: str
    pose_time: float
    stale: bool
    polylines: tuple[PolylinePrimitive, ...] = ()
    points: tuple[LabeledPoint, ...] = ()

    def layer_polylines(self, layer: OverlayLayer) -> list[PolylinePrimitive]:
        return [p for p in self.polylines if p.layer == layer]

    def layer_points(self, layer: OverlayLayer) -> list[LabeledPoint]:
        return [p for p in self.points if p.layer == layer]


@dataclass(frozen=True)
class AssetSnapshot:
    """The slice of one twin needed to draw overlays."""

    serial: str
    open_defects: tuple[dict, ...]
    zones: dict[str, dict]
    measurements: tuple[dict, ...] = ()


def _clip_segment(p0, p1, width, height):
    """Liang-Barsky clip of one segment to [0, width] x [0, height]."""
    x0, y0 = p0
    x1, y1 = p1
    dx, dy = x1 - x0, y1 - y0
    t0, t1 = 0.0, 1.0
    for p, q in ((-dx, x0), (dx, width - x0), (-dy, y0), (dy, height - y0)):
        if p == 0.0:
            if q < 0.0:
                return None
            continue
        r = q / p
        if p < 0.0:
            if r > t1:
                return None
            t0 = max(t0, r)
        else:
            if r < t0:
                return None
            t1 = min(t1, r)
    return ((x0 + t0 * dx, y0 + t0 * dy), (x0 + t1 * dx, y0 + t1 * dy))


def clip_polyline(points: list[tuple[float, float]], width: float,
                  height: float) -> list[list[tuple[float, float]]]:
    """Clip a polyline to the image rectangle, splitting where it exits."""
    runs: list[list[tuple[float, float]]] = []
    current: list[tuple[float, float]] = []
    for p0, p1 in zip(points, points[1:]):
        seg = _clip_segment(p0, p1, width, height)
        if seg is None:
            if len(current) >= 2:
                runs.append(current)
            current = []
            continue
        a, b = seg
        if current and current[-1] == a:
            current.append(b)
        else:
            if len(current) >= 2:
                runs.append(current)
            current = [a, b]
    if len(current) >= 2:
        runs.append(current)
    return runs


def _project_polyline(points_obj: np.ndarray, t_obj_cam: RigidTransform,
                      camera: Camera) -> list[tuple[float, float]]:
    """Pixel coordinates of a polyline; behind-camera vertices are dropped."""
    cam_pts = t_obj_cam.apply(points_obj)
    uv, in_front = project_points(camera.intrinsics, cam_pts)
    return [(float(u), float(v)) for (u, v), ok in zip(uv, in_front) if ok]


def defect_centroid(defect: dict) -> np.ndarray:
    return np.asarray(defect["polyline_m"], dtype=float).mean(axis=0)


def compute_overlays(pose: RigidTransform, camera: Camera, asset: AssetSnapshot,
                     layers: frozenset[OverlayLayer] | set[OverlayLayer],
                     selected_defect_id: str | None,
                     nearby_radius_mm: float = 30.0,
                     pose_time: float = 0.0,
                     stale: bool = False) -> AROverlayFrame:
    """Project the enabled layers for one camera under the given object pose."""
    t_obj_cam = compose(camera.t_world_cam, pose)
    width = float(camera.intrinsics.width)
    height = float(camera.intrinsics.height)
    polylines: list[PolylinePrimitive] = []
    points: list[LabeledPoint] = []

    selected = next((d for d in asset.open_defects if d["id"] == selected_defect_id),
                    None)

    if OverlayLayer.DEFECTS in layers:
        for defect in asset.open_defects:
            px = _project_polyline(np.asarray(defect["polyline_m"], dtype=float),
                                   t_obj_cam, camera)
            for run in clip_polyline(px, width, height):
                polylines.append(PolylinePrimitive(
                    layer=OverlayLayer.DEFECTS,
                    points=tuple(run),
                    label=f"{defect['id']} {defect['kind']} {defect['length_mm']} mm",
                    highlighted=defect["id"] == selected_defect_id,
                ))

    if OverlayLayer.ZONES in layers and selected is not None:
        zone = asset.zones.get(selected["zone_id"])
        if zone is not None:
            px = _project_polyline(np.asarray(zone["boundary_m"], dtype=float),
                                   t_obj_cam, camera)
            for run in clip_polyline(px, width, height):
                polylines.append(PolylinePrimitive(
                    layer=OverlayLayer.ZONES,
                    points=tuple(run),
                    label=f"{zone['id']} {zone['name']} "
                          f"max removal {zone['max_removal_mm']} mm",
                ))

    if OverlayLayer.WALL_THICKNESS in layers and selected is not None:
        center = defect_centroid(selected)
        radius_m = nearby_radius_mm / 1000.0
        for spot in asset.measurements:
            loc = np.asarray(spot["location_m"], dtype=float)
            if np.linalg.norm(loc - center) > radius_m:
                continue
            px = _project_polyline(loc[None, :], t_obj_cam, camera)
            if not px:
                continue
            u, v = px[0]
            if 0.0 <= u <= width and 0.0 <= v <= height:
                points.append(LabeledPoint(
                    layer=OverlayLayer.WALL_THICKNESS, u=u, v=v,
                    label=f"{spot['spot_id']} {spot['thickness_mm']} mm"))

    return AROverlayFrame(camera_id=camera.camera_id, pose_time=pose_time,
                          stale=stale, polylines=tuple(polylines),
                          points=tuple(points))
