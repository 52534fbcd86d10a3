"""Deterministic fixtures: blade-like mesh, camera rig, and demo twin data.

The real turbine-blade geometry is proprietary, so a parametric stand-in is
generated instead: a cambered, twisted, tapered airfoil extrusion with capped
ends. It is closed, free of symmetries (so a pose is unambiguous), and lands
in the low-thousands triangle range.
"""

from __future__ import annotations

import numpy as np

from bladecas.geometry import WORLD, Camera, CameraIntrinsics, RigidTransform, camera_frame
from bladecas.mesh import TriangleMesh


def _airfoil_profile(n: int, chord: float) -> np.ndarray:
    """Closed 2D profile, counterclockwise, cambered so it has no mirror symmetry."""
    half = n // 2
    # Cosine-spaced chord positions, dense near the leading edge.
    xc = 0.5 * (1.0 - np.cos(np.linspace(0.0, np.pi, half)))
    thickness = 0.12 * (1.0 - xc) * np.sqrt(np.clip(xc, 0.0, 1.0)) * 3.0 + 0.006
    camber = 0.06 * np.sin(np.pi * xc) * (1.0 + 0.4 * xc)
    upper = np.stack([xc, camber + thickness], axis=1)
    lower = np.stack([xc, camber - thickness], axis=1)
    # Walk trailing edge -> leading edge along the upper side, then back along
    # the lower side; skip duplicated endpoints.
    loop = np.vstack([upper[::-1], lower[1:-1]])
    loop = (loop - loop.mean(axis=0)) * chord
    return loop


def _root_profile(n: int, chord: float) -> np.ndarray:
    """Rounded-rectangle root platform, counterclockwise, offset off the span
    axis so a half-turn about the span maps the blade to a visibly different
    shape."""
    theta = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    p = 4.0
    a, b = 0.45 * chord, 0.22 * chord
    x = a * np.sign(np.cos(theta)) * np.abs(np.cos(theta)) ** (2.0 / p)
    y = b * np.sign(np.sin(theta)) * np.abs(np.sin(theta)) ** (2.0 / p)
    return np.stack([x + 0.12 * chord, y + 0.06 * chord], axis=1)


def make_blade_mesh(profile_points: int = 48, rings: int = 24, span: float = 0.20,
                    chord: float = 0.08, twist_deg: float = 25.0,
                    taper: float = 0.35, root_fraction: float = 0.15) -> TriangleMesh:
    """Closed blade-like mesh centered on the OBJECT origin, span along +z.

    A prismatic root platform blends into a cambered, twisted, tapered airfoil;
    the asymmetric combination makes every pose unambiguous.
    """
    profile = _airfoil_profile(profile_points, chord)
    root = _root_profile(len(profile), chord)
    n = len(profile)
    zs = np.linspace(-span / 2.0, span / 2.0, rings)
    fractions = np.linspace(0.0, 1.0, rings)
    vertices = []
    for frac, z in zip(fractions, zs):
        blend = min(frac / root_fraction, 1.0) if root_fraction > 0 else 1.0
        blade_frac = max(frac - root_fraction, 0.0) / (1.0 - root_fraction)
        angle = np.radians(twist_deg) * blade_frac
        scale = 1.0 - taper * blade_frac
        c, s = np.cos(angle), np.sin(angle)
        ring = profile * scale
        rotated = np.stack([c * ring[:, 0] - s * ring[:, 1],
                            s * ring[:, 0] + c * ring[:, 1]], axis=1)
        mixed = blend * rotated + (1.0 - blend) * root
        vertices.append(np.column_stack([mixed, np.full(n, z)]))
    verts = np.vstack(vertices)

    tris = []
    for j in range(rings - 1):
        base0 = j * n
        base1 = (j + 1) * n
        for i in range(n):
            i2 = (i + 1) % n
            tris.append([base0 + i, base0 + i2, base1 + i2])
            tris.append([base0 + i, base1 + i2, base1 + i])
    # End caps: fan from the ring centroid (profile is star-shaped from it).
    bottom_center = len(verts)
    top_center = len(verts) + 1
    verts = np.vstack([verts, vertices[0].mean(axis=0), vertices[-1].mean(axis=0)])
    top_base = (rings - 1) * n
    for i in range(n):
        i2 = (i + 1) % n
        tris.append([bottom_center, i2, i])
        tris.append([top_center, top_base + i, top_base + i2])
    return TriangleMesh(verts, np.array(tris, dtype=np.int64))


def look_at_extrinsic(camera_id: str, position, target, up_hint=(0.0, 1.0, 0.0)
                      ) -> RigidTransform:
    """WORLD -> CAMERA transform for a camera at ``position`` looking at ``target``.

    Computer-vision convention: camera x right, y down, z forward (into scene).
    """
    pos = np.asarray(position, dtype=float)
    fwd = np.asarray(target, dtype=float) - pos
    fwd = fwd / np.linalg.norm(fwd)
    x = np.cross(fwd, np.asarray(up_hint, dtype=float))
    x = x / np.linalg.norm(x)
    y = np.cross(fwd, x)
    rot = np.stack([x, y, fwd])
    return RigidTransform(rot, -rot @ pos, from_frame=WORLD, to_frame=camera_frame(camera_id))


def make_workstation_cameras(width: int = 1280, height: int = 720,
                             focal: float = 700.0) -> dict[str, Camera]:
    """Two fixed depth cameras above the work area, aimed at the table center."""
    intr = CameraIntrinsics(fx=focal, fy=focal, cx=width / 2.0, cy=height / 2.0,
                            width=width, height=height)
    rigs = {
        "cam1": ((0.0, 0.0, 1.1), (0.0, 0.0, 0.0)),
        "cam2": ((0.7, -0.5, 0.9), (0.0, 0.0, 0.0)),
    }
    cameras = {}
    for cam_id, (pos, target) in rigs.items():
        cameras[cam_id] = Camera(cam_id, intr, look_at_extrinsic(cam_id, pos, target))
    return cameras


STUDY_SERIALS = ("BLD-0001", "BLD-0002", "BLD-0003")
BLADE_MODEL_ID = "blade-a"


def _surface_polyline(mesh: TriangleMesh, ring: int, start: int, count: int,
                      profile_points: int = 48) -> list[list[float]]:
    base = ring * profile_points
    idx = [base + (start + i) % profile_points for i in range(count)]
    return [[float(c) for c in mesh.vertices[i]] for i in idx]


def _ring_boundary(mesh: TriangleMesh, ring: int, profile_points: int = 48,
                   stride: int = 4) -> list[list[float]]:
    base = ring * profile_points
    pts = [mesh.vertices[base + i] for i in range(0, profile_points, stride)]
    pts.append(pts[0])
    return [[float(c) for c in p] for p in pts]


def make_study_assets(mesh: TriangleMesh | None = None) -> list[dict]:
    """Twin documents for the three-blade study task: one open defect each."""
    mesh = mesh if mesh is not None else make_blade_mesh()
    zone_specs = [
        ("Z1", "root", 2.5, 4),
        ("Z2", "mid-span", 1.2, 11),
        ("Z3", "tip", 0.6, 19),
    ]
    zones = [
        {"id": zid, "name": name, "max_removal_mm": limit,
         "boundary_m": _ring_boundary(mesh, ring)}
        for zid, name, limit, ring in zone_specs
    ]
    defect_specs = {
        "BLD-0001": ("D1", "crack", 12.5, "Z2", "hairline crack near mid-span", 11, 6),
        "BLD-0002": ("D1", "dent", 8.0, "Z1", "impact dent at the root fillet", 4, 20),
        "BLD-0003": ("D1", "erosion", 17.0, "Z3", "leading-edge erosion patch", 19, 33),
    }
    spots = []
    for si, ring in enumerate((3, 8, 13, 18, 21)):
        v = mesh.vertices[ring * 48 + 7 * si % 48]
        spots.append({"spot_id": f"W{si + 1}", "location_m": [float(c) for c in v],
                      "thickness_mm": round(2.0 + 0.35 * si, 2)})
    assets = []
    for serial in STUDY_SERIALS:
        did, kind, length, zone_id, comment, ring, start = defect_specs[serial]
        assets.append({
            "serial": serial,
            "model_id": BLADE_MODEL_ID,
            "submodels": {
                "defects": {"defects": [{
                    "id": did, "kind": kind, "length_mm": length, "status": "open",
                    "zone_id": zone_id, "comment": comment,
                    "polyline_m": _surface_polyline(mesh, ring, start, 5),
                }]},
                "zones": {"zones": zones},
                "wall_thickness": {"measurements": spots},
                "documentation": {"records": []},
            },
        })
    return assets


STUDY_SCENARIO = """\
# Three-blade repair task: scan, place, hands leave -> frame.
# Each blade lies flat on the table at its own yaw and offset.
noise_sigma=0.0005
cameras=cam1,cam2
t=0.0 scan BLD-0001
t=1.0 place BLD-0001 0.9689124217106447 0 -0.2474039592545229 -0.2474039592545229 0 -0.9689124217106447 0 1 0 0.02 0.01 0.04
t=2.0 hands 1
t=5.0 hands 0
t=60.0 scan BLD-0002
t=61.0 place BLD-0002 0.9210609940028851 0 0.3894183423086505 0.3894183423086505 0 -0.9210609940028851 0 1 0 -0.04 0.03 0.04
t=62.0 hands 1
t=65.0 hands 0
t=120.0 scan BLD-0003
t=121.0 place BLD-0003 -0.3232895668635034 0 0.9463000876874145 0.9463000876874145 0 0.3232895668635034 0 1 0 0.0 -0.05 0.04
t=122.0 hands 1
t=125.0 hands 0
"""
