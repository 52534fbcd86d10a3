"""Walk through the projection math that puts virtual ink on the live image.

A point on the object travels OBJECT -> WORLD -> CAMERA and lands on a pixel.
The same chain drives every AR overlay the workstation draws.
"""

import numpy as np

from bladecas import (
    CameraIntrinsics,
    Point3,
    RigidTransform,
    ar_project,
    compose,
    invert,
    project,
    transform_point,
)
from bladecas.geometry import OBJECT, WORLD, camera_frame, rot_x, rot_z

k = CameraIntrinsics(fx=700.0, fy=700.0, cx=640.0, cy=360.0, width=1280, height=720)
print("camera matrix A:")
print(k.matrix())

# The blade sits on the table, shifted and yawed a little.
t_obj_world = RigidTransform(rot_z(0.4), np.array([0.05, -0.02, 0.04]),
                             from_frame=OBJECT, to_frame=WORLD)
# The camera hangs 1.1 m above the table looking straight down.
t_world_cam = RigidTransform(rot_x(np.pi), np.array([0.0, 0.0, 1.1]),
                             from_frame=WORLD, to_frame=camera_frame("cam1"))

p_obj = Point3(0.01, 0.005, 0.08, frame=OBJECT)
print(f"\nobject-frame point: ({p_obj.x}, {p_obj.y}, {p_obj.z})")

p_world = transform_point(t_obj_world, p_obj)
print(f"in WORLD:  ({p_world.x:+.4f}, {p_world.y:+.4f}, {p_world.z:+.4f})")

p_cam = transform_point(compose(t_world_cam, t_obj_world), p_obj)
print(f"in CAMERA: ({p_cam.x:+.4f}, {p_cam.y:+.4f}, {p_cam.z:+.4f})  (depth = {p_cam.z:.4f} m)")

px_direct = ar_project(k, t_world_cam, t_obj_world, p_obj)
px_chained = project(k, p_cam)
print(f"\nar_project:        ({px_direct.u:.6f}, {px_direct.v:.6f}) px")
print(f"chained two-step:  ({px_chained.u:.6f}, {px_chained.v:.6f}) px")
print(f"difference:        {abs(px_direct.u - px_chained.u):.2e} px")

# The homogeneous scale cancels: any point along the same viewing ray lands
# on the same pixel.
for lam in (0.5, 1.0, 3.0):
    scaled = Point3(lam * p_cam.x, lam * p_cam.y, lam * p_cam.z, frame=p_cam.frame)
    px = project(k, scaled)
    print(f"lambda={lam:<4} -> ({px.u:.6f}, {px.v:.6f})")

# Frame labels catch inverted chains before they produce nonsense pixels.
try:
    compose(t_obj_world, t_world_cam)
except Exception as exc:
    print(f"\nframe check: {exc}")

round_trip = compose(t_obj_world, invert(t_obj_world))
print(f"compose with inverse drifts by {np.abs(round_trip.matrix() - np.eye(4)).max():.2e}")
