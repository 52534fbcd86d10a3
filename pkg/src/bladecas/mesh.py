"""Triangle meshes: ASCII PLY-subset IO, surface sampling, and simple metrics.

The file format is the ASCII "ply" polygon subset: a vertex element with x/y/z
(optionally nx/ny/nz) properties and a face element of triangle vertex lists.
Binary PLY and non-triangle faces are out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from bladecas.cloud import PointCloud
from bladecas.geometry import OBJECT

_DEGENERATE_AREA = 1e-14


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class TriangleMesh:
    """Vertices (meters, OBJECT frame) and triangle index triples.

    Zero-area triangles are filtered at construction time.
    """

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        tris = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if not np.all(np.isfinite(verts)):
            raise MeshError("vertex coordinates must be finite")
        if tris.size and (tris.min() < 0 or tris.max() >= len(verts)):
            raise MeshError("triangle index out of range")
        if tris.size:
            areas = _triangle_areas(verts, tris)
            tris = tris[areas > _DEGENERATE_AREA]
        verts.flags.writeable = False
        tris.flags.writeable = False
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "triangles", tris)

    @property
    def triangle_count(self) -> int:
        return self.triangles.shape[0]

    def face_normals(self) -> np.ndarray:
        """Unit normals per triangle, right-hand rule over the winding order."""
        v0 = self.vertices[self.triangles[:, 0]]
        v1 = self.vertices[self.triangles[:, 1]]
        v2 = self.vertices[self.triangles[:, 2]]
        n = np.cross(v1 - v0, v2 - v0)
        return n / np.linalg.norm(n, axis=1, keepdims=True)

    def face_areas(self) -> np.ndarray:
        return _triangle_areas(self.vertices, self.triangles)

    def diameter(self) -> float:
        """Bounding-box diagonal; a tight-enough bounding-sphere diameter for
        quantization step sizing."""
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(np.linalg.norm(hi - lo))


def _triangle_areas(verts: np.ndarray, tris: np.ndarray) -> np.ndarray:
    v0 = verts[tris[:, 0]]
    v1 = verts[tris[:, 1]]
    v2 = verts[tris[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(v1 - v0, v2 - v0), axis=1)


def sample_surface(mesh: TriangleMesh, count: int, seed: int = 0) -> PointCloud:
    """Uniform area-weighted surface samples with face normals, OBJECT frame."""
    if mesh.triangle_count == 0:
        raise MeshError("cannot sample an empty mesh")
    rng = np.random.default_rng(seed)
    areas = mesh.face_areas()
    faces = rng.choice(mesh.triangle_count, size=count, p=areas / areas.sum())
    u = rng.uniform(size=(count, 1))
    v = rng.uniform(size=(count, 1))
    flip = (u + v) > 1.0
    u[flip] = 1.0 - u[flip]
    v[flip] = 1.0 - v[flip]
    tri = mesh.triangles[faces]
    p0 = mesh.vertices[tri[:, 0]]
    p1 = mesh.vertices[tri[:, 1]]
    p2 = mesh.vertices[tri[:, 2]]
    points = p0 + u * (p1 - p0) + v * (p2 - p0)
    normals = mesh.face_normals()[faces]
    return PointCloud(points, frame=OBJECT, normals=normals)


def load_mesh(path) -> TriangleMesh:
    vertices, _, faces = _parse_ply(path, need_faces=True)
    return TriangleMesh(vertices, faces)


def load_cloud(path, frame: str = OBJECT) -> PointCloud:
    vertices, normals, _ = _parse_ply(path, need_faces=False)
    return PointCloud(vertices, frame=frame, normals=normals)


def mesh_to_ply_text(mesh: TriangleMesh) -> str:
    lines = [
        "ply", "format ascii 1.0",
        f"element vertex {len(mesh.vertices)}",
        "property float x", "property float y", "property float z",
        f"element face {mesh.triangle_count}",
        "property list uchar int vertex_indices", "end_header",
    ]
    lines += [f"{v[0]:.9g} {v[1]:.9g} {v[2]:.9g}" for v in mesh.vertices]
    lines += [f"3 {t[0]} {t[1]} {t[2]}" for t in mesh.triangles]
    return "\n".join(lines) + "\n"


def save_mesh(path, mesh: TriangleMesh) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(mesh_to_ply_text(mesh))


def save_cloud(path, cloud: PointCloud) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        fh.write(f"element vertex {len(cloud)}\n")
        fh.write("property float x\nproperty float y\nproperty float z\n")
        if cloud.has_normals:
            fh.write("property float nx\nproperty float ny\nproperty float nz\n")
        fh.write("element face 0\n")
        fh.write("property list uchar int vertex_indices\nend_header\n")
        if cloud.has_normals:
            for p, n in zip(cloud.points, cloud.normals):
                fh.write(f"{p[0]:.9g} {p[1]:.9g} {p[2]:.9g} "
                         f"{n[0]:.9g} {n[1]:.9g} {n[2]:.9g}\n")
        else:
            for p in cloud.points:
                fh.write(f"{p[0]:.9g} {p[1]:.9g} {p[2]:.9g}\n")


def _parse_ply(path, need_faces: bool):
    with open(path, "r", encoding="utf-8") as fh:
        line = fh.readline().strip()
        if line != "ply":
            raise MeshError(f"{path}: not a ply file (first line {line!r})")
        vertex_count = None
        face_count = 0
        vertex_props: list[str] = []
        current_element = None
        while True:
            line = fh.readline()
            if not line:
                raise MeshError(f"{path}: truncated header")
            line = line.strip()
            if line == "end_header":
                break
            parts = line.split()
            if not parts or parts[0] == "comment":
                continue
            if parts[0] == "format":
                if parts[1] != "ascii":
                    raise MeshError(f"{path}: only ascii ply is supported, got {parts[1]}")
            elif parts[0] == "element":
                current_element = parts[1]
                if parts[1] == "vertex":
                    vertex_count = int(parts[2])
                elif parts[1] == "face":
                    face_count = int(parts[2])
                else:
                    raise MeshError(f"{path}: unsupported element {parts[1]!r}")
            elif parts[0] == "property" and current_element == "vertex":
                vertex_props.append(parts[-1])
        if vertex_count is None:
            raise MeshError(f"{path}: missing vertex element")
        for needed in ("x", "y", "z"):
            if needed not in vertex_props:
                raise MeshError(f"{path}: vertex property {needed!r} missing")
        has_normals = all(p in vertex_props for p in ("nx", "ny", "nz"))
        col = {name: i for i, name in enumerate(vertex_props)}

        rows = np.loadtxt(fh, max_rows=vertex_count, ndmin=2) if vertex_count else \
            np.empty((0, len(vertex_props)))
        if rows.shape[0] != vertex_count:
            raise MeshError(f"{path}: expected {vertex_count} vertex rows, got {rows.shape[0]}")
        vertices = rows[:, [col["x"], col["y"], col["z"]]]
        normals = rows[:, [col["nx"], col["ny"], col["nz"]]] if has_normals else None

        faces = []
        for _ in range(face_count):
            line = fh.readline()
            if not line:
                raise MeshError(f"{path}: truncated face list")
            nums = line.split()
            if int(nums[0]) != 3:
                raise MeshError(f"{path}: only triangle faces are supported")
            faces.append([int(nums[1]), int(nums[2]), int(nums[3])])
        if need_faces and not faces:
            raise MeshError(f"{path}: mesh file has no faces")
        face_arr = np.array(faces, dtype=np.int64) if faces else np.empty((0, 3), dtype=np.int64)
        return vertices, normals, face_arr
