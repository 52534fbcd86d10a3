"""Point clouds, neighborhood normal estimation, and voxel subsampling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from bladecas.geometry import WORLD, RigidTransform

# Neighborhoods whose middle covariance eigenvalue falls below this fraction of
# the largest are rank deficient; their normals are unreliable and dropped.
_DEGENERATE_EIGENVALUE_RATIO = 1e-8


class CloudError(ValueError):
    pass


@dataclass(frozen=True)
class PointCloud:
    """3D points in one frame, with optional per-point unit normals."""

    points: np.ndarray
    frame: str = WORLD
    normals: np.ndarray | None = field(default=None)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(pts)):
            raise CloudError("point coordinates must be finite")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        if self.normals is not None:
            nrm = np.asarray(self.normals, dtype=float).reshape(-1, 3)
            if nrm.shape[0] != pts.shape[0]:
                raise CloudError(
                    f"normal count {nrm.shape[0]} does not match point count {pts.shape[0]}"
                )
            lengths = np.linalg.norm(nrm, axis=1)
            if not np.all(np.abs(lengths - 1.0) < 1e-6):
                raise CloudError("normals must be unit length")
            nrm.flags.writeable = False
            object.__setattr__(self, "normals", nrm)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def has_normals(self) -> bool:
        return self.normals is not None

    def transformed(self, t: RigidTransform) -> "PointCloud":
        """Rigidly move the cloud; rotates normals along."""
        if self.frame != t.from_frame:
            raise CloudError(f"cloud is in frame {self.frame!r}, transform expects "
                             f"{t.from_frame!r}")
        pts = t.apply(self.points)
        nrm = self.normals @ t.rotation.T if self.normals is not None else None
        return PointCloud(pts, frame=t.to_frame, normals=nrm)

    def select(self, mask_or_index) -> "PointCloud":
        nrm = self.normals[mask_or_index] if self.normals is not None else None
        return PointCloud(self.points[mask_or_index], frame=self.frame, normals=nrm)


def merge_clouds(clouds: list[PointCloud]) -> PointCloud:
    clouds = [c for c in clouds if len(c) > 0]
    if not clouds:
        return PointCloud(np.empty((0, 3)))
    frames = {c.frame for c in clouds}
    if len(frames) != 1:
        raise CloudError(f"cannot merge clouds from different frames: {sorted(frames)}")
    points = np.vstack([c.points for c in clouds])
    if all(c.has_normals for c in clouds):
        normals = np.vstack([c.normals for c in clouds])
    else:
        normals = None
    return PointCloud(points, frame=clouds[0].frame, normals=normals)


def estimate_normals(cloud: PointCloud, k: int, sensor_origin) -> PointCloud:
    """Per-point normals from the k-nearest-neighbor covariance.

    The normal is the eigenvector of the smallest covariance eigenvalue,
    oriented toward ``sensor_origin`` (same frame as the cloud). Points whose
    neighborhood is rank deficient (e.g. collinear) are excluded from the
    returned cloud.
    """
    if k < 3:
        raise CloudError(f"need k >= 3 neighbors, got {k}")
    n = len(cloud)
    if n < k + 1:
        raise CloudError(f"cloud has {n} points, need at least {k + 1}")
    origin = np.asarray(sensor_origin, dtype=float).reshape(3)

    tree = cKDTree(cloud.points)
    _, idx = tree.query(cloud.points, k=k + 1)
    neighborhoods = cloud.points[idx]                      # (n, k+1, 3)
    centered = neighborhoods - neighborhoods.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centered, centered) / (k + 1)
    eigvals, eigvecs = np.linalg.eigh(cov)                 # ascending eigenvalues

    valid = eigvals[:, 1] > _DEGENERATE_EIGENVALUE_RATIO * np.maximum(eigvals[:, 2], 1e-300)
    normals = eigvecs[:, :, 0]
    toward_sensor = origin[None, :] - cloud.points
    flip = np.einsum("ni,ni->n", normals, toward_sensor) < 0
    normals[flip] = -normals[flip]
    lengths = np.linalg.norm(normals, axis=1, keepdims=True)
    normals = normals / np.where(lengths > 0, lengths, 1.0)

    return PointCloud(cloud.points[valid], frame=cloud.frame, normals=normals[valid])


def voxel_downsample(cloud: PointCloud, voxel_size: float) -> PointCloud:
    """Keep one representative point per occupied voxel (closest to the voxel mean).

    Retaining an input point, rather than the mean itself, keeps normals valid.
    """
    if voxel_size <= 0:
        raise CloudError(f"voxel size must be positive, got {voxel_size}")
    n = len(cloud)
    if n == 0:
        return cloud
    keys = np.floor(cloud.points / voxel_size).astype(np.int64)
    # Order points by voxel, then walk each group once.
    order = np.lexsort((keys[:, 2], keys[:, 1], keys[:, 0]))
    sorted_keys = keys[order]
    group_start = np.ones(n, dtype=bool)
    group_start[1:] = np.any(sorted_keys[1:] != sorted_keys[:-1], axis=1)
    starts = np.flatnonzero(group_start)
    ends = np.append(starts[1:], n)

    keep = np.empty(len(starts), dtype=np.int64)
    pts = cloud.points
    for gi, (s, e) in enumerate(zip(starts, ends)):
        members = order[s:e]
        centroid = pts[members].mean(axis=0)
        keep[gi] = members[np.argmin(np.einsum("ij,ij->i", pts[members] - centroid,
                                               pts[members] - centroid))]
    keep.sort()
    return cloud.select(keep)
