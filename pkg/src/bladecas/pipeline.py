"""Markerless pose estimation pipeline: crop, merge, match, refine.

One frame of per-camera clouds and 2D detections goes in; an OBJECT -> WORLD
pose hypothesis with vote count and ICP residual comes out. Detections from a
2D detector (simulated here) crop each camera's cloud before the expensive
matching stage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from bladecas.cloud import PointCloud, estimate_normals, merge_clouds, voxel_downsample
from bladecas.geometry import (
    WORLD,
    Camera,
    CameraIntrinsics,
    RigidTransform,
    invert,
    project_points,
)
from bladecas.icp import IcpError, IcpParams, icp_point_to_plane
from bladecas.ppf import MatchError, ModelDescriptor, PoseHypothesis, cluster_hypotheses, match

DEFAULT_REF_STRIDE = 5
DEFAULT_ALPHA_BINS = 30
DEFAULT_ROT_CLUSTER_THRESH = np.radians(15.0)
DEFAULT_TRANS_CLUSTER_REL = 0.10
_NORMAL_NEIGHBORS = 12


class PoseEstimationError(RuntimeError):
    pass


class NoObjectError(PoseEstimationError):
    """No scene points survived cropping; nothing to match."""


@dataclass(frozen=True)
class Detection2D:
    camera_id: str
    u_min: float
    v_min: float
    u_max: float
    v_max: float

    def __post_init__(self):
        if not (self.u_min < self.u_max and self.v_min < self.v_max):
            raise ValueError(f"degenerate detection box {self}")

    def clipped(self, width: int, height: int) -> "Detection2D":
        return Detection2D(self.camera_id,
                           max(self.u_min, 0.0), max(self.v_min, 0.0),
                           min(self.u_max, float(width)), min(self.v_max, float(height)))


def crop_cloud(cloud: PointCloud, det: Detection2D, k: CameraIntrinsics,
               t_world_cam: RigidTransform) -> PointCloud:
    """Keep the WORLD-frame points that project inside the detection box.

    Points behind the camera are always removed.
    """
    if cloud.frame != t_world_cam.from_frame:
        raise PoseEstimationError(
            f"cloud frame {cloud.frame!r} does not match extrinsic input frame "
            f"{t_world_cam.from_frame!r}")
    if len(cloud) == 0:
        return cloud
    cam_pts = t_world_cam.apply(cloud.points)
    uv, in_front = project_points(k, cam_pts)
    inside = in_front.copy()
    inside[in_front] = (
        (uv[in_front, 0] >= det.u_min) & (uv[in_front, 0] <= det.u_max)
        & (uv[in_front, 1] >= det.v_min) & (uv[in_front, 1] <= det.v_max)
    )
    return cloud.select(inside)


@dataclass(frozen=True)
class PipelineParams:
    ref_stride: int = DEFAULT_REF_STRIDE
    alpha_bins: int = DEFAULT_ALPHA_BINS
    rot_cluster_thresh: float = DEFAULT_ROT_CLUSTER_THRESH
    trans_cluster_rel: float = DEFAULT_TRANS_CLUSTER_REL
    normal_neighbors: int = _NORMAL_NEIGHBORS
    icp_max_iterations: int = 50
    icp_convergence_tol: float = 1e-9
    max_refined_clusters: int = 4
    refine_vote_fraction: float = 0.4


def estimate_pose(scene_clouds: dict[str, PointCloud],
                  detections: dict[str, Detection2D],
                  desc: ModelDescriptor,
                  cameras: dict[str, Camera],
                  params: PipelineParams | None = None) -> PoseHypothesis:
    """Estimate the OBJECT -> WORLD pose from one hands-cleared frame.

    Per camera: crop the WORLD-frame cloud by its detection, estimate normals
    oriented toward that camera, and subsample. The merged crop is matched
    against the descriptor, the hypotheses are clustered, and the best cluster
    is refined with point-to-plane ICP (ties broken by lower residual).
    """
    params = params or PipelineParams()
    dense_crops: list[PointCloud] = []
    sparse_crops: list[PointCloud] = []
    for cam_id, det in detections.items():
        cloud = scene_clouds.get(cam_id)
        if cloud is None or len(cloud) == 0:
            continue
        if det.camera_id != cam_id:
            raise PoseEstimationError(
                f"detection for camera {det.camera_id!r} keyed under {cam_id!r}")
        cam = cameras[cam_id]
        crop = crop_cloud(cloud, det, cam.intrinsics, cam.t_world_cam)
        if len(crop) < params.normal_neighbors + 2:
            continue
        with_normals = estimate_normals(crop, k=params.normal_neighbors,
                                        sensor_origin=cam.origin_world)
        dense_crops.append(with_normals)
        sparse_crops.append(voxel_downsample(with_normals, desc.dist_step))

    merged = merge_clouds(sparse_crops)
    if len(merged) < 2:
        raise NoObjectError("detections cover no usable scene points")
    dense = merge_clouds(dense_crops)

    try:
        hyps = match(merged, desc, ref_stride=params.ref_stride,
                     alpha_bins=params.alpha_bins)
    except MatchError as exc:
        raise NoObjectError(str(exc)) from exc
    if not hyps:
        raise NoObjectError("voting produced no pose hypotheses")
    clusters = cluster_hypotheses(hyps, params.rot_cluster_thresh,
                                  params.trans_cluster_rel * desc.diameter)

    icp_params = IcpParams(max_iterations=params.icp_max_iterations,
                           convergence_tol=params.icp_convergence_tol,
                           correspondence_gate=2.0 * desc.dist_step)
    # Refine the strongest clusters and keep the lowest-residual result; vote
    # counts alone cannot separate near-symmetric poses of thin parts.
    top_votes = clusters[0].votes
    candidates = [cl for cl in clusters[:params.max_refined_clusters]
                  if cl.votes >= params.refine_vote_fraction * top_votes]
    best: PoseHypothesis | None = None
    errors: list[Exception] = []
    for cl in candidates:
        try:
            pose, residual = _refine(cl.pose, desc, dense, icp_params)
        except IcpError as exc:
            errors.append(exc)
            continue
        candidate = PoseHypothesis(pose=pose, votes=cl.votes, icp_residual=residual)
        if best is None or candidate.icp_residual < best.icp_residual:
            best = candidate
    if best is None:
        raise errors[0] if errors else NoObjectError("no refinable cluster")
    return best


def _refine(init: RigidTransform, desc: ModelDescriptor, scene: PointCloud,
            icp_params: IcpParams) -> tuple[RigidTransform, float]:
    """Two-stage ICP: model onto the scene, then the scene onto the fine model.

    The forward pass aligns against the scene's estimated normals; the reverse
    pass polishes against the exact model normals, which is noticeably more
    accurate at visibility boundaries where estimated normals are biased.
    """
    forward = icp_point_to_plane(desc.sampled_model, scene, init, icp_params)
    reverse = icp_point_to_plane(scene, desc.refine_model, invert(forward.pose),
                                 icp_params)
    return invert(reverse.pose), reverse.residual
