"""Cognitive assistance toolkit for object-specific turbine-blade repair.

Core pieces: pinhole/AR projection geometry, point-pair-feature pose
estimation with point-to-plane ICP refinement, a synthetic camera/scanner
simulator, a serial-keyed digital-twin store, the repair-session workflow
service, and the study statistics toolkit.
"""

from bladecas.cloud import PointCloud, estimate_normals, merge_clouds, voxel_downsample
from bladecas.geometry import (
    Camera,
    CameraIntrinsics,
    Pixel,
    Point3,
    RigidTransform,
    ar_project,
    compose,
    invert,
    load_camera_config,
    project,
    transform_point,
)
from bladecas.icp import IcpParams, icp_point_to_plane
from bladecas.mesh import TriangleMesh, load_cloud, load_mesh, sample_surface
from bladecas.overlay import AROverlayFrame, OverlayLayer, compute_overlays
from bladecas.pipeline import Detection2D, crop_cloud, estimate_pose
from bladecas.ppf import (
    ModelDescriptor,
    PoseHypothesis,
    build_descriptor,
    cluster_hypotheses,
    compute_ppf,
    match,
)
from bladecas.session import SessionState, WorkstationSession
from bladecas.simulate import SceneSimulator, add_noise, render_cloud, synth_detection
from bladecas.stats import (
    PairedSample,
    TlxResponse,
    UmuxResponse,
    cohens_dz,
    paired_t_test,
    rtlx,
    tct_summary,
    umux_lite,
    within_subject_ci,
)
from bladecas.twin import TwinStore

__all__ = [
    "AROverlayFrame",
    "Camera",
    "CameraIntrinsics",
    "Detection2D",
    "IcpParams",
    "ModelDescriptor",
    "OverlayLayer",
    "PairedSample",
    "Pixel",
    "Point3",
    "PointCloud",
    "PoseHypothesis",
    "RigidTransform",
    "SceneSimulator",
    "SessionState",
    "TlxResponse",
    "TriangleMesh",
    "TwinStore",
    "UmuxResponse",
    "WorkstationSession",
    "add_noise",
    "ar_project",
    "build_descriptor",
    "cluster_hypotheses",
    "cohens_dz",
    "compose",
    "compute_overlays",
    "compute_ppf",
    "crop_cloud",
    "estimate_normals",
    "estimate_pose",
    "icp_point_to_plane",
    "invert",
    "load_camera_config",
    "load_cloud",
    "load_mesh",
    "match",
    "merge_clouds",
    "paired_t_test",
    "project",
    "render_cloud",
    "rtlx",
    "sample_surface",
    "synth_detection",
    "tct_summary",
    "transform_point",
    "umux_lite",
    "voxel_downsample",
    "within_subject_ci",
]

__version__ = "0.1.0"
