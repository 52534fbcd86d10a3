"""Point-to-plane iterative closest point refinement.

Each iteration gathers nearest-neighbor correspondences (gated by distance),
then minimizes the sum of squared point-to-plane distances via the small-angle
linearization, solving one 6x6 normal-equation system for an incremental twist
(rotation vector, translation). Steps that would increase the gated RMS
residual are rejected and terminate the iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.transform import Rotation

from bladecas.cloud import PointCloud
from bladecas.geometry import RigidTransform

_MIN_CORRESPONDENCES = 6
_SINGULAR_COND = 1e12


class IcpError(RuntimeError):
    pass


class UnderConstrainedError(IcpError):
    """Fewer than six gated correspondences."""


class SingularSystemError(IcpError):
    """The 6x6 normal-equation system is rank deficient."""


@dataclass(frozen=True)
class IcpParams:
    max_iterations: int = 50
    convergence_tol: float = 1e-6   # meters of RMS change
    correspondence_gate: float = 0.02  # meters
    # When the source carries normals, matches whose normals disagree by more
    # than this are dropped. Essential for thin parts seen from one side:
    # back-face points would otherwise latch onto front-face correspondences.
    normal_gate: float = np.radians(60.0)

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.convergence_tol < 0 or self.correspondence_gate <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class IcpResult:
    pose: RigidTransform
    residual: float      # RMS point-to-plane distance over gated matches
    iterations: int
    residual_history: tuple[float, ...]


def icp_point_to_plane(source: PointCloud, target: PointCloud,
                       init: RigidTransform, params: IcpParams | None = None) -> IcpResult:
    """Refine ``init`` (source frame -> target frame) against the target cloud.

    The target must carry normals. Returns the refined transform and the final
    gated RMS point-to-plane distance.
    """
    params = params or IcpParams()
    if len(source) == 0 or len(target) == 0:
        raise IcpError("source and target clouds must be non-empty")
    if not target.has_normals:
        raise IcpError("target cloud must carry normals")

    tree = cKDTree(target.points)
    current = init
    src = source.points
    src_normals = source.normals
    min_normal_dot = float(np.cos(params.normal_gate))

    def residual_at(t: RigidTransform) -> tuple[float, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        moved = t.apply(src)
        dist, idx = tree.query(moved)
        keep = dist <= params.correspondence_gate
        if src_normals is not None:
            moved_n = src_normals @ t.rotation.T
            agree = np.einsum("ij,ij->i", moved_n, target.normals[idx]) >= min_normal_dot
            keep &= agree
        if int(keep.sum()) < _MIN_CORRESPONDENCES:
            raise UnderConstrainedError(
                f"only {int(keep.sum())} correspondences within gate "
                f"{params.correspondence_gate}")
        p = moved[keep]
        q = target.points[idx[keep]]
        n = target.normals[idx[keep]]
        r = np.einsum("ij,ij->i", p - q, n)
        return float(np.sqrt(np.mean(r * r))), p, q, n, r

    rms, p, q, n, r = residual_at(current)
    history = [rms]
    iterations = 0
    for _ in range(params.max_iterations):
        iterations += 1
        # rows: [ (p x n)^T  n^T ] for the twist [omega; t]
        jac = np.hstack([np.cross(p, n), n])
        a = jac.T @ jac
        b = jac.T @ r
        if np.linalg.cond(a) > _SINGULAR_COND:
            raise SingularSystemError("normal equations are rank deficient "
                                      "(degenerate geometry, e.g. a single plane)")
        x = np.linalg.solve(a, -b)
        d_rot = Rotation.from_rotvec(x[:3]).as_matrix()
        candidate = RigidTransform(
            d_rot @ current.rotation,
            d_rot @ current.translation + x[3:],
            from_frame=current.from_frame,
            to_frame=current.to_frame,
        )
        new_rms, new_p, new_q, new_n, new_r = residual_at(candidate)
        if new_rms > rms:
            # the linearized step overshot; keep the best transform seen
            break
        improvement = rms - new_rms
        current, rms = candidate, new_rms
        p, q, n, r = new_p, new_q, new_n, new_r
        history.append(rms)
        if improvement < params.convergence_tol:
            break
    return IcpResult(pose=current, residual=rms, iterations=iterations,
                     residual_history=tuple(history))
