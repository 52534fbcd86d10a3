"""Point-pair-feature matching: descriptor build, pose voting, clustering.

A pair of oriented points (p1, n1), (p2, n2) is described by the 4-tuple
(distance, angle(n1, d), angle(n2, d), angle(n1, n2)), which is invariant
under rigid motion. All pairs of a subsampled model are hashed by their
quantized feature. At match time, pairs anchored at strided scene reference
points vote for (model reference point, planar rotation angle) combinations;
peaks yield 6D pose hypotheses which are then clustered.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from bladecas.cloud import PointCloud, voxel_downsample
from bladecas.geometry import OBJECT, RigidTransform, rot_x

_TWO_PI = 2.0 * np.pi
# Bits per quantized feature component when packing the hash key.
_KEY_SHIFT = 10

DESCRIPTOR_MAGIC = b"BPPF"
DESCRIPTOR_VERSION = 1


class MatchError(ValueError):
    pass


@dataclass(frozen=True)
class PointPairFeature:
    d: float
    a1: float
    a2: float
    a3: float

    def __post_init__(self):
        if self.d < 0:
            raise MatchError(f"pair distance must be non-negative, got {self.d}")
        for name, val in (("a1", self.a1), ("a2", self.a2), ("a3", self.a3)):
            if not (-1e-9 <= val <= np.pi + 1e-9):
                raise MatchError(f"angle {name}={val} outside [0, pi]")


@dataclass(frozen=True)
class PoseHypothesis:
    pose: RigidTransform
    votes: int
    icp_residual: float | None = None

    def __post_init__(self):
        if self.votes < 0:
            raise MatchError("votes must be non-negative")
        if self.icp_residual is not None and self.icp_residual < 0:
            raise MatchError("residual must be non-negative")


def compute_ppf(p1, n1, p2, n2) -> PointPairFeature:
    """Feature of one oriented point pair; raises on coincident points."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    n1 = np.asarray(n1, dtype=float)
    n2 = np.asarray(n2, dtype=float)
    diff = p2 - p1
    d = float(np.linalg.norm(diff))
    if d < 1e-12:
        raise MatchError("coincident points have no pair feature")
    u = diff / d
    a1 = float(np.arccos(np.clip(np.dot(n1, u), -1.0, 1.0)))
    a2 = float(np.arccos(np.clip(np.dot(n2, u), -1.0, 1.0)))
    a3 = float(np.arccos(np.clip(np.dot(n1, n2), -1.0, 1.0)))
    return PointPairFeature(d, a1, a2, a3)


def _align_to_x(normals: np.ndarray) -> np.ndarray:
    """Rotations taking each unit normal onto +x (batched, (n, 3, 3))."""
    n = normals.shape[0]
    x = np.array([1.0, 0.0, 0.0])
    axes = np.cross(normals, np.broadcast_to(x, (n, 3)))
    sin = np.linalg.norm(axes, axis=1)
    cos = normals @ x
    rots = np.empty((n, 3, 3))
    regular = sin > 1e-12
    if regular.any():
        a = axes[regular] / sin[regular][:, None]
        rots[regular] = Rotation.from_rotvec(
            a * np.arctan2(sin[regular], cos[regular])[:, None]).as_matrix()
    aligned = ~regular & (cos > 0)
    flipped = ~regular & (cos <= 0)
    rots[aligned] = np.eye(3)
    # normal is -x: rotate half a turn about z
    rots[flipped] = np.array([[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]])
    return rots


def _pair_features(points: np.ndarray, normals: np.ndarray, ref_idx: np.ndarray
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Features and planar angles of all (reference, other) pairs.

    Returns (features (r, n, 4), alphas (r, n), valid (r, n)) where row i pairs
    reference point ref_idx[i] with every cloud point.
    """
    refs_p = points[ref_idx]
    refs_n = normals[ref_idx]
    diff = points[None, :, :] - refs_p[:, None, :]          # (r, n, 3)
    dist = np.linalg.norm(diff, axis=2)
    valid = dist > 1e-12
    safe = np.where(valid, dist, 1.0)
    u = diff / safe[:, :, None]
    cos_a1 = np.einsum("ri,rni->rn", refs_n, u)
    cos_a2 = np.einsum("ni,rni->rn", normals, u)
    cos_a3 = refs_n @ normals.T
    feats = np.stack([
        dist,
        np.arccos(np.clip(cos_a1, -1.0, 1.0)),
        np.arccos(np.clip(cos_a2, -1.0, 1.0)),
        np.arccos(np.clip(cos_a3, -1.0, 1.0)),
    ], axis=2)
    # planar angle: rotate the pair into the reference frame (normal on +x),
    # measure the angle that brings the second point onto the +y half plane
    rots = _align_to_x(refs_n)                               # (r, 3, 3)
    local = np.einsum("rij,rnj->rni", rots, diff)
    alphas = np.arctan2(-local[:, :, 2], local[:, :, 1])
    return feats, alphas, valid


def quantize_features(feats: np.ndarray, dist_step: float, angle_step: float) -> np.ndarray:
    """Pack quantized feature 4-tuples into integer hash keys."""
    d_bin = np.floor(feats[..., 0] / dist_step).astype(np.int64)
    a_bins = np.floor(feats[..., 1:] / angle_step).astype(np.int64)
    key = d_bin
    for i in range(3):
        key = (key << _KEY_SHIFT) | a_bins[..., i]
    return key


@dataclass(frozen=True)
class ModelDescriptor:
    """Hash table over quantized pair features of one subsampled object model.

    ``sampled_model`` is the voxel-subsampled cloud the table was built from;
    ``refine_model`` is a finer subsample (half step) kept for ICP refinement.
    """

    dist_step: float
    angle_step: float
    diameter: float
    sampled_model: PointCloud
    refine_model: PointCloud
    # Table storage: entry arrays sorted by key; lookup via binary search.
    keys: np.ndarray = field(repr=False)
    ref_indices: np.ndarray = field(repr=False)
    alphas: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.dist_step <= 0:
            raise MatchError(f"dist_step must be positive, got {self.dist_step}")
        turns = _TWO_PI / self.angle_step
        if abs(turns - round(turns)) > 1e-9:
            raise MatchError(f"angle_step must divide 2*pi, got {self.angle_step}")
        if len(self.ref_indices) and int(self.ref_indices.max()) >= len(self.sampled_model):
            raise MatchError("table references an index beyond the sampled model")

    @property
    def entry_count(self) -> int:
        return int(self.keys.shape[0])

    def lookup(self, key: int) -> tuple[np.ndarray, np.ndarray]:
        """Entries stored under one quantized feature key: (model indices, alphas)."""
        lo = np.searchsorted(self.keys, key, side="left")
        hi = np.searchsorted(self.keys, key, side="right")
        return self.ref_indices[lo:hi], self.alphas[lo:hi]

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(DESCRIPTOR_MAGIC)
            fh.write(struct.pack("<I", DESCRIPTOR_VERSION))
            fh.write(struct.pack("<3d", self.dist_step, self.angle_step, self.diameter))
            fh.write(struct.pack("<Q", self.entry_count))
            for cloud in (self.sampled_model, self.refine_model):
                fh.write(struct.pack("<Q", len(cloud)))
                fh.write(cloud.points.astype("<f8").tobytes())
                fh.write(cloud.normals.astype("<f8").tobytes())
            fh.write(self.keys.astype("<i8").tobytes())
            fh.write(self.ref_indices.astype("<u4").tobytes())
            fh.write(self.alphas.astype("<f8").tobytes())

    @classmethod
    def load(cls, path) -> "ModelDescriptor":
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != DESCRIPTOR_MAGIC:
                raise MatchError(f"{path}: not a descriptor file (magic {magic!r})")
            (version,) = struct.unpack("<I", fh.read(4))
            if version != DESCRIPTOR_VERSION:
                raise MatchError(f"{path}: unsupported descriptor version {version}")
            dist_step, angle_step, diameter = struct.unpack("<3d", fh.read(24))
            (entries,) = struct.unpack("<Q", fh.read(8))
            clouds = []
            for _ in range(2):
                (n_points,) = struct.unpack("<Q", fh.read(8))
                pts = np.frombuffer(fh.read(n_points * 24), dtype="<f8").reshape(n_points, 3)
                nrm = np.frombuffer(fh.read(n_points * 24), dtype="<f8").reshape(n_points, 3)
                clouds.append(PointCloud(pts.copy(), frame=OBJECT, normals=nrm.copy()))
            keys = np.frombuffer(fh.read(entries * 8), dtype="<i8")
            refs = np.frombuffer(fh.read(entries * 4), dtype="<u4")
            alphas = np.frombuffer(fh.read(entries * 8), dtype="<f8")
        return cls(dist_step=dist_step, angle_step=angle_step, diameter=diameter,
                   sampled_model=clouds[0], refine_model=clouds[1],
                   keys=keys.copy(), ref_indices=refs.copy(), alphas=alphas.copy())


def build_descriptor(model: PointCloud, dist_step_rel: float = 0.05,
                     angle_step: float = _TWO_PI / 30.0) -> ModelDescriptor:
    """Subsample the model and hash every ordered point pair.

    ``dist_step_rel`` is the subsampling/quantization step as a fraction of the
    model bounding diameter.
    """
    if len(model) == 0:
        raise MatchError("cannot build a descriptor from an empty model")
    if not model.has_normals:
        raise MatchError("model cloud must carry normals")
    lo = model.points.min(axis=0)
    hi = model.points.max(axis=0)
    diameter = float(np.linalg.norm(hi - lo))
    if diameter <= 0:
        raise MatchError("model has zero extent")
    dist_step = dist_step_rel * diameter
    sampled = voxel_downsample(model, dist_step)
    refine = voxel_downsample(model, dist_step / 2.0)
    n = len(sampled)
    if n < 2:
        raise MatchError(f"subsampled model has {n} point(s); need at least 2")

    feats, alphas, valid = _pair_features(sampled.points, sampled.normals, np.arange(n))
    keys = quantize_features(feats, dist_step, angle_step)
    ref_idx = np.broadcast_to(np.arange(n)[:, None], (n, n))

    keys = keys[valid]
    refs = ref_idx[valid]
    alph = alphas[valid]
    order = np.argsort(keys, kind="stable")
    return ModelDescriptor(
        dist_step=dist_step,
        angle_step=angle_step,
        diameter=diameter,
        sampled_model=sampled,
        refine_model=refine,
        keys=keys[order],
        ref_indices=refs[order].astype(np.uint32),
        alphas=alph[order],
    )


def _canonical_transform(point: np.ndarray, normal: np.ndarray, frame: str
                         ) -> RigidTransform:
    """Move ``point`` to the origin with ``normal`` on +x."""
    rot = _align_to_x(normal[None, :])[0]
    return RigidTransform(rot, -rot @ point, from_frame=frame, to_frame="PAIR")


def match(scene: PointCloud, desc: ModelDescriptor, ref_stride: int = 5,
          alpha_bins: int = 30) -> list[PoseHypothesis]:
    """Vote for model poses against a scene cloud with normals.

    Every ``ref_stride``-th scene point serves as a reference; its pairs with
    all other scene points vote over (model point, planar angle) bins. The
    per-reference peak becomes one OBJECT -> scene-frame pose hypothesis.
    Output is sorted by votes, descending.
    """
    if len(scene) < 2:
        raise MatchError(f"scene has {len(scene)} point(s); need at least 2")
    if not scene.has_normals:
        raise MatchError("scene cloud must carry normals")
    n_scene = len(scene)
    n_model = len(desc.sampled_model)
    bin_width = _TWO_PI / alpha_bins
    ref_idx = np.arange(0, n_scene, ref_stride)

    feats, alphas_s, valid = _pair_features(scene.points, scene.normals, ref_idx)
    keys = quantize_features(feats, desc.dist_step, desc.angle_step)
    # pairs longer than the model diameter can never match a model pair
    valid &= feats[..., 0] <= desc.diameter + desc.dist_step

    hypotheses: list[PoseHypothesis] = []
    model_pts = desc.sampled_model.points
    model_nrm = desc.sampled_model.normals
    for row, sref in enumerate(ref_idx):
        k_row = keys[row][valid[row]]
        a_row = alphas_s[row][valid[row]]
        if k_row.size == 0:
            continue
        lo = np.searchsorted(desc.keys, k_row, side="left")
        hi = np.searchsorted(desc.keys, k_row, side="right")
        counts = hi - lo
        total = int(counts.sum())
        if total == 0:
            continue
        # expand bucket ranges into flat entry indices
        offsets = np.cumsum(counts) - counts
        entry_idx = np.repeat(lo - offsets, counts) + np.arange(total)
        m_refs = desc.ref_indices[entry_idx].astype(np.int64)
        alpha = desc.alphas[entry_idx] - np.repeat(a_row, counts)
        alpha = np.mod(alpha, _TWO_PI)
        bins = np.minimum((alpha / bin_width).astype(np.int64), alpha_bins - 1)
        flat = m_refs * alpha_bins + bins
        votes = np.bincount(flat, minlength=n_model * alpha_bins)
        peak = int(votes.argmax())
        peak_votes = int(votes[peak])
        if peak_votes == 0:
            continue
        # median over the winning bin: robust to stray same-bin votes
        alpha_exact = float(np.median(alpha[flat == peak]))

        m_ref = peak // alpha_bins
        t_model = _canonical_transform(model_pts[m_ref], model_nrm[m_ref], OBJECT)
        t_scene = _canonical_transform(scene.points[sref], scene.normals[sref], scene.frame)
        spin = RigidTransform(rot_x(alpha_exact), np.zeros(3), "PAIR", "PAIR")
        pose_rot = t_scene.rotation.T @ spin.rotation @ t_model.rotation
        pose_tr = t_scene.rotation.T @ (spin.rotation @ t_model.translation
                                        - t_scene.translation)
        pose = RigidTransform(pose_rot, pose_tr, from_frame=OBJECT, to_frame=scene.frame)
        hypotheses.append(PoseHypothesis(pose=pose, votes=peak_votes))

    hypotheses.sort(key=lambda h: h.votes, reverse=True)
    return hypotheses


def rotation_angle_between(r1: np.ndarray, r2: np.ndarray) -> float:
    """Geodesic angle (radians) between two rotations."""
    cos = (np.trace(r1.T @ r2) - 1.0) / 2.0
    return float(np.arccos(np.clip(cos, -1.0, 1.0)))


def cluster_hypotheses(hyps: list[PoseHypothesis], rot_thresh: float,
                       trans_thresh: float) -> list[PoseHypothesis]:
    """Merge nearby hypotheses; merged pose is the vote-weighted average.

    Rotations are averaged as quaternions with sign alignment to the cluster
    seed; thresholds are radians and meters against the running cluster mean.
    """
    if rot_thresh <= 0 or trans_thresh <= 0:
        raise MatchError("clustering thresholds must be positive")
    frames = {(h.pose.from_frame, h.pose.to_frame) for h in hyps}
    if len(frames) > 1:
        raise MatchError(f"cannot cluster poses across frames: {sorted(frames)}")
    clusters: list[dict] = []
    for hyp in sorted(hyps, key=lambda h: h.votes, reverse=True):
        quat = Rotation.from_matrix(hyp.pose.rotation).as_quat()
        trans = hyp.pose.translation
        placed = False
        for cl in clusters:
            mean_rot = cl["quat_sum"] / np.linalg.norm(cl["quat_sum"])
            ang = 2.0 * np.arccos(np.clip(abs(np.dot(mean_rot, quat)), -1.0, 1.0))
            dist = np.linalg.norm(cl["trans_sum"] / cl["weight"] - trans)
            if ang < rot_thresh and dist < trans_thresh:
                if np.dot(quat, cl["quat_sum"]) < 0:
                    quat = -quat
                cl["quat_sum"] += hyp.votes * quat
                cl["trans_sum"] += hyp.votes * trans
                cl["weight"] += hyp.votes
                cl["votes"] += hyp.votes
                placed = True
                break
        if not placed:
            clusters.append({
                "quat_sum": float(max(hyp.votes, 1)) * quat,
                "trans_sum": float(max(hyp.votes, 1)) * trans,
                "weight": float(max(hyp.votes, 1)),
                "votes": hyp.votes,
                "frames": (hyp.pose.from_frame, hyp.pose.to_frame),
            })
    merged = []
    for cl in clusters:
        quat = cl["quat_sum"] / np.linalg.norm(cl["quat_sum"])
        rot = Rotation.from_quat(quat).as_matrix()
        trans = cl["trans_sum"] / cl["weight"]
        pose = RigidTransform(rot, trans, from_frame=cl["frames"][0],
                              to_frame=cl["frames"][1])
        merged.append(PoseHypothesis(pose=pose, votes=cl["votes"]))
    merged.sort(key=lambda h: h.votes, reverse=True)
    return merged
