"""Pose feature extraction, inversion and normalization.

A pose sequence of N frames becomes an (N-1, D) feature matrix. Each row
holds, in order: root yaw angular velocity (1), root linear velocity on the
XZ plane expressed in the heading frame (2), root height (1), 6D local joint
rotations (6j, root stored yaw-free), heading-local joint positions (3j),
heading-local joint velocities (3j), and four binary foot contacts. Root yaw
and XZ translation appear only as frame-to-frame velocities, so the features
are invariant to the initial heading and ground-plane position.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import rotations as rot
from .errors import DataValidationError
from .skeleton import PoseSequence, SkeletonSpec, contact_joints, forward_kinematics

# A foot joint moving slower than this (meters per frame) counts as planted.
CONTACT_SPEED_THRESHOLD = 0.02

FULL = "full"
ESSENTIAL = "essential"


@dataclass(frozen=True)
class FeatureLayout:
    """Column bookkeeping for a given joint count."""

    joints: int = 24

    def __post_init__(self):
        j = self.joints
        if j < 1:
            raise DataValidationError("layout needs at least one joint")
        # the segments must tile the advertised widths
        assert self.full_dim == 4 + 6 * j + 3 * j + 3 * j + 4
        assert self.essential_dim == 4 + 6 * j
        if j == 24:
            assert self.full_dim == 296
            assert self.essential_dim == 148

    @property
    def full_dim(self) -> int:
        return 8 + 12 * self.joints

    @property
    def essential_dim(self) -> int:
        return 4 + 6 * self.joints

    # column ranges
    @property
    def root_angular_vel(self) -> slice:
        return slice(0, 1)

    @property
    def root_linear_vel(self) -> slice:
        return slice(1, 3)

    @property
    def root_height(self) -> slice:
        return slice(3, 4)

    @property
    def rotations_6d(self) -> slice:
        return slice(4, 4 + 6 * self.joints)

    @property
    def positions(self) -> slice:
        return slice(4 + 6 * self.joints, 4 + 9 * self.joints)

    @property
    def velocities(self) -> slice:
        return slice(4 + 9 * self.joints, 4 + 12 * self.joints)

    @property
    def contacts(self) -> slice:
        return slice(4 + 12 * self.joints, 8 + 12 * self.joints)

    def dim(self, kind: str) -> int:
        return self.full_dim if kind == FULL else self.essential_dim


@dataclass
class FeatureSequence:
    """Frame-wise pose features with layout and normalization metadata."""

    data: np.ndarray
    layout: FeatureLayout = FeatureLayout()
    kind: str = FULL
    fps: float = 30.0
    normalized: bool = False

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.kind not in (FULL, ESSENTIAL):
            raise DataValidationError(f"unknown feature layout kind {self.kind!r}")
        if self.data.ndim != 2:
            raise DataValidationError("feature data must be a 2-D matrix")
        want = self.layout.dim(self.kind)
        if self.data.shape[1] != want:
            raise DataValidationError(
                f"feature width {self.data.shape[1]} does not match {self.kind} layout ({want})"
            )

    def __len__(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def essential(self) -> "FeatureSequence":
        """The root quartet plus 6D rotations (first 4 + 6j columns)."""
        if self.kind == ESSENTIAL:
            return self
        cols = self.layout.essential_dim
        return FeatureSequence(
            self.data[:, :cols].copy(),
            layout=self.layout,
            kind=ESSENTIAL,
            fps=self.fps,
            normalized=self.normalized,
        )


def _inverse_heading(yaw: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """Rotate vectors into the heading-local frame (undo yaw about Y)."""
    inv = rot.qconjugate(rot.yaw_quat(yaw))
    return rot.qrot(inv[..., None, :] if vec.ndim == yaw.ndim + 2 else inv, vec)


def extract_features(pose: PoseSequence, skel: SkeletonSpec) -> FeatureSequence:
    """Convert a pose sequence into the (N-1, D) feature matrix."""
    n = len(pose)
    if n < 2:
        raise DataValidationError("sequence too short")
    j = skel.num_joints
    layout = FeatureLayout(j)

    world = forward_kinematics(pose, skel)  # (N, j, 3)
    root_q = pose.joint_rotations[:, skel.hip_index]
    yaw, root_rem = rot.remove_yaw(root_q)

    ang_vel = rot.wrap_angle(yaw[1:] - yaw[:-1])  # (N-1,)
    root_delta = pose.root_positions[1:] - pose.root_positions[:-1]
    vel_local = _inverse_heading(yaw[:-1], root_delta)
    lin_vel_xz = vel_local[:, [0, 2]]
    height = pose.root_positions[:-1, 1]

    local_q = pose.joint_rotations.copy()
    local_q[:, skel.hip_index] = root_rem
    rot6d = rot.quat_to_sixd(local_q[:-1])  # (N-1, j, 6)

    centered = world - np.concatenate(
        [pose.root_positions[:, :1], np.zeros((n, 1)), pose.root_positions[:, 2:3]], axis=1
    )[:, None, :]
    pos_local = _inverse_heading(yaw[:-1], centered[:-1])  # (N-1, j, 3)

    joint_delta = world[1:] - world[:-1]
    vel_joint = _inverse_heading(yaw[:-1], joint_delta)

    feet = contact_joints(skel)
    foot_speed = np.linalg.norm(joint_delta[:, feet], axis=-1)  # (N-1, 4)
    contacts = (foot_speed < CONTACT_SPEED_THRESHOLD).astype(np.float64)

    data = np.concatenate(
        [
            ang_vel[:, None],
            lin_vel_xz,
            height[:, None],
            rot6d.reshape(n - 1, 6 * j),
            pos_local.reshape(n - 1, 3 * j),
            vel_joint.reshape(n - 1, 3 * j),
            contacts,
        ],
        axis=1,
    )
    return FeatureSequence(data, layout=layout, kind=FULL, fps=pose.fps)


def recover_pose(
    feat: FeatureSequence,
    skel: SkeletonSpec,
    initial_heading: float = 0.0,
    initial_xz: tuple[float, float] = (0.0, 0.0),
) -> PoseSequence:
    """Rebuild a pose sequence by integrating velocities from given initial
    conditions and orthonormalizing the 6D rotation columns."""
    if feat.normalized:
        raise DataValidationError("recover_pose expects unnormalized features")
    layout = feat.layout
    j = layout.joints
    if j != skel.num_joints:
        raise DataValidationError("feature layout and skeleton joint counts differ")
    data = feat.data.astype(np.float64)
    n = len(feat)

    ang_vel = data[:, layout.root_angular_vel][:, 0]
    lin_vel = data[:, layout.root_linear_vel]
    height = data[:, layout.root_height][:, 0]
    rot6d = data[:, layout.rotations_6d].reshape(n, j, 6)

    yaw = initial_heading + np.concatenate([[0.0], np.cumsum(ang_vel[:-1])])
    # world-frame step for frame t comes from the heading at frame t
    step_local = np.stack([lin_vel[:, 0], np.zeros(n), lin_vel[:, 1]], axis=1)
    step_world = rot.qrot(rot.yaw_quat(yaw), step_local)
    xz = np.zeros((n, 2))
    xz[0] = initial_xz
    xz[1:] = np.asarray(initial_xz) + np.cumsum(step_world[:-1][:, [0, 2]], axis=0)

    local_q = rot.sixd_to_quat(rot6d)
    root_q = rot.qmul(rot.yaw_quat(yaw), local_q[:, skel.hip_index])
    local_q[:, skel.hip_index] = rot.qnormalize(root_q)
    local_q = rot.qnormalize(local_q)

    root_pos = np.stack([xz[:, 0], height, xz[:, 1]], axis=1)
    return PoseSequence(root_pos, local_q, fps=feat.fps)


@dataclass
class NormalizationStats:
    """Per-column mean and clamped standard deviation."""

    mean: np.ndarray
    std: np.ndarray
    epsilon: float = 1e-6

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float32)
        self.std = np.asarray(self.std, dtype=np.float32)
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise DataValidationError("mean/std must be matching 1-D vectors")
        if np.any(self.std < self.epsilon):
            raise DataValidationError("std entries must be clamped to >= epsilon")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def slice_to(self, width: int) -> "NormalizationStats":
        return NormalizationStats(self.mean[:width], self.std[:width], self.epsilon)


def fit_normalization(corpus: list[FeatureSequence], epsilon: float = 1e-6) -> NormalizationStats:
    """Per-column mean/std over every frame of every sequence."""
    if not corpus:
        raise DataValidationError("normalization corpus is empty")
    width = corpus[0].dim
    for f in corpus:
        if f.dim != width:
            raise DataValidationError("corpus sequences have mixed widths")
        if f.normalized:
            raise DataValidationError("fit_normalization expects unnormalized features")
    stacked = np.concatenate([f.data.astype(np.float64) for f in corpus], axis=0)
    mean = stacked.mean(axis=0)
    std = stacked.std(axis=0)
    dead = std < epsilon
    if np.any(dead):
        warnings.warn(
            f"{int(dead.sum())} zero-variance feature columns; std clamped to {epsilon}",
            stacklevel=2,
        )
        std = np.where(dead, epsilon, std)
    return NormalizationStats(mean, std, epsilon)


def normalize(feat: FeatureSequence, stats: NormalizationStats) -> FeatureSequence:
    if feat.normalized:
        raise DataValidationError("features already normalized")
    if stats.dim != feat.dim:
        raise DataValidationError("stats width does not match features")
    data = (feat.data - stats.mean) / stats.std
    return replace(feat, data=data, normalized=True)


def denormalize(feat: FeatureSequence, stats: NormalizationStats) -> FeatureSequence:
    if not feat.normalized:
        raise DataValidationError("features are not normalized")
    if stats.dim != feat.dim:
        raise DataValidationError("stats width does not match features")
    data = feat.data * stats.std + stats.mean
    return replace(feat, data=data, normalized=False)
