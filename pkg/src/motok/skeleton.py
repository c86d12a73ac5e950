"""Skeleton description, pose sequences, forward kinematics and mirroring."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rotations as rot
from .errors import DataValidationError

# Default rig: a 24-joint mocap-suit style humanoid, Y-up, +X is the
# character's left, measured in meters.
_DEFAULT_JOINTS = [
    ("Hips", -1, (0.0, 0.0, 0.0)),
    ("Spine", 0, (0.0, 0.10, 0.0)),
    ("Spine1", 1, (0.0, 0.10, 0.0)),
    ("Spine2", 2, (0.0, 0.12, 0.0)),
    ("Spine3", 3, (0.0, 0.12, 0.0)),
    ("Neck", 4, (0.0, 0.10, 0.0)),
    ("Neck1", 5, (0.0, 0.05, 0.0)),
    ("Head", 6, (0.0, 0.08, 0.0)),
    ("LeftShoulder", 4, (0.04, 0.08, 0.0)),
    ("LeftArm", 8, (0.14, 0.0, 0.0)),
    ("LeftForeArm", 9, (0.26, 0.0, 0.0)),
    ("LeftHand", 10, (0.25, 0.0, 0.0)),
    ("RightShoulder", 4, (-0.04, 0.08, 0.0)),
    ("RightArm", 12, (-0.14, 0.0, 0.0)),
    ("RightForeArm", 13, (-0.26, 0.0, 0.0)),
    ("RightHand", 14, (-0.25, 0.0, 0.0)),
    ("LeftUpLeg", 0, (0.09, -0.06, 0.0)),
    ("LeftLeg", 16, (0.0, -0.42, 0.0)),
    ("LeftFoot", 17, (0.0, -0.43, 0.0)),
    ("LeftToe", 18, (0.0, -0.06, 0.13)),
    ("RightUpLeg", 0, (-0.09, -0.06, 0.0)),
    ("RightLeg", 20, (0.0, -0.42, 0.0)),
    ("RightFoot", 21, (0.0, -0.43, 0.0)),
    ("RightToe", 22, (0.0, -0.06, 0.13)),
]


@dataclass
class SkeletonSpec:
    """Joint hierarchy with rest offsets and mirroring metadata.

    parents[i] is the parent joint index, -1 for the root. left_right_pairs
    lists (left, right) index pairs swapped by mirroring; end_effectors are
    the joints whose world speed drives segmentation (hands, feet, head).
    """

    joint_names: list[str]
    parents: np.ndarray
    offsets: np.ndarray
    left_right_pairs: list[tuple[int, int]] = field(default_factory=list)
    end_effectors: list[int] = field(default_factory=list)
    hip_index: int = 0

    def __post_init__(self):
        self.parents = np.asarray(self.parents, dtype=np.int64)
        self.offsets = np.asarray(self.offsets, dtype=np.float64)
        j = len(self.joint_names)
        if self.parents.shape != (j,) or self.offsets.shape != (j, 3):
            raise DataValidationError("skeleton arrays inconsistent with joint count")
        if self.parents[self.hip_index] != -1:
            raise DataValidationError("hip joint must be the tree root")
        # every non-root joint must reach the root without cycles
        for i in range(j):
            seen, k = set(), i
            while self.parents[k] != -1:
                if k in seen:
                    raise DataValidationError("parent indices contain a cycle")
                seen.add(k)
                k = int(self.parents[k])
            if k != self.hip_index:
                raise DataValidationError("parents do not form a tree rooted at the hip")
        used = [i for pair in self.left_right_pairs for i in pair]
        if len(used) != len(set(used)):
            raise DataValidationError("left_right_pairs overlap")

    @property
    def num_joints(self) -> int:
        return len(self.joint_names)

    def mirror_permutation(self) -> np.ndarray:
        """Joint index permutation that swaps every left/right pair."""
        perm = np.arange(self.num_joints)
        for left, right in self.left_right_pairs:
            perm[left], perm[right] = right, left
        return perm


def default_skeleton() -> SkeletonSpec:
    names = [name for name, _, _ in _DEFAULT_JOINTS]
    parents = [p for _, p, _ in _DEFAULT_JOINTS]
    offsets = [o for _, _, o in _DEFAULT_JOINTS]
    pairs = [(8, 12), (9, 13), (10, 14), (11, 15), (16, 20), (17, 21), (18, 22), (19, 23)]
    effectors = [names.index(n) for n in ("LeftHand", "RightHand", "LeftFoot", "RightFoot", "Head")]
    return SkeletonSpec(
        joint_names=names,
        parents=np.array(parents),
        offsets=np.array(offsets),
        left_right_pairs=pairs,
        end_effectors=effectors,
        hip_index=0,
    )


# Foot joints used for the binary contact features, in feature-column order:
# left heel, left toe, right heel, right toe.
def contact_joints(skel: SkeletonSpec) -> list[int]:
    wanted = ("LeftFoot", "LeftToe", "RightFoot", "RightToe")
    try:
        return [skel.joint_names.index(n) for n in wanted]
    except ValueError:
        # fall back to the foot end-effectors duplicated heel/toe
        feet = [i for i in skel.end_effectors if "foot" in skel.joint_names[i].lower()]
        if len(feet) != 2:
            raise DataValidationError("cannot identify contact joints on this skeleton")
        return [feet[0], feet[0], feet[1], feet[1]]


@dataclass
class PoseSequence:
    """World root trajectory plus local (parent-relative) joint rotations."""

    root_positions: np.ndarray  # (N, 3) meters
    joint_rotations: np.ndarray  # (N, j, 4) unit quaternions, wxyz
    fps: float = 30.0

    def __post_init__(self):
        self.root_positions = np.asarray(self.root_positions, dtype=np.float64)
        self.joint_rotations = np.asarray(self.joint_rotations, dtype=np.float64)
        if self.root_positions.ndim != 2 or self.root_positions.shape[1] != 3:
            raise DataValidationError("root_positions must be (N, 3)")
        if self.joint_rotations.ndim != 3 or self.joint_rotations.shape[2] != 4:
            raise DataValidationError("joint_rotations must be (N, j, 4)")
        if len(self) < 1:
            raise DataValidationError("pose sequence must contain at least one frame")
        if self.fps <= 0:
            raise DataValidationError("fps must be positive")
        norms = np.linalg.norm(self.joint_rotations, axis=-1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise DataValidationError("joint rotations must be unit quaternions")

    def __len__(self) -> int:
        return self.root_positions.shape[0]

    @property
    def num_joints(self) -> int:
        return self.joint_rotations.shape[1]

    @property
    def duration_s(self) -> float:
        return len(self) / self.fps

    def slice(self, start: int, end: int) -> "PoseSequence":
        return PoseSequence(
            self.root_positions[start:end].copy(),
            self.joint_rotations[start:end].copy(),
            fps=self.fps,
        )


def forward_kinematics(pose: PoseSequence, skel: SkeletonSpec) -> np.ndarray:
    """World positions (N, j, 3) for every joint."""
    n, j = len(pose), skel.num_joints
    world_rot = np.empty((n, j, 4))
    world_pos = np.empty((n, j, 3))
    for i in range(j):
        p = int(skel.parents[i])
        if p == -1:
            world_rot[:, i] = pose.joint_rotations[:, i]
            world_pos[:, i] = pose.root_positions
        else:
            world_pos[:, i] = world_pos[:, p] + rot.qrot(
                world_rot[:, p], np.broadcast_to(skel.offsets[i], (n, 3)).copy()
            )
            world_rot[:, i] = rot.qmul(world_rot[:, p], pose.joint_rotations[:, i])
    return world_pos


def mirror_pose(pose: PoseSequence, skel: SkeletonSpec) -> PoseSequence:
    """Reflect the motion across the sagittal (YZ) plane.

    Root X is negated, left/right joints swap, and every local rotation is
    conjugated by the reflection, which for quaternions negates the y and z
    components. Applying this twice restores the input exactly.
    """
    if len(skel.left_right_pairs) == 0:
        raise DataValidationError("skeleton has no left/right pairs to mirror")
    perm = skel.mirror_permutation()
    for left, right in skel.left_right_pairs:
        mirrored_offset = skel.offsets[right] * np.array([-1.0, 1.0, 1.0])
        if not np.allclose(skel.offsets[left], mirrored_offset, atol=1e-9):
            raise DataValidationError(
                f"offsets of pair ({skel.joint_names[left]}, {skel.joint_names[right]}) "
                "are not mirror symmetric"
            )
    root = pose.root_positions * np.array([-1.0, 1.0, 1.0])
    quats = pose.joint_rotations[:, perm].copy()
    quats[..., 2] *= -1.0
    quats[..., 3] *= -1.0
    return PoseSequence(root, quats, fps=pose.fps)
