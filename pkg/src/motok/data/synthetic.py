"""Procedural toy motions: 20 caption templates, each backed by a family of
parametrized clips, plus long sequences with controlled stillness dips for
segmentation work. Small enough to train every model in the toolkit on a
laptop CPU, distinct enough for retrieval to be meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import rotations as rot
from ..skeleton import PoseSequence, default_skeleton
from .manifest import make_splits

FPS = 30.0

CAPTIONS = [
    "a person waves the right hand above the head",
    "a person waves the left hand above the head",
    "a person walks forward at a steady pace",
    "a person walks in a wide circle to the left",
    "a person crouches down and stands back up repeatedly",
    "a person bounces in place with both arms raised",
    "a person kicks the right leg forward",
    "a person kicks the left leg forward",
    "a person nods the head slowly",
    "a person shakes the head from side to side",
    "a person swings both arms back and forth while standing",
    "a person twists the torso left and right",
    "a person lifts the left knee up and down",
    "a person lifts the right knee up and down",
    "a person bows forward deeply and straightens up",
    "a person steps sideways to the right and back",
    "a person marches in place lifting the knees high",
    "a person reaches both arms straight up and pulses them",
    "a person bends sideways at the waist to the left",
    "a person walks backward slowly",
]

# joint indices in the default skeleton
_SPINE, _SPINE2, _NECK, _HEAD = 1, 3, 5, 7
_LARM, _LFORE = 9, 10
_RARM, _RFORE = 13, 14
_LUPLEG, _LLEG = 16, 17
_RUPLEG, _RLEG = 20, 21

_X, _Y, _Z = 0, 1, 2


@dataclass
class _Family:
    # (joint, axis, amplitude rad, frequency Hz, phase)
    osc: list[tuple[int, int, float, float, float]]
    # (joint, axis, constant angle rad)
    static: list[tuple[int, int, float]]
    forward: float = 0.0  # m/s along the heading
    yaw_rate: float = 0.0  # rad/s
    bob: float = 0.0  # vertical oscillation amplitude, m
    squat: float = 0.0  # slow vertical crouch amplitude, m


_WALK_LEGS = [
    (_LUPLEG, _X, 0.5, 1.0, 0.0),
    (_RUPLEG, _X, 0.5, 1.0, np.pi),
    (_LLEG, _X, -0.6, 1.0, 0.8),
    (_RLEG, _X, -0.6, 1.0, 0.8 + np.pi),
    (_LARM, _Y, 0.25, 1.0, np.pi),
    (_RARM, _Y, 0.25, 1.0, 0.0),
]

FAMILIES: list[_Family] = [
    _Family(osc=[(_RFORE, _Z, 0.5, 2.0, 0.0), (_RARM, _Y, 0.15, 2.0, 0.5)],
            static=[(_RARM, _Z, -2.2)]),
    _Family(osc=[(_LFORE, _Z, -0.5, 2.0, 0.0), (_LARM, _Y, 0.15, 2.0, 0.5)],
            static=[(_LARM, _Z, 2.2)]),
    _Family(osc=list(_WALK_LEGS), static=[], forward=0.8, bob=0.02),
    _Family(osc=list(_WALK_LEGS), static=[], forward=0.6, yaw_rate=0.5, bob=0.02),
    _Family(osc=[(_LLEG, _X, 0.9, 0.5, 0.0), (_RLEG, _X, 0.9, 0.5, 0.0),
                 (_LUPLEG, _X, -0.8, 0.5, 0.0), (_RUPLEG, _X, -0.8, 0.5, 0.0)],
            static=[], squat=0.18),
    _Family(osc=[(_LLEG, _X, 0.3, 2.2, 0.0), (_RLEG, _X, 0.3, 2.2, 0.0)],
            static=[(_LARM, _Z, 2.4), (_RARM, _Z, -2.4)], bob=0.06),
    _Family(osc=[(_RUPLEG, _X, 0.8, 0.8, 0.0), (_RLEG, _X, -0.5, 0.8, 0.7)],
            static=[]),
    _Family(osc=[(_LUPLEG, _X, 0.8, 0.8, 0.0), (_LLEG, _X, -0.5, 0.8, 0.7)],
            static=[]),
    _Family(osc=[(_NECK, _X, 0.35, 0.6, 0.0), (_HEAD, _X, 0.25, 0.6, 0.3)], static=[]),
    _Family(osc=[(_NECK, _Y, 0.45, 0.9, 0.0), (_HEAD, _Y, 0.3, 0.9, 0.3)], static=[]),
    _Family(osc=[(_LARM, _Y, 0.6, 1.1, 0.0), (_RARM, _Y, 0.6, 1.1, np.pi)], static=[]),
    _Family(osc=[(_SPINE, _Y, 0.5, 0.7, 0.0), (_SPINE2, _Y, 0.35, 0.7, 0.4)], static=[]),
    _Family(osc=[(_LUPLEG, _X, 0.7, 0.7, 0.0), (_LLEG, _X, -0.7, 0.7, 0.2)], static=[]),
    _Family(osc=[(_RUPLEG, _X, 0.7, 0.7, 0.0), (_RLEG, _X, -0.7, 0.7, 0.2)], static=[]),
    _Family(osc=[(_SPINE, _X, 0.5, 0.45, 0.0), (_SPINE2, _X, 0.4, 0.45, 0.1)], static=[]),
    _Family(osc=[(_LUPLEG, _Z, 0.35, 0.8, 0.0), (_RUPLEG, _Z, -0.35, 0.8, np.pi)],
            static=[], bob=0.015),
    _Family(osc=[(_LUPLEG, _X, 0.9, 1.3, 0.0), (_RUPLEG, _X, 0.9, 1.3, np.pi),
                 (_LLEG, _X, -0.7, 1.3, 0.5), (_RLEG, _X, -0.7, 1.3, 0.5 + np.pi)],
            static=[], bob=0.03),
    _Family(osc=[(_LFORE, _Z, 0.2, 1.6, 0.0), (_RFORE, _Z, -0.2, 1.6, 0.0)],
            static=[(_LARM, _Z, 2.6), (_RARM, _Z, -2.6)]),
    _Family(osc=[(_SPINE, _Z, 0.35, 0.5, 0.0), (_SPINE2, _Z, 0.25, 0.5, 0.2)],
            static=[(_SPINE, _Z, 0.15)]),
    _Family(osc=list(_WALK_LEGS), static=[], forward=-0.45, bob=0.02),
]

assert len(FAMILIES) == len(CAPTIONS) == 20


def _axis_angle_quat(axis: int, angles: np.ndarray) -> np.ndarray:
    q = np.zeros(angles.shape + (4,))
    q[..., 0] = np.cos(angles / 2.0)
    q[..., 1 + axis] = np.sin(angles / 2.0)
    return q


def family_pose(
    family: int, frames: int, rng: np.random.Generator, fps: float = FPS
) -> PoseSequence:
    """One jittered clip of the given family."""
    spec = FAMILIES[family]
    skel = default_skeleton()
    j = skel.num_joints
    t = np.arange(frames) / fps
    amp_scale = rng.uniform(0.85, 1.15)
    freq_scale = rng.uniform(0.9, 1.1)
    phase0 = rng.uniform(0, 2 * np.pi)

    quats = np.zeros((frames, j, 4))
    quats[..., 0] = 1.0
    for joint, axis, angle in spec.static:
        quats[:, joint] = rot.qmul(
            quats[:, joint], _axis_angle_quat(axis, np.full(frames, angle))
        )
    for joint, axis, amp, freq, phase in spec.osc:
        angles = amp * amp_scale * np.sin(2 * np.pi * freq * freq_scale * t + phase + phase0)
        quats[:, joint] = rot.qmul(quats[:, joint], _axis_angle_quat(axis, angles))

    yaw0 = rng.uniform(0, 2 * np.pi)
    yaw = yaw0 + spec.yaw_rate * t
    heading = np.stack([np.sin(yaw), np.cos(yaw)], axis=1)
    step = spec.forward / fps * heading
    xz = rng.uniform(-1, 1, size=2) + np.concatenate(
        [np.zeros((1, 2)), np.cumsum(step[:-1], axis=0)]
    )
    height = 0.95 + spec.bob * np.sin(2 * np.pi * 2.0 * freq_scale * t + phase0)
    if spec.squat:
        height = height - spec.squat * (
            0.5 + 0.5 * np.sin(2 * np.pi * 0.5 * freq_scale * t + phase0)
        )
    root = np.stack([xz[:, 0], height, xz[:, 1]], axis=1)
    quats[:, skel.hip_index] = rot.qmul(rot.yaw_quat(yaw), quats[:, skel.hip_index])
    return PoseSequence(root, rot.qnormalize(quats), fps=fps)


@dataclass
class ToyClip:
    clip_id: str
    pose: PoseSequence
    caption: str
    family: int


def build_toy_clips(
    n_clips: int = 200,
    seed: int = 0,
    fps: float = FPS,
    min_s: float = 4.0,
    max_s: float = 8.0,
) -> list[ToyClip]:
    rng = np.random.default_rng(seed)
    clips = []
    for k in range(n_clips):
        family = k % len(FAMILIES)
        frames = int(rng.uniform(min_s, max_s) * fps)
        pose = family_pose(family, frames, rng, fps)
        clips.append(
            ToyClip(f"clip{family:02d}_{k:03d}", pose, CAPTIONS[family], family)
        )
    return clips


def write_toy_dataset(root, n_clips: int = 200, seed: int = 0, fps: float = FPS) -> None:
    """Materialize the toy corpus in the standard dataset layout (BVH)."""
    from pathlib import Path

    from ..bvh import export_bvh

    root = Path(root)
    skel = default_skeleton()
    (root / "motions").mkdir(parents=True, exist_ok=True)
    (root / "texts").mkdir(exist_ok=True)
    (root / "splits").mkdir(exist_ok=True)
    clips = build_toy_clips(n_clips, seed, fps)
    scenario = {}
    for clip in clips:
        export_bvh(clip.pose, skel, str(root / "motions" / f"{clip.clip_id}.bvh"))
        (root / "texts" / f"{clip.clip_id}.txt").write_text(clip.caption + "\n")
        scenario[clip.clip_id] = f"family{clip.family:02d}"
    splits = make_splits([c.clip_id for c in clips], seed=seed, scenario=scenario)
    for name, ids in splits.items():
        (root / "splits" / f"{name}.txt").write_text("\n".join(ids) + "\n")


def make_trough_sequence(
    duration_s: float,
    seed: int,
    fps: float = FPS,
    dip_period_s: float = 2.0,
    base_speed: float = 0.9,
) -> PoseSequence:
    """Forward locomotion whose speed dips toward zero at jittered intervals,
    giving the segmenter a controlled supply of troughs of varied depth."""
    rng = np.random.default_rng(seed)
    frames = int(duration_s * fps)
    t = np.arange(frames) / fps
    env = np.ones(frames)
    center = dip_period_s * rng.uniform(0.6, 1.2)
    while center < duration_s:
        depth = rng.uniform(0.55, 1.0)
        width = rng.uniform(0.2, 0.35)
        env -= depth * np.exp(-0.5 * ((t - center) / width) ** 2)
        center += dip_period_s * rng.uniform(0.8, 1.2)
    env = np.clip(env, 0.0, 1.0)

    skel = default_skeleton()
    speed = base_speed / fps * env
    x = np.concatenate([[0.0], np.cumsum(speed[:-1])])
    root = np.stack([x, np.full(frames, 0.95), np.zeros(frames)], axis=1)
    quats = np.zeros((frames, skel.num_joints, 4))
    quats[..., 0] = 1.0
    # arms swing with the same envelope so effector speed follows it too
    angles = 0.3 * env * np.sin(2 * np.pi * 1.2 * t)
    quats[:, _LARM] = _axis_angle_quat(_Y, angles)
    quats[:, _RARM] = _axis_angle_quat(_Y, -angles)
    yaw = np.full(frames, np.pi / 2)  # face +X so the forward motion matches
    quats[:, skel.hip_index] = rot.qmul(rot.yaw_quat(yaw), quats[:, skel.hip_index])
    return PoseSequence(root, rot.qnormalize(quats), fps=fps)
