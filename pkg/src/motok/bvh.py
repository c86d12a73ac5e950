"""BVH reader/writer.

The writer emits a fixed dialect: 2-space indentation, root with
XYZ-position + ZYX-rotation channels, every other joint ZYX rotations only,
angles in degrees, and a "Frame Time:" line equal to 1/fps. The reader is
tolerant: any indentation, any per-joint rotation order, optional position
channels on non-root joints (values ignored), End Sites skipped.
"""

from __future__ import annotations

import numpy as np

from . import rotations as rot
from .errors import BvhParseError
from .skeleton import PoseSequence, SkeletonSpec

_CHANNEL_AXES = {
    "Xrotation": "X",
    "Yrotation": "Y",
    "Zrotation": "Z",
}
_POSITION_CHANNELS = {"Xposition": 0, "Yposition": 1, "Zposition": 2}


def export_bvh(pose: PoseSequence, skel: SkeletonSpec, path: str) -> None:
    """Write the sequence as BVH text."""
    lines: list[str] = ["HIERARCHY"]
    children: dict[int, list[int]] = {i: [] for i in range(skel.num_joints)}
    for i, p in enumerate(skel.parents):
        if p >= 0:
            children[int(p)].append(i)

    def emit(idx: int, depth: int, keyword: str) -> None:
        pad = "  " * depth
        lines.append(f"{pad}{keyword} {skel.joint_names[idx]}")
        lines.append(f"{pad}{{")
        off = skel.offsets[idx]
        lines.append(f"{pad}  OFFSET {off[0]:.6f} {off[1]:.6f} {off[2]:.6f}")
        if keyword == "ROOT":
            lines.append(
                f"{pad}  CHANNELS 6 Xposition Yposition Zposition "
                "Zrotation Yrotation Xrotation"
            )
        else:
            lines.append(f"{pad}  CHANNELS 3 Zrotation Yrotation Xrotation")
        if children[idx]:
            for c in children[idx]:
                emit(c, depth + 1, "JOINT")
        else:
            lines.append(f"{pad}  End Site")
            lines.append(f"{pad}  {{")
            lines.append(f"{pad}    OFFSET 0.000000 0.000000 0.000000")
            lines.append(f"{pad}  }}")
        lines.append(f"{pad}}}")

    emit(skel.hip_index, 0, "ROOT")
    lines.append("MOTION")
    lines.append(f"Frames: {len(pose)}")
    lines.append(f"Frame Time: {1.0 / pose.fps:.8f}")

    euler_deg = np.degrees(rot.mat_to_euler_zyx(rot.quat_to_mat(pose.joint_rotations)))
    order = _traversal_order(skel)
    for f in range(len(pose)):
        vals = list(pose.root_positions[f])
        for idx in order:
            vals.extend(euler_deg[f, idx])
        lines.append(" ".join(f"{v:.6f}" for v in vals))

    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _traversal_order(skel: SkeletonSpec) -> list[int]:
    """Depth-first joint order matching the hierarchy the writer emits."""
    children: dict[int, list[int]] = {i: [] for i in range(skel.num_joints)}
    for i, p in enumerate(skel.parents):
        if p >= 0:
            children[int(p)].append(i)
    order: list[int] = []

    def walk(i: int) -> None:
        order.append(i)
        for c in children[i]:
            walk(c)

    walk(skel.hip_index)
    return order


class _Reader:
    def __init__(self, path: str):
        with open(path, "r", encoding="utf-8") as fh:
            self.raw = fh.readlines()
        self.pos = 0

    def next(self) -> tuple[int, list[str]]:
        while self.pos < len(self.raw):
            self.pos += 1
            tokens = self.raw[self.pos - 1].split()
            if tokens:
                return self.pos, tokens
        raise BvhParseError("unexpected end of file", len(self.raw))


def import_bvh(path: str) -> tuple[PoseSequence, SkeletonSpec]:
    """Parse a BVH file into a pose sequence and the skeleton it declares."""
    r = _Reader(path)
    ln, tok = r.next()
    if tok[0] != "HIERARCHY":
        raise BvhParseError("expected HIERARCHY", ln)

    names: list[str] = []
    parents: list[int] = []
    offsets: list[list[float]] = []
    channels: list[list[str]] = []
    stack: list[int] = []

    ln, tok = r.next()
    while tok[0] != "MOTION":
        if tok[0] in ("ROOT", "JOINT"):
            if tok[0] == "ROOT" and names:
                raise BvhParseError("multiple ROOT declarations", ln)
            if tok[0] == "JOINT" and not stack:
                raise BvhParseError("JOINT outside of a ROOT block", ln)
            idx = len(names)
            names.append("_".join(tok[1:]) if len(tok) > 1 else f"joint{idx}")
            parents.append(stack[-1] if stack else -1)
            ln, tok = r.next()
            if tok[0] != "{":
                raise BvhParseError("expected '{' after joint name", ln)
            stack.append(idx)
            ln, tok = r.next()
            if tok[0] != "OFFSET" or len(tok) != 4:
                raise BvhParseError("expected OFFSET with three values", ln)
            try:
                offsets.append([float(v) for v in tok[1:]])
            except ValueError:
                raise BvhParseError("non-numeric OFFSET value", ln) from None
            ln, tok = r.next()
            if tok[0] != "CHANNELS":
                raise BvhParseError("expected CHANNELS", ln)
            try:
                count = int(tok[1])
            except (IndexError, ValueError):
                raise BvhParseError("bad CHANNELS count", ln) from None
            chans = tok[2:]
            if len(chans) != count:
                raise BvhParseError("channel count mismatch", ln)
            for c in chans:
                if c not in _CHANNEL_AXES and c not in _POSITION_CHANNELS:
                    raise BvhParseError(f"unknown channel {c!r}", ln)
            channels.append(chans)
        elif tok[0] == "End":
            ln, tok = r.next()
            if tok[0] != "{":
                raise BvhParseError("expected '{' after End Site", ln)
            ln, tok = r.next()
            if tok[0] != "OFFSET":
                raise BvhParseError("expected OFFSET in End Site", ln)
            ln, tok = r.next()
            if tok[0] != "}":
                raise BvhParseError("expected '}' closing End Site", ln)
        elif tok[0] == "}":
            if not stack:
                raise BvhParseError("unbalanced '}'", ln)
            stack.pop()
        else:
            raise BvhParseError(f"unexpected token {tok[0]!r} in hierarchy", ln)
        ln, tok = r.next()
    if stack:
        raise BvhParseError("unclosed joint block at MOTION", ln)
    if not names:
        raise BvhParseError("no joints declared", ln)

    ln, tok = r.next()
    if tok[0] != "Frames:":
        raise BvhParseError("expected 'Frames:'", ln)
    try:
        n_frames = int(tok[1])
    except (IndexError, ValueError):
        raise BvhParseError("bad frame count", ln) from None
    ln, tok = r.next()
    if tok[0] != "Frame" or len(tok) < 3 or tok[1] != "Time:":
        raise BvhParseError("expected 'Frame Time:'", ln)
    try:
        frame_time = float(tok[2])
    except ValueError:
        raise BvhParseError("bad frame time", ln) from None
    if frame_time <= 0:
        raise BvhParseError("frame time must be positive", ln)

    total = sum(len(c) for c in channels)
    j = len(names)
    root_pos = np.zeros((n_frames, 3))
    quats = np.zeros((n_frames, j, 4))
    quats[..., 0] = 1.0
    for f in range(n_frames):
        ln, tok = r.next()
        if len(tok) != total:
            raise BvhParseError(
                f"motion row has {len(tok)} values, expected {total}", ln
            )
        try:
            vals = [float(v) for v in tok]
        except ValueError:
            raise BvhParseError("non-numeric motion value", ln) from None
        cursor = 0
        for idx in range(j):
            chans = channels[idx]
            angles: list[float] = []
            axes = ""
            for c in chans:
                v = vals[cursor]
                cursor += 1
                if c in _POSITION_CHANNELS:
                    if idx == 0:
                        root_pos[f, _POSITION_CHANNELS[c]] = v
                else:
                    axes += _CHANNEL_AXES[c]
                    angles.append(v)
            if axes:
                m = rot.euler_to_mat(np.radians(np.array(angles)), axes)
                quats[f, idx] = rot.mat_to_quat(m)

    skel = SkeletonSpec(
        joint_names=names,
        parents=np.array(parents),
        offsets=np.array(offsets),
        left_right_pairs=_infer_pairs(names),
        end_effectors=_infer_effectors(names, parents),
        hip_index=0,
    )
    pose = PoseSequence(root_pos, rot.qnormalize(quats), fps=1.0 / frame_time)
    return pose, skel


def _infer_pairs(names: list[str]) -> list[tuple[int, int]]:
    pairs = []
    for i, name in enumerate(names):
        if name.startswith("Left"):
            twin = "Right" + name[4:]
            if twin in names:
                pairs.append((i, names.index(twin)))
    return pairs


def _infer_effectors(names: list[str], parents: list[int]) -> list[int]:
    found = [i for i, n in enumerate(names) if n.endswith(("Hand", "Foot")) or n == "Head"]
    if found:
        return found
    return [i for i in range(len(names)) if i not in set(p for p in parents if p >= 0)]
