"""Rotation math used by the motion representation.

Quaternions are stored as (w, x, y, z) float arrays with unit norm; all
functions broadcast over leading dimensions. Matrices are (..., 3, 3) with
column vectors, Y is the up axis and +Z the reference forward direction.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError

_AXES = {"X": 0, "Y": 1, "Z": 2}


def qnormalize(q: np.ndarray) -> np.ndarray:
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def qconjugate(q: np.ndarray) -> np.ndarray:
    out = q.copy()
    out[..., 1:] *= -1.0
    return out


def qmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a*b, broadcasting over leading dims."""
    aw, ax, ay, az = (a[..., i] for i in range(4))
    bw, bx, by, bz = (b[..., i] for i in range(4))
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def qrot(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vectors v by unit quaternions q (q v q*)."""
    qvec = q[..., 1:]
    uv = np.cross(qvec, v)
    uuv = np.cross(qvec, uv)
    return v + 2.0 * (q[..., :1] * uv + uuv)


def quat_to_mat(q: np.ndarray) -> np.ndarray:
    w, x, y, z = (q[..., i] for i in range(4))
    xx, yy, zz = x * x, y * y, z * z
    xy, xz, yz = x * y, x * z, y * z
    wx, wy, wz = w * x, w * y, w * z
    m = np.empty(q.shape[:-1] + (3, 3), dtype=q.dtype)
    m[..., 0, 0] = 1.0 - 2.0 * (yy + zz)
    m[..., 0, 1] = 2.0 * (xy - wz)
    m[..., 0, 2] = 2.0 * (xz + wy)
    m[..., 1, 0] = 2.0 * (xy + wz)
    m[..., 1, 1] = 1.0 - 2.0 * (xx + zz)
    m[..., 1, 2] = 2.0 * (yz - wx)
    m[..., 2, 0] = 2.0 * (xz - wy)
    m[..., 2, 1] = 2.0 * (yz + wx)
    m[..., 2, 2] = 1.0 - 2.0 * (xx + yy)
    return m


def mat_to_quat(m: np.ndarray) -> np.ndarray:
    """Rotation matrix to quaternion via the branch-stable variant."""
    m = np.asarray(m)
    w_sq = 1.0 + m[..., 0, 0] + m[..., 1, 1] + m[..., 2, 2]
    x_sq = 1.0 + m[..., 0, 0] - m[..., 1, 1] - m[..., 2, 2]
    y_sq = 1.0 - m[..., 0, 0] + m[..., 1, 1] - m[..., 2, 2]
    z_sq = 1.0 - m[..., 0, 0] - m[..., 1, 1] + m[..., 2, 2]
    cases = np.stack([w_sq, x_sq, y_sq, z_sq], axis=-1)
    best = np.argmax(cases, axis=-1)

    q = np.empty(m.shape[:-2] + (4,), dtype=m.dtype)
    # case w
    s = np.sqrt(np.maximum(w_sq, 1e-12)) * 2.0
    qw = np.stack(
        [
            s / 4.0,
            (m[..., 2, 1] - m[..., 1, 2]) / s,
            (m[..., 0, 2] - m[..., 2, 0]) / s,
            (m[..., 1, 0] - m[..., 0, 1]) / s,
        ],
        axis=-1,
    )
    s = np.sqrt(np.maximum(x_sq, 1e-12)) * 2.0
    qx = np.stack(
        [
            (m[..., 2, 1] - m[..., 1, 2]) / s,
            s / 4.0,
            (m[..., 0, 1] + m[..., 1, 0]) / s,
            (m[..., 0, 2] + m[..., 2, 0]) / s,
        ],
        axis=-1,
    )
    s = np.sqrt(np.maximum(y_sq, 1e-12)) * 2.0
    qy = np.stack(
        [
            (m[..., 0, 2] - m[..., 2, 0]) / s,
            (m[..., 0, 1] + m[..., 1, 0]) / s,
            s / 4.0,
            (m[..., 1, 2] + m[..., 2, 1]) / s,
        ],
        axis=-1,
    )
    s = np.sqrt(np.maximum(z_sq, 1e-12)) * 2.0
    qz = np.stack(
        [
            (m[..., 1, 0] - m[..., 0, 1]) / s,
            (m[..., 0, 2] + m[..., 2, 0]) / s,
            (m[..., 1, 2] + m[..., 2, 1]) / s,
            s / 4.0,
        ],
        axis=-1,
    )
    stacked = np.stack([qw, qx, qy, qz], axis=-2)
    q = np.take_along_axis(stacked, best[..., None, None], axis=-2)[..., 0, :]
    # canonical sign: w >= 0
    q = np.where(q[..., :1] < 0, -q, q)
    return qnormalize(q)


def mat_to_sixd(m: np.ndarray) -> np.ndarray:
    """First two columns of the rotation matrix, column-major flattened.

    Identity maps to [1, 0, 0, 0, 1, 0].
    """
    return np.concatenate([m[..., :, 0], m[..., :, 1]], axis=-1)


def sixd_to_mat(sixd: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    """Gram-Schmidt two 3-vectors back into an orthonormal rotation matrix."""
    a = sixd[..., 0:3]
    b = sixd[..., 3:6]
    na = np.linalg.norm(a, axis=-1, keepdims=True)
    if np.any(na < eps):
        raise NumericError("invalid 6D rotation: first column near zero")
    c0 = a / na
    b_proj = b - np.sum(c0 * b, axis=-1, keepdims=True) * c0
    nb = np.linalg.norm(b_proj, axis=-1, keepdims=True)
    if np.any(nb < eps):
        raise NumericError("invalid 6D rotation: columns parallel")
    c1 = b_proj / nb
    c2 = np.cross(c0, c1)
    return np.stack([c0, c1, c2], axis=-1)


def quat_to_sixd(q: np.ndarray) -> np.ndarray:
    return mat_to_sixd(quat_to_mat(q))


def sixd_to_quat(sixd: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    return mat_to_quat(sixd_to_mat(sixd, eps=eps))


def yaw_quat(angle: np.ndarray | float) -> np.ndarray:
    """Rotation about the +Y axis by `angle` radians."""
    angle = np.asarray(angle, dtype=np.float64)
    half = angle / 2.0
    zeros = np.zeros_like(half)
    return np.stack([np.cos(half), zeros, np.sin(half), zeros], axis=-1)


def yaw_of(q: np.ndarray) -> np.ndarray:
    """Heading angle of a rotation: yaw of the rotated +Z forward vector.

    The decomposition q = yaw_quat(yaw_of(q)) * residual leaves a residual
    whose forward vector stays in the XZ half-plane containing +Z.
    """
    fwd = qrot(q, np.broadcast_to(np.array([0.0, 0.0, 1.0]), q.shape[:-1] + (3,)).copy())
    return np.arctan2(fwd[..., 0], fwd[..., 2])


def remove_yaw(q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split q into (yaw angle, yaw-free remainder) with q = yaw * remainder."""
    yaw = yaw_of(q)
    rem = qmul(qconjugate(yaw_quat(yaw)), q)
    return yaw, qnormalize(rem)


def wrap_angle(a: np.ndarray | float) -> np.ndarray:
    """Wrap angles to (-pi, pi]."""
    a = np.asarray(a)
    wrapped = np.mod(a + np.pi, 2.0 * np.pi) - np.pi
    return np.where(wrapped == -np.pi, np.pi, wrapped)


def _axis_rot(axis: int, angle: np.ndarray) -> np.ndarray:
    c = np.cos(angle)
    s = np.sin(angle)
    m = np.zeros(angle.shape + (3, 3), dtype=np.float64)
    i, j = [(1, 2), (2, 0), (0, 1)][axis]
    m[..., axis, axis] = 1.0
    m[..., i, i] = c
    m[..., i, j] = -s
    m[..., j, i] = s
    m[..., j, j] = c
    return m


def euler_to_mat(angles: np.ndarray, order: str) -> np.ndarray:
    """Compose intrinsic rotations in channel order, angles in radians.

    `order` is a string like "ZYX": the first letter pairs with
    angles[..., 0] and is applied first (leftmost matrix).
    """
    m = _axis_rot(_AXES[order[0]], np.asarray(angles)[..., 0])
    for k, ax in enumerate(order[1:], start=1):
        m = m @ _axis_rot(_AXES[ax], np.asarray(angles)[..., k])
    return m


def mat_to_euler_zyx(m: np.ndarray) -> np.ndarray:
    """Decompose R = Rz(z) Ry(y) Rx(x); returns [z, y, x] in radians."""
    m = np.asarray(m)
    sy = -m[..., 2, 0]
    sy = np.clip(sy, -1.0, 1.0)
    y = np.arcsin(sy)
    near_gimbal = np.abs(sy) > 1.0 - 1e-7
    z = np.where(
        near_gimbal,
        np.arctan2(-m[..., 0, 1], m[..., 1, 1]),
        np.arctan2(m[..., 1, 0], m[..., 0, 0]),
    )
    x = np.where(near_gimbal, 0.0, np.arctan2(m[..., 2, 1], m[..., 2, 2]))
    return np.stack([z, y, x], axis=-1)


def rotation_angle(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """Relative rotation angle between two unit quaternions, in radians."""
    dot = np.abs(np.sum(q1 * q2, axis=-1))
    return 2.0 * np.arccos(np.clip(dot, -1.0, 1.0))


def random_quats(shape: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
    """Uniform random unit quaternions with non-negative w."""
    q = rng.normal(size=shape + (4,))
    q = qnormalize(q)
    return np.where(q[..., :1] < 0, -q, q)
