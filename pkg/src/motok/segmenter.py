"""Cut long sequences into clips at motionless moments.

Per-frame speed is the mean positional speed of the hip and end-effector
joints, Gaussian-smoothed. Strict local minima become candidate cut points
scored by stillness (rho in [0, 1], 1 = stillest trough in the sequence),
each accepted with probability accept_scale * rho, subject to hard minimum
and maximum clip durations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .errors import ConfigError, DataValidationError
from .skeleton import PoseSequence, SkeletonSpec, forward_kinematics


@dataclass
class SegmentationParams:
    sigma: float = 9.0  # Gaussian smoothing std, in frames
    accept_scale: float = 0.5
    min_len_s: float = 4.0
    max_len_s: float = 12.0
    rng_seed: int = 0

    def __post_init__(self):
        if not (0 < self.min_len_s < self.max_len_s):
            raise ConfigError("need 0 < min_len_s < max_len_s")
        if self.sigma <= 0:
            raise ConfigError("sigma must be positive")
        if not (0.0 <= self.accept_scale <= 1.0):
            raise ConfigError("accept_scale must lie in [0, 1]")


@dataclass
class TroughProfile:
    trough_frames: np.ndarray  # strictly increasing frame indices
    rho: np.ndarray  # stillness score per trough, in [0, 1]
    smoothed_speed: np.ndarray  # m/frame, one entry per frame transition

    def __post_init__(self):
        self.trough_frames = np.asarray(self.trough_frames, dtype=np.int64)
        self.rho = np.asarray(self.rho, dtype=np.float64)
        if self.trough_frames.shape != self.rho.shape:
            raise DataValidationError("trough_frames and rho lengths differ")
        if np.any(np.diff(self.trough_frames) <= 0):
            raise DataValidationError("trough_frames must be strictly increasing")
        if np.any((self.rho < 0) | (self.rho > 1)):
            raise DataValidationError("rho values must lie in [0, 1]")


@dataclass
class Segment:
    start_frame: int
    end_frame: int
    flagged: bool = False  # true when shorter than the minimum duration

    def as_dict(self, source_id: str = "") -> dict:
        return {
            "source_id": source_id,
            "start_frame": self.start_frame,
            "end_frame": self.end_frame,
            "flagged": self.flagged,
        }


def compute_troughs(
    pose: PoseSequence, skel: SkeletonSpec, params: SegmentationParams
) -> TroughProfile:
    if len(pose) < 2:
        raise DataValidationError("sequence too short")
    joints = sorted(set([skel.hip_index] + list(skel.end_effectors)))
    world = forward_kinematics(pose, skel)[:, joints]
    speed = np.linalg.norm(world[1:] - world[:-1], axis=-1).mean(axis=-1)
    smoothed = gaussian_filter1d(speed, sigma=params.sigma, mode="reflect", truncate=3.0)

    interior = np.arange(1, len(smoothed) - 1)
    is_min = (smoothed[interior] < smoothed[interior - 1]) & (
        smoothed[interior] < smoothed[interior + 1]
    )
    troughs = interior[is_min]
    if len(troughs) == 0:
        return TroughProfile(np.zeros(0, dtype=np.int64), np.zeros(0), smoothed)
    depths = smoothed[troughs]
    lo, hi = depths.min(), depths.max()
    rho = 1.0 - (depths - lo) / (hi - lo + 1e-8)
    return TroughProfile(troughs, rho, smoothed)


def segment(
    pose: PoseSequence, skel: SkeletonSpec, params: SegmentationParams
) -> list[Segment]:
    """Partition [0, N) into clips. Cuts happen at troughs, drawn in frame
    order with one RNG draw per admissible trough; a cut is forced at the
    latest admissible trough (or the hard frame limit) whenever a clip would
    otherwise exceed the maximum duration.
    """
    n = len(pose)
    fps = pose.fps
    min_f = int(round(params.min_len_s * fps))
    max_f = int(round(params.max_len_s * fps))
    if max_f < 2:
        raise ConfigError("max_len_s spans fewer than 2 frames at this fps")
    if n < min_f:
        return [Segment(0, n, flagged=True)]

    profile = compute_troughs(pose, skel, params)
    troughs = profile.trough_frames
    rho = profile.rho
    rng = np.random.default_rng(params.rng_seed)

    bounds: list[tuple[int, int]] = []
    start = 0
    i = 0
    nt = len(troughs)

    while n - start > max_f:
        chosen = None
        last_admissible = None
        k = i
        while k < nt and troughs[k] <= start + max_f:
            if troughs[k] - start >= min_f:
                last_admissible = k
                if rng.random() < params.accept_scale * rho[k]:
                    chosen = k
                    break
            k += 1
        if chosen is not None:
            cut, i = int(troughs[chosen]), chosen + 1
        elif last_admissible is not None:
            cut, i = int(troughs[last_admissible]), last_admissible + 1
        else:
            cut = start + max_f
            while i < nt and troughs[i] <= cut:
                i += 1
        bounds.append((start, cut))
        start = cut

    while i < nt:
        t = int(troughs[i])
        if t - start >= min_f and t < n and rng.random() < params.accept_scale * rho[i]:
            bounds.append((start, t))
            start = t
        i += 1
    bounds.append((start, n))

    return [Segment(s, e, flagged=(e - s) < min_f) for s, e in bounds]
