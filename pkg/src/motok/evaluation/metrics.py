"""Retrieval and distribution metrics over evaluator mean vectors."""

from __future__ import annotations

import numpy as np

from .. import rotations as rot
from ..errors import DataValidationError, NumericError
from ..skeleton import PoseSequence, SkeletonSpec, forward_kinematics


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(mat)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def fid(real: np.ndarray, gen: np.ndarray, eps: float = 1e-6) -> float:
    """Frechet distance between Gaussian fits of the two embedding sets.

    The trace term uses the symmetric PSD square root: eigendecompose
    S_g^(1/2) S_r S_g^(1/2) and clamp negative eigenvalues.
    """
    real = np.asarray(real, dtype=np.float64)
    gen = np.asarray(gen, dtype=np.float64)
    if real.ndim != 2 or gen.ndim != 2 or real.shape[1] != gen.shape[1]:
        raise DataValidationError("embedding sets must be (n, d) with matching d")
    if real.shape[0] < 2 or gen.shape[0] < 2:
        raise DataValidationError("each embedding set needs at least 2 samples")
    if not (np.isfinite(real).all() and np.isfinite(gen).all()):
        raise NumericError("non-finite embedding values")
    mu_r, mu_g = real.mean(axis=0), gen.mean(axis=0)
    d = real.shape[1]
    cov_r = np.cov(real, rowvar=False) + eps * np.eye(d)
    cov_g = np.cov(gen, rowvar=False) + eps * np.eye(d)
    root_g = _psd_sqrt(cov_g)
    inner = root_g @ cov_r @ root_g
    tr_sqrt = np.sqrt(np.clip(np.linalg.eigvalsh(inner), 0.0, None)).sum()
    diff = mu_r - mu_g
    return float(diff @ diff + np.trace(cov_r) + np.trace(cov_g) - 2.0 * tr_sqrt)


def r_precision(
    motion_embs: np.ndarray,
    text_embs: np.ndarray,
    rng: np.random.Generator,
    pool_size: int = 100,
    top_k: tuple[int, ...] = (1, 2, 3),
) -> dict[int, float]:
    """Rank each motion's true caption inside a sampled candidate pool.

    For every motion the pool is its paired text plus pool_size - 1
    distractor texts drawn without replacement; ranking is by Euclidean
    distance between mean vectors.
    """
    motion_embs = np.asarray(motion_embs, dtype=np.float64)
    text_embs = np.asarray(text_embs, dtype=np.float64)
    n = motion_embs.shape[0]
    if text_embs.shape[0] != n:
        raise DataValidationError("motion/text embedding lists must be paired")
    if n < pool_size:
        raise DataValidationError(f"need at least pool_size={pool_size} pairs, have {n}")
    hits = {k: 0 for k in top_k}
    for i in range(n):
        others = rng.choice(n - 1, size=pool_size - 1, replace=False)
        others = np.where(others >= i, others + 1, others)
        d_true = np.linalg.norm(motion_embs[i] - text_embs[i])
        d_pool = np.linalg.norm(motion_embs[i] - text_embs[others], axis=1)
        rank = 1 + int((d_pool < d_true).sum())
        for k in top_k:
            if rank <= k:
                hits[k] += 1
    return {k: hits[k] / n for k in top_k}


def mm_dist(motion_embs: np.ndarray, text_embs: np.ndarray) -> float:
    """Mean Euclidean distance over matched motion/text pairs."""
    motion_embs = np.asarray(motion_embs, dtype=np.float64)
    text_embs = np.asarray(text_embs, dtype=np.float64)
    if motion_embs.shape != text_embs.shape:
        raise DataValidationError("motion/text embedding lists must be paired")
    return float(np.linalg.norm(motion_embs - text_embs, axis=1).mean())


def clip_score(motion_embs: np.ndarray, text_embs: np.ndarray) -> float:
    """Mean cosine similarity over matched pairs."""
    motion_embs = np.asarray(motion_embs, dtype=np.float64)
    text_embs = np.asarray(text_embs, dtype=np.float64)
    if motion_embs.shape != text_embs.shape:
        raise DataValidationError("motion/text embedding lists must be paired")
    num = (motion_embs * text_embs).sum(axis=1)
    den = np.linalg.norm(motion_embs, axis=1) * np.linalg.norm(text_embs, axis=1)
    return float((num / np.maximum(den, 1e-12)).mean())


def mmodality(per_caption_embs: np.ndarray) -> float:
    """Diversity across generations of the same caption.

    Expects (captions, 20, d): the 20 generations are split into 10 disjoint
    pairs (i, i+10); the pairwise distances are averaged per caption, then
    over captions.
    """
    embs = np.asarray(per_caption_embs, dtype=np.float64)
    if embs.ndim != 3 or embs.shape[1] % 2 != 0:
        raise DataValidationError("expected (captions, 2m, d) generation embeddings")
    half = embs.shape[1] // 2
    dists = np.linalg.norm(embs[:, :half] - embs[:, half:], axis=2)
    return float(dists.mean())


def joint_position_error(
    gt: PoseSequence, rec: PoseSequence, skel: SkeletonSpec
) -> float:
    """Mean per-joint world distance in meters after aligning heading and XZ
    position at frame 0."""
    n = min(len(gt), len(rec))
    gt_pos = forward_kinematics(gt, skel)[:n]
    rec_pos = forward_kinematics(rec, skel)[:n]

    yaw_gt = rot.yaw_of(gt.joint_rotations[0, skel.hip_index])
    yaw_rec = rot.yaw_of(rec.joint_rotations[0, skel.hip_index])
    delta = rot.yaw_quat(float(yaw_gt - yaw_rec))
    pivot = rec.root_positions[0] * np.array([1.0, 0.0, 1.0])
    target = gt.root_positions[0] * np.array([1.0, 0.0, 1.0])
    aligned = rot.qrot(np.broadcast_to(delta, rec_pos.shape[:-1] + (4,)).copy(), rec_pos - pivot)
    aligned = aligned + target
    return float(np.linalg.norm(gt_pos - aligned, axis=-1).mean())


def _ci95(values: np.ndarray) -> float:
    if len(values) < 2:
        return 0.0
    return float(1.96 * values.std(ddof=1) / np.sqrt(len(values)))


def metrics_report(metric_fns: dict[str, callable], seed: int, n_repeats: int = 20) -> dict:
    """Run each metric n_repeats times with derived seeds; report mean and CI.

    Each entry of metric_fns maps a name to fn(seed) -> float. Deterministic
    metrics simply repeat to identical values and get a zero-width interval.
    """
    entries = []
    for name, fn in sorted(metric_fns.items()):
        values = np.array([float(fn(seed + r)) for r in range(n_repeats)])
        entries.append(
            {
                "metric": name,
                "value": float(values.mean()),
                "ci95": _ci95(values),
                "seed": seed,
                "n_repeats": n_repeats,
            }
        )
    return {"metrics": entries}
