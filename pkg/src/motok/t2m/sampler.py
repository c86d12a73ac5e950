"""Iterative confidence-based decoding with classifier-free guidance.

Generation starts from an all-mask sequence. Every iteration the model is
run with and without the text condition, the logits are fused with guidance
scale s, masked positions are sampled categorically, and the lowest-
confidence positions are re-masked so that after iteration l exactly
ceil(cos(pi*l/(2L)) * N) masks remain; after L iterations none do.
Confidence is the fused log-probability of the sampled token plus Gumbel
noise scaled by a linearly annealed temperature. Tokens kept in an earlier
iteration are never re-sampled.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
import torch

from ..errors import ConfigError
from ..features import FeatureSequence, NormalizationStats
from ..vq.model import MotionVqVae
from ..vq.quantizer import QuantizedMotion
from .model import MaskedMotionTransformer
from .schedule import flat_layout, mask_schedule
from .text import TextEmbeddingSequence


def cfg_logits(cond: torch.Tensor, uncond: torch.Tensor, scale: float) -> torch.Tensor:
    """(1+s) * cond - s * uncond, computed so that s=0 and cond==uncond are
    exact no-ops."""
    if scale == 0:
        return cond
    return cond + scale * (cond - uncond)


def _gumbel(shape, generator: torch.Generator) -> torch.Tensor:
    u = torch.rand(shape, generator=generator)
    return -torch.log(-torch.log(u.clamp_min(1e-20)).clamp_min(1e-20))


@torch.no_grad()
def generate_tokens(
    model: MaskedMotionTransformer,
    lengths: tuple[int, ...],
    text: TextEmbeddingSequence | None,
    iterations: int,
    cfg_scale: float,
    temperature: float,
    generator: torch.Generator,
    trace: list | None = None,
) -> torch.Tensor:
    """Sample one flat token sequence for the given scale lengths."""
    if iterations < 1:
        raise ConfigError("need at least one decoding iteration")
    model.eval()
    cfg = model.cfg
    n_total = sum(lengths)
    scale_ids, positions = flat_layout(lengths)
    tokens = torch.full((n_total,), cfg.mask_id, dtype=torch.long)
    text_batch = text.tokens.unsqueeze(0) if text is not None else None

    for step in range(1, iterations + 1):
        masked = tokens == cfg.mask_id
        cond = model(tokens.unsqueeze(0), scale_ids, positions, text=text_batch)
        uncond = model(tokens.unsqueeze(0), scale_ids, positions, text=None)
        fused = cfg_logits(cond, uncond, cfg_scale).squeeze(0)  # (N, K)

        probs = torch.softmax(fused, dim=-1)
        sampled = torch.multinomial(probs, 1, generator=generator).squeeze(1)
        tokens = torch.where(masked, sampled, tokens)

        logp = torch.log_softmax(fused, dim=-1)
        conf = logp.gather(1, tokens.unsqueeze(1)).squeeze(1)
        anneal = temperature * (1.0 - step / iterations)
        conf = conf + _gumbel(conf.shape, generator) * anneal
        conf[~masked] = float("inf")  # previously kept tokens stay kept

        n_mask = math.ceil(mask_schedule(step / iterations) * n_total)
        if n_mask > 0:
            drop = torch.topk(conf, n_mask, largest=False).indices
            tokens[drop] = cfg.mask_id
        if trace is not None:
            trace.append({"iteration": step, "masked": int((tokens == cfg.mask_id).sum())})
    if bool((tokens == cfg.mask_id).any()):
        raise ConfigError("decoding finished with mask tokens remaining")
    return tokens


@torch.no_grad()
def generate_motion(
    t2m: MaskedMotionTransformer,
    vq: MotionVqVae,
    stats: NormalizationStats,
    caption: str,
    target_frames: int,
    seed: int,
    iterations: int | None = None,
    cfg_scale: float | None = None,
    temperature: float | None = None,
    text: TextEmbeddingSequence | None = None,
    trained_latent_range: tuple[int, int] | None = None,
    fps: float = 30.0,
    trace: list | None = None,
) -> FeatureSequence:
    """Text to denormalized motion features of length n * downscale.

    The caption is embedded by the model's own toy embedder unless
    precomputed `text` features are supplied.
    """
    cfg = t2m.cfg
    iterations = cfg.iterations if iterations is None else iterations
    cfg_scale = cfg.cfg_scale if cfg_scale is None else cfg_scale
    temperature = cfg.temperature if temperature is None else temperature

    n = max(1, target_frames // vq.cfg.downscale)
    if trained_latent_range is not None:
        lo, hi = trained_latent_range
        if n < lo or n > hi:
            warnings.warn(
                f"target length {target_frames} maps to latent length {n}, outside the "
                f"trained range [{lo}, {hi}]; clamping",
                stacklevel=2,
            )
            n = min(max(n, lo), hi)
    lengths = vq.quantizer.lengths_for(n)

    if text is None:
        if t2m.toy_embedder is None:
            raise ConfigError("no text features given and the model has no toy embedder")
        text = t2m.toy_embedder.encode(caption)

    generator = torch.Generator().manual_seed(seed)
    flat = generate_tokens(
        t2m, lengths, text, iterations, cfg_scale, temperature, generator, trace
    )
    qm = QuantizedMotion.from_flat(flat, lengths, vq.quantizer.mode)
    f_hat = vq.quantizer.dequantize_prefix(qm, upto=len(lengths) - 1, n=n)
    decoded = vq.decode(f_hat.squeeze(0) if f_hat.dim() == 3 else f_hat).cpu().numpy()
    data = decoded * stats.std[None, :] + stats.mean[None, :]
    return FeatureSequence(data, fps=fps, normalized=False)
