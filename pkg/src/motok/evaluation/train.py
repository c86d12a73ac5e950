"""Compound-loss training for the retrieval evaluator."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

from ..errors import ConfigError, NumericError
from ..t2m.text import ToyVocabEmbedder
from ..t2m.train_utils import pad_text_batch
from ..tensorio import load_checkpoint, save_checkpoint
from .tmr import TmrConfig, TmrModel

log = logging.getLogger(__name__)


@dataclass
class TmrTrainConfig:
    steps: int = 1000
    lr: float = 1e-4
    seed: int = 0
    log_every: int = 100


def _kl_to_unit(mu: torch.Tensor, lv: torch.Tensor) -> torch.Tensor:
    return 0.5 * (lv.exp() + mu.pow(2) - 1.0 - lv).sum(dim=-1).mean()


def _kl_between(mu_p, lv_p, mu_q, lv_q) -> torch.Tensor:
    var_p, var_q = lv_p.exp(), lv_q.exp()
    kl = 0.5 * (lv_q - lv_p + (var_p + (mu_p - mu_q).pow(2)) / var_q - 1.0)
    return kl.sum(dim=-1).mean()


def info_nce(mu_m: torch.Tensor, mu_t: torch.Tensor, temperature: float) -> torch.Tensor:
    """Symmetric InfoNCE over in-batch negatives on cosine similarities."""
    if mu_m.shape[0] < 2:
        raise ConfigError("InfoNCE is undefined for batches smaller than 2")
    m = F.normalize(mu_m, dim=-1)
    t = F.normalize(mu_t, dim=-1)
    sims = m @ t.T / temperature
    labels = torch.arange(sims.shape[0], device=sims.device)
    return 0.5 * (F.cross_entropy(sims, labels) + F.cross_entropy(sims.T, labels))


def _masked_smooth_l1(pred: torch.Tensor, target: torch.Tensor, pad: torch.Tensor) -> torch.Tensor:
    loss = F.smooth_l1_loss(pred, target, reduction="none").mean(dim=-1)
    valid = ~pad
    return (loss * valid).sum() / valid.sum().clamp_min(1)


def tmr_loss(
    model: TmrModel,
    motion: torch.Tensor,  # (B, N, motion_dim), normalized
    motion_pad: torch.Tensor,  # (B, N) True where padded
    text: torch.Tensor,  # (B, T, text_dim)
    text_pad: torch.Tensor,
    generator: torch.Generator,
    include_nce: bool = True,
    include_text_branch: bool = True,
) -> tuple[torch.Tensor, dict]:
    """Reconstruction from both latents + KL regularizers + mean alignment
    + symmetric InfoNCE. Latents are sampled with reparameterized noise."""
    cfg = model.cfg
    mu_m, lv_m = model.encode_motion(motion, motion_pad)
    z_m = mu_m + (0.5 * lv_m).exp() * torch.randn(mu_m.shape, generator=generator)
    n = motion.shape[1]
    rec = _masked_smooth_l1(model.decode_motion(z_m, n), motion, motion_pad)
    kl = _kl_to_unit(mu_m, lv_m)
    parts: dict[str, float] = {}
    if include_text_branch:
        mu_t, lv_t = model.encode_text(text, text_pad)
        z_t = mu_t + (0.5 * lv_t).exp() * torch.randn(mu_t.shape, generator=generator)
        rec = rec + _masked_smooth_l1(model.decode_motion(z_t, n), motion, motion_pad)
        kl = kl + _kl_to_unit(mu_t, lv_t)
        kl = kl + _kl_between(mu_m, lv_m, mu_t, lv_t) + _kl_between(mu_t, lv_t, mu_m, lv_m)
        emb = F.mse_loss(mu_m, mu_t)
    else:
        emb = motion.new_zeros(())
    nce = (
        info_nce(mu_m, mu_t, cfg.nce_temperature)
        if (include_nce and include_text_branch)
        else motion.new_zeros(())
    )
    total = rec + cfg.lambda_kl * kl + cfg.lambda_e * emb + cfg.lambda_nce * nce
    parts.update(
        {
            "reconstruction": float(rec.detach()),
            "kl": float(kl.detach()),
            "embedding": float(emb.detach()),
            "nce": float(nce.detach()),
        }
    )
    return total, parts


def _pad_motions(motions: list[np.ndarray]) -> tuple[torch.Tensor, torch.Tensor]:
    n_max = max(m.shape[0] for m in motions)
    width = motions[0].shape[1]
    out = torch.zeros(len(motions), n_max, width)
    pad = torch.ones(len(motions), n_max, dtype=torch.bool)
    for i, m in enumerate(motions):
        out[i, : m.shape[0]] = torch.from_numpy(np.asarray(m, dtype=np.float32))
        pad[i, : m.shape[0]] = False
    return out, pad


def train_tmr(
    dataset: list[dict],
    cfg: TmrConfig,
    tcfg: TmrTrainConfig,
    stats_mean: np.ndarray | None = None,
    stats_std: np.ndarray | None = None,
) -> tuple[TmrModel, list[dict]]:
    """Train on samples with "motion" (normalized essential features) and
    "caption" text; a toy vocabulary embedder is built from the captions."""
    if len(dataset) < 2:
        raise ConfigError("evaluator training needs at least 2 samples")
    torch.manual_seed(tcfg.seed)
    gen = torch.Generator().manual_seed(tcfg.seed)
    rng = np.random.default_rng(tcfg.seed)

    vocab = ToyVocabEmbedder.build_vocab([s["caption"] for s in dataset])
    model = TmrModel(cfg, vocab)
    if stats_mean is not None:
        model.set_stats(stats_mean, stats_std)
    model.train()
    opt = torch.optim.Adam(model.parameters(), lr=tcfg.lr)
    history: list[dict] = []

    batch_size = min(cfg.batch_size, len(dataset))
    if batch_size < 2:
        raise ConfigError("InfoNCE is undefined for batches smaller than 2")
    for step in range(tcfg.steps):
        idx = rng.choice(len(dataset), size=batch_size, replace=False)
        motion, motion_pad = _pad_motions([dataset[i]["motion"] for i in idx])
        text, text_pad = model.toy_embedder.encode_batch([dataset[i]["caption"] for i in idx])
        loss, parts = tmr_loss(model, motion, motion_pad, text, text_pad, gen)
        if not torch.isfinite(loss):
            raise NumericError(f"non-finite evaluator loss at step {step}: {parts}")
        opt.zero_grad()
        loss.backward()
        opt.step()
        if step % tcfg.log_every == 0 or step == tcfg.steps - 1:
            history.append({"step": step, "loss": float(loss.detach()), **parts})
            log.info("tmr step %d loss=%.4f nce=%.3f", step, history[-1]["loss"], parts["nce"])
    model.eval()
    return model, history


def save_tmr_checkpoint(path, model: TmrModel, extra: dict | None = None) -> None:
    manifest = {
        "kind": "tmr",
        "config": model.cfg.to_dict(),
        "vocab": model.toy_embedder.vocab if model.toy_embedder is not None else None,
    }
    if extra:
        manifest.update(extra)
    tensors = {f"model.{k}": v.detach().cpu().numpy() for k, v in model.state_dict().items()}
    save_checkpoint(path, manifest, tensors)


def load_tmr_checkpoint(path) -> tuple[TmrModel, dict]:
    manifest, tensors = load_checkpoint(path)
    if manifest.get("kind") != "tmr":
        raise ConfigError(f"checkpoint at {path} is not an evaluator checkpoint")
    cfg = TmrConfig(**manifest["config"])
    model = TmrModel(cfg, manifest.get("vocab"))
    reference = model.state_dict()
    state = {}
    for key, ref in reference.items():
        blob = tensors[f"model.{key}"]
        state[key] = torch.from_numpy(np.array(blob)).to(ref.dtype).reshape(ref.shape)
    model.load_state_dict(state)
    model.eval()
    return model, manifest
