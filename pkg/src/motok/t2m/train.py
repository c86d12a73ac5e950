"""Masked-token training for the text-to-motion transformer."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

from ..errors import ConfigError, NumericError
from ..tensorio import load_checkpoint, save_checkpoint
from .model import MaskedMotionTransformer, T2mConfig
from .schedule import corrupt_for_training, flat_layout
from .text import TextEmbeddingStore
from .train_utils import pad_text_batch

log = logging.getLogger(__name__)


@dataclass
class T2mTrainConfig:
    steps: int = 2000
    batch_size: int = 64
    lr: float = 2e-4
    seed: int = 0
    log_every: int = 200


def _collate(
    samples: list[dict],
    idx: np.ndarray,
    cfg: T2mConfig,
    rng: np.random.Generator,
    gen: torch.Generator,
) -> dict:
    """Corrupt and pad a batch of flat token sequences."""
    rows = [samples[i] for i in idx]
    n_max = max(len(r["tokens"]) for r in rows)
    b = len(rows)
    tokens = torch.full((b, n_max), cfg.pad_id, dtype=torch.long)
    targets = torch.zeros((b, n_max), dtype=torch.long)
    selected = torch.zeros((b, n_max), dtype=torch.bool)
    pad = torch.ones((b, n_max), dtype=torch.bool)
    scale_ids = torch.zeros((b, n_max), dtype=torch.long)
    positions = torch.zeros((b, n_max), dtype=torch.long)
    for k, row in enumerate(rows):
        seq = torch.from_numpy(np.asarray(row["tokens"], dtype=np.int64))
        n = seq.shape[0]
        tau = 1.0 - float(rng.random())  # (0, 1]
        corrupted, sel = corrupt_for_training(seq, tau, gen, cfg.num_codes, cfg.mask_id)
        sids, pos = flat_layout(tuple(row["lengths"]))
        tokens[k, :n] = corrupted
        targets[k, :n] = seq
        selected[k, :n] = sel
        pad[k, :n] = False
        scale_ids[k, :n] = sids
        positions[k, :n] = pos
    return {
        "tokens": tokens,
        "targets": targets,
        "selected": selected,
        "pad": pad,
        "scale_ids": scale_ids,
        "positions": positions,
        "captions": [r.get("caption", "") for r in rows],
        "caption_ids": [r.get("caption_id", "") for r in rows],
    }


def training_step(
    model: MaskedMotionTransformer,
    batch: dict,
    gen: torch.Generator,
    text_store: TextEmbeddingStore | None = None,
) -> torch.Tensor:
    """Masked cross-entropy with per-element condition dropout."""
    cfg = model.cfg
    if model.toy_embedder is not None:
        text, text_pad = model.toy_embedder.encode_batch(batch["captions"])
    else:
        if text_store is None:
            raise ConfigError("store-mode training needs a text embedding store")
        feats = [text_store.load(cid).tokens for cid in batch["caption_ids"]]
        text, text_pad = pad_text_batch(feats)
    uncond = torch.rand(len(batch["captions"]), generator=gen) < cfg.cfg_dropout
    logits = model(
        batch["tokens"],
        batch["scale_ids"],
        batch["positions"],
        pad_mask=batch["pad"],
        text=text,
        text_pad=text_pad,
        uncond_mask=uncond,
    )
    sel = batch["selected"]
    return F.cross_entropy(logits[sel], batch["targets"][sel])


def train_t2m(
    samples: list[dict],
    cfg: T2mConfig,
    tcfg: T2mTrainConfig,
    text_store: TextEmbeddingStore | None = None,
) -> tuple[MaskedMotionTransformer, list[dict]]:
    """Train from tokenized clips. Each sample needs "tokens" (flat int64),
    "lengths", and either "caption" (toy embedder) or "caption_id" (store).
    """
    if not samples:
        raise ConfigError("no training samples")
    torch.manual_seed(tcfg.seed)
    gen = torch.Generator().manual_seed(tcfg.seed)
    rng = np.random.default_rng(tcfg.seed)

    toy_vocab = None
    if text_store is None:
        captions = [s.get("caption", "") for s in samples]
        if any(not c for c in captions):
            raise ConfigError("samples lack captions; supply a text store instead")
        from .text import ToyVocabEmbedder

        toy_vocab = ToyVocabEmbedder.build_vocab(captions)
    model = MaskedMotionTransformer(cfg, toy_vocab)
    model.train()
    opt = torch.optim.Adam(model.parameters(), lr=tcfg.lr)
    history: list[dict] = []

    for step in range(tcfg.steps):
        idx = rng.integers(0, len(samples), size=min(tcfg.batch_size, len(samples)))
        batch = _collate(samples, idx, cfg, rng, gen)
        loss = training_step(model, batch, gen, text_store)
        if not torch.isfinite(loss):
            raise NumericError(f"non-finite transformer loss at step {step}")
        opt.zero_grad()
        loss.backward()
        opt.step()
        if step % tcfg.log_every == 0 or step == tcfg.steps - 1:
            history.append({"step": step, "loss": float(loss.detach())})
            log.info("t2m step %d loss=%.4f", step, history[-1]["loss"])

    ns = [int(s["lengths"][-1]) for s in samples]
    model.trained_latent_range = (min(ns), max(ns))
    model.eval()
    return model, history


def save_t2m_checkpoint(path, model: MaskedMotionTransformer, extra: dict | None = None) -> None:
    manifest = {
        "kind": "t2m",
        "config": model.cfg.to_dict(),
        "vocab": model.toy_embedder.vocab if model.toy_embedder is not None else None,
        "trained_latent_range": list(getattr(model, "trained_latent_range", (1, 10**6))),
    }
    if extra:
        manifest.update(extra)
    tensors = {f"model.{k}": v.detach().cpu().numpy() for k, v in model.state_dict().items()}
    save_checkpoint(path, manifest, tensors)


def load_t2m_checkpoint(path, expect_conditioning: str | None = None):
    manifest, tensors = load_checkpoint(path)
    if manifest.get("kind") != "t2m":
        raise ConfigError(f"checkpoint at {path} is not a transformer checkpoint")
    cfg = T2mConfig(**manifest["config"])
    if expect_conditioning is not None and cfg.conditioning != expect_conditioning:
        raise ConfigError(
            f"checkpoint conditioning is {cfg.conditioning!r}; refusing to run as "
            f"{expect_conditioning!r}"
        )
    model = MaskedMotionTransformer(cfg, manifest.get("vocab"))
    reference = model.state_dict()
    state = {}
    for key, ref in reference.items():
        blob = tensors[f"model.{key}"]
        state[key] = torch.from_numpy(np.array(blob)).to(ref.dtype).reshape(ref.shape)
    model.load_state_dict(state)
    model.trained_latent_range = tuple(manifest["trained_latent_range"])
    model.eval()
    return model, manifest
