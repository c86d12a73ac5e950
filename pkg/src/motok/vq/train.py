"""Training, checkpointing and the per-scale capacity probe for the VQ-VAE."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
import torch

from ..errors import ConfigError, NumericError
from ..features import FeatureSequence, NormalizationStats
from ..tensorio import load_checkpoint, save_checkpoint
from .codebook import perplexity
from .model import MotionVqVae, VqConfig, total_vq_loss
from .quantizer import QuantizedMotion

log = logging.getLogger(__name__)


@dataclass
class VqTrainConfig:
    epochs: int = 50
    batch_size: int = 256
    lr: float = 2e-4
    window: int = 64  # crop length in frames, multiple of downscale
    seed: int = 0


def _window_pool(corpus: list[FeatureSequence], window: int) -> list[np.ndarray]:
    usable = [f.data for f in corpus if len(f) >= window]
    if not usable:
        raise ConfigError("no sequence is long enough for the training window")
    if len(usable) < len(corpus):
        warnings.warn(
            f"{len(corpus) - len(usable)} clips shorter than the {window}-frame window were skipped",
            stacklevel=2,
        )
    return usable


def train_vq(
    corpus: list[FeatureSequence],
    cfg: VqConfig,
    tcfg: VqTrainConfig,
) -> tuple[MotionVqVae, list[dict]]:
    """Train on normalized features; returns the model and per-epoch history."""
    if any(not f.normalized for f in corpus):
        raise ConfigError("train_vq expects normalized features")
    if tcfg.window % cfg.downscale != 0:
        raise ConfigError("window must be a multiple of the downscale factor")
    torch.manual_seed(tcfg.seed)
    gen = torch.Generator().manual_seed(tcfg.seed)
    rng = np.random.default_rng(tcfg.seed)

    pool = _window_pool(corpus, tcfg.window)
    model = MotionVqVae(cfg)
    opt = torch.optim.Adam(model.parameters(), lr=tcfg.lr)
    history: list[dict] = []

    for epoch in range(tcfg.epochs):
        order = rng.permutation(len(pool))
        epoch_tokens: list[torch.Tensor] = []
        mse_sum, n_batches = 0.0, 0
        for s in range(0, len(order), tcfg.batch_size):
            idx = order[s : s + tcfg.batch_size]
            batch = np.stack(
                [
                    pool[i][
                        (o := rng.integers(0, len(pool[i]) - tcfg.window + 1)) : o + tcfg.window
                    ]
                    for i in idx
                ]
            )
            x = torch.from_numpy(batch).float()
            out = model(x)
            loss, parts = total_vq_loss(x, out, cfg)
            if not torch.isfinite(loss):
                raise NumericError(
                    f"non-finite VQ loss at epoch {epoch} step {n_batches}: {parts}"
                )
            opt.zero_grad()
            loss.backward()
            opt.step()
            model.quantizer.ema_step(out, generator=gen)
            with torch.no_grad():
                mse_sum += float(((out["recon"] - x) ** 2).mean())
            epoch_tokens.append(torch.cat([t.reshape(-1) for t in out["tokens"]]))
            n_batches += 1
        ppl = perplexity(torch.cat(epoch_tokens), cfg.num_codes)
        history.append(
            {"epoch": epoch, "recon_mse": mse_sum / max(1, n_batches), "perplexity": ppl}
        )
        log.info("vq epoch %d recon_mse=%.5f perplexity=%.1f", epoch, history[-1]["recon_mse"], ppl)
    return model, history


def save_vq_checkpoint(
    path,
    model: MotionVqVae,
    stats: NormalizationStats,
    fps: float = 30.0,
    extra: dict | None = None,
) -> None:
    manifest = {
        "kind": "vq",
        "config": model.cfg.to_dict(),
        "stats": {"epsilon": stats.epsilon},
        "fps": fps,
    }
    if extra:
        manifest.update(extra)
    tensors = {f"model.{k}": v.detach().cpu().numpy() for k, v in model.state_dict().items()}
    tensors["stats.mean"] = stats.mean
    tensors["stats.std"] = stats.std
    save_checkpoint(path, manifest, tensors)


def load_vq_checkpoint(path) -> tuple[MotionVqVae, NormalizationStats, dict]:
    manifest, tensors = load_checkpoint(path)
    if manifest.get("kind") != "vq":
        raise ConfigError(f"checkpoint at {path} is not a VQ checkpoint")
    cfg = VqConfig(**manifest["config"])
    model = MotionVqVae(cfg)
    reference = model.state_dict()
    state = {}
    for key, ref in reference.items():
        blob = tensors[f"model.{key}"]
        state[key] = torch.from_numpy(np.array(blob)).to(ref.dtype).reshape(ref.shape)
    model.load_state_dict(state)
    model.eval()
    stats = NormalizationStats(
        tensors["stats.mean"], tensors["stats.std"], manifest["stats"]["epsilon"]
    )
    return model, stats, manifest


@torch.no_grad()
def tokenize_features(model: MotionVqVae, data: np.ndarray) -> QuantizedMotion:
    """Quantize one normalized feature matrix into per-scale token sequences."""
    x = torch.from_numpy(np.asarray(data, dtype=np.float32))
    f = model.encode(x)
    out = model.quantizer(f.unsqueeze(0))
    return QuantizedMotion(
        [t.squeeze(0) for t in out["tokens"]], out["lengths"], model.quantizer.mode
    )


@torch.no_grad()
def decode_tokens(model: MotionVqVae, qm: QuantizedMotion) -> np.ndarray:
    """Tokens back to a normalized feature matrix of length n * downscale."""
    n = qm.lengths[-1]
    f_hat = model.quantizer.dequantize_prefix(qm, upto=len(qm.lengths) - 1, n=n)
    return model.decode(f_hat.squeeze(0) if f_hat.dim() == 3 else f_hat).cpu().numpy()


@torch.no_grad()
def capacity_probe(model: MotionVqVae, corpus: list[np.ndarray]) -> list[dict]:
    """Reconstruction error using only the first v+1 scales, for every v.

    Feeds each clip through the encoder once, then decodes progressively
    larger prefixes of the quantized scales. Errors are feature-space MSE in
    normalized units, averaged over clips.
    """
    layers = model.quantizer.num_layers
    sums = np.zeros(layers)
    tokens = np.zeros(layers)
    count = 0
    for data in corpus:
        x = torch.from_numpy(np.asarray(data, dtype=np.float32)).unsqueeze(0)
        f = model.encoder(model._pad(x))
        out = model.quantizer(f)
        n = f.shape[1]
        for v in range(layers):
            prefix = model.quantizer.dequantize_prefix(out, upto=v, n=n)
            recon = model.decoder(prefix)[:, : x.shape[1]]
            sums[v] += float(((recon - x) ** 2).mean())
            tokens[v] = sum(out["lengths"][: v + 1])
        count += 1
    return [
        {"scales": v + 1, "tokens_per_clip": int(tokens[v]), "recon_mse": sums[v] / count}
        for v in range(layers)
    ]


def probe_csv(rows: list[dict]) -> str:
    lines = ["scales,tokens_per_clip,recon_mse"]
    for r in rows:
        lines.append(f"{r['scales']},{r['tokens_per_clip']},{r['recon_mse']:.8f}")
    return "\n".join(lines) + "\n"
