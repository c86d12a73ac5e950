"""Dual-encoder retrieval model used for evaluation.

A motion encoder and a text encoder each append two learned query timesteps
to their input sequence and read the distribution parameters (mean and
log-variance) off those two output positions. A motion decoder reconstructs
the motion from either latent so the embeddings stay faithful to motion
content rather than text alignment alone. Metrics consume the mean vectors.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import torch
from torch import nn

from ..errors import ConfigError, DataValidationError
from ..t2m.text import ToyVocabEmbedder

MOTION = "motion"
TEXT = "text"


@dataclass
class TmrConfig:
    motion_dim: int = 148
    text_dim: int = 512
    dim: int = 256
    layers: int = 6
    heads: int = 4
    ff: int = 1024
    dropout: float = 0.1
    lambda_e: float = 1e-5
    lambda_kl: float = 1e-5
    lambda_nce: float = 0.1
    nce_temperature: float = 0.1
    batch_size: int = 64

    def __post_init__(self):
        if min(self.motion_dim, self.text_dim, self.dim, self.layers, self.heads, self.ff) < 1:
            raise ConfigError("evaluator dimensions must be positive")
        if min(self.lambda_e, self.lambda_kl, self.lambda_nce) < 0:
            raise ConfigError("loss weights must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EvalEmbedding:
    mean: np.ndarray
    log_var: np.ndarray
    modality: str

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float32)
        self.log_var = np.asarray(self.log_var, dtype=np.float32)
        if not (np.isfinite(self.mean).all() and np.isfinite(self.log_var).all()):
            raise DataValidationError("embedding contains non-finite values")
        if self.modality not in (MOTION, TEXT):
            raise DataValidationError(f"unknown modality {self.modality!r}")


def _sinusoid(n: int, dim: int) -> torch.Tensor:
    pos = torch.arange(n, dtype=torch.float32).unsqueeze(1)
    div = torch.exp(torch.arange(0, dim, 2, dtype=torch.float32) * (-math.log(10000.0) / dim))
    pe = torch.zeros(n, dim)
    pe[:, 0::2] = torch.sin(pos * div)
    pe[:, 1::2] = torch.cos(pos * div[: pe[:, 1::2].shape[1]])
    return pe


class _DistributionEncoder(nn.Module):
    """Transformer encoder that reads (mean, log-var) off two appended tokens."""

    def __init__(self, input_dim: int, cfg: TmrConfig):
        super().__init__()
        self.proj = nn.Linear(input_dim, cfg.dim)
        self.dist_tokens = nn.Parameter(torch.randn(2, cfg.dim) * 0.02)
        layer = nn.TransformerEncoderLayer(
            cfg.dim,
            cfg.heads,
            dim_feedforward=cfg.ff,
            dropout=cfg.dropout,
            batch_first=True,
            norm_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, cfg.layers, enable_nested_tensor=False)

    def forward(self, x: torch.Tensor, pad: torch.Tensor | None) -> tuple[torch.Tensor, torch.Tensor]:
        b, n, _ = x.shape
        h = self.proj(x) + _sinusoid(n, self.proj.out_features).to(x.device)
        h = torch.cat([h, self.dist_tokens.unsqueeze(0).expand(b, 2, -1)], dim=1)
        if pad is None:
            pad = torch.zeros(b, n, dtype=torch.bool, device=x.device)
        full_pad = torch.cat([pad, torch.zeros(b, 2, dtype=torch.bool, device=x.device)], dim=1)
        out = self.encoder(h, src_key_padding_mask=full_pad)
        return out[:, -2], out[:, -1]  # mean, log-variance


class _MotionDecoder(nn.Module):
    """Reconstructs frames from a single latent via cross-attention."""

    def __init__(self, cfg: TmrConfig):
        super().__init__()
        layer = nn.TransformerDecoderLayer(
            cfg.dim,
            cfg.heads,
            dim_feedforward=cfg.ff,
            dropout=cfg.dropout,
            batch_first=True,
            norm_first=True,
        )
        self.decoder = nn.TransformerDecoder(layer, cfg.layers)
        self.out = nn.Linear(cfg.dim, cfg.motion_dim)
        self.dim = cfg.dim

    def forward(self, z: torch.Tensor, n_frames: int) -> torch.Tensor:
        b = z.shape[0]
        queries = _sinusoid(n_frames, self.dim).to(z.device).unsqueeze(0).expand(b, -1, -1)
        h = self.decoder(queries, z.unsqueeze(1))
        return self.out(h)


class TmrModel(nn.Module):
    def __init__(self, cfg: TmrConfig, toy_vocab: dict[str, int] | None = None):
        super().__init__()
        self.cfg = cfg
        self.motion_encoder = _DistributionEncoder(cfg.motion_dim, cfg)
        self.text_encoder = _DistributionEncoder(cfg.text_dim, cfg)
        self.motion_decoder = _MotionDecoder(cfg)
        self.toy_embedder = ToyVocabEmbedder(toy_vocab, cfg.text_dim) if toy_vocab else None
        # normalization of raw essential features, set during training
        self.register_buffer("stats_mean", torch.zeros(cfg.motion_dim))
        self.register_buffer("stats_std", torch.ones(cfg.motion_dim))

    def set_stats(self, mean: np.ndarray, std: np.ndarray) -> None:
        self.stats_mean.copy_(torch.from_numpy(np.asarray(mean, dtype=np.float32)))
        self.stats_std.copy_(torch.from_numpy(np.asarray(std, dtype=np.float32)))

    def encode_motion(self, motion: torch.Tensor, pad: torch.Tensor | None = None):
        if motion.shape[-1] != self.cfg.motion_dim:
            raise DataValidationError(
                f"motion width {motion.shape[-1]} does not match the evaluator "
                f"({self.cfg.motion_dim} essential columns)"
            )
        return self.motion_encoder(motion, pad)

    def encode_text(self, text: torch.Tensor, pad: torch.Tensor | None = None):
        if text.shape[-1] != self.cfg.text_dim:
            raise DataValidationError(
                f"text width {text.shape[-1]} does not match the evaluator ({self.cfg.text_dim})"
            )
        return self.text_encoder(text, pad)

    def decode_motion(self, z: torch.Tensor, n_frames: int) -> torch.Tensor:
        return self.motion_decoder(z, n_frames)

    @torch.no_grad()
    def embed_motion(self, data: np.ndarray, normalized: bool = False) -> EvalEmbedding:
        """Deterministic embedding of one essential-feature matrix."""
        self.eval()
        x = torch.from_numpy(np.asarray(data, dtype=np.float32))
        if x.dim() != 2:
            raise DataValidationError("expected a (N, width) motion matrix")
        if x.shape[-1] != self.cfg.motion_dim:
            raise DataValidationError(
                f"motion width {x.shape[-1]} does not match the evaluator "
                f"({self.cfg.motion_dim} essential columns)"
            )
        if not normalized:
            x = (x - self.stats_mean) / self.stats_std
        mu, lv = self.encode_motion(x.unsqueeze(0))
        return EvalEmbedding(mu[0].numpy(), lv[0].numpy(), MOTION)

    @torch.no_grad()
    def embed_text_features(self, tokens: torch.Tensor) -> EvalEmbedding:
        self.eval()
        mu, lv = self.encode_text(tokens.unsqueeze(0))
        return EvalEmbedding(mu[0].numpy(), lv[0].numpy(), TEXT)

    @torch.no_grad()
    def embed_caption(self, caption: str) -> EvalEmbedding:
        if self.toy_embedder is None:
            raise ConfigError("evaluator has no toy text embedder; pass word features")
        return self.embed_text_features(self.toy_embedder.encode(caption).tokens)
