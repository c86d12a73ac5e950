"""Convolutional motion autoencoder around the residual quantizer.

Encoder: strided downsampling (factor `downscale`) followed by dilated
res-blocks, each tailed by a single-head self-attention layer. Decoder
mirrors it with nearest-neighbour upsampling. Straight-through estimation
passes decoder gradients to the encoder across the quantizer.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import torch
import torch.nn.functional as F
from torch import nn

from ..errors import ConfigError, DataValidationError
from .quantizer import MULTI_SCALE, FULL_SCALE_BASELINE, ResidualQuantizer


@dataclass
class VqConfig:
    input_dim: int = 296
    essential_dim: int = 148
    downscale: int = 4
    width: int = 512
    res_blocks: int = 3
    latent_dim: int = 512
    num_codes: int = 2048
    extra_layers: int = 1  # V; total quantization layers = V + 1
    beta: float = 0.02
    lambda_ess: float = 2.0
    mode: str = MULTI_SCALE
    use_attention: bool = True
    ema_decay: float = 0.99
    reset_window: int = 256

    def __post_init__(self):
        if self.downscale < 1 or 2 ** int(math.log2(self.downscale)) != self.downscale:
            raise ConfigError("downscale must be a positive power of two")
        if self.beta < 0 or self.lambda_ess < 0:
            raise ConfigError("loss weights must be non-negative")
        if self.mode not in (MULTI_SCALE, FULL_SCALE_BASELINE):
            raise ConfigError(f"unknown VQ mode {self.mode!r}")
        if self.essential_dim > self.input_dim:
            raise ConfigError("essential_dim cannot exceed input_dim")

    @property
    def num_layers(self) -> int:
        return self.extra_layers + 1

    def to_dict(self) -> dict:
        return asdict(self)


class ResBlock(nn.Module):
    def __init__(self, width: int, dilation: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv1d(width, width, 3, padding=dilation, dilation=dilation),
            nn.ReLU(),
            nn.Conv1d(width, width, 1),
        )

    def forward(self, x):
        return x + self.net(x)


class SelfAttention(nn.Module):
    """Single-head attention over time at the block's channel width."""

    def __init__(self, width: int):
        super().__init__()
        self.norm = nn.LayerNorm(width)
        self.qkv = nn.Linear(width, 3 * width)
        self.proj = nn.Linear(width, width)
        self.scale = width**-0.5

    def forward(self, x):  # (B, C, T)
        h = self.norm(x.transpose(1, 2))
        q, k, v = self.qkv(h).chunk(3, dim=-1)
        attn = torch.softmax(q @ k.transpose(1, 2) * self.scale, dim=-1)
        return x + self.proj(attn @ v).transpose(1, 2)


def _block_stack(cfg: VqConfig) -> nn.Sequential:
    layers: list[nn.Module] = []
    for i in range(cfg.res_blocks):
        layers.append(ResBlock(cfg.width, dilation=3**i))
        if cfg.use_attention:
            layers.append(SelfAttention(cfg.width))
    return nn.Sequential(*layers)


class Encoder(nn.Module):
    def __init__(self, cfg: VqConfig):
        super().__init__()
        stages: list[nn.Module] = [nn.Conv1d(cfg.input_dim, cfg.width, 3, padding=1), nn.ReLU()]
        for _ in range(int(math.log2(cfg.downscale))):
            stages += [nn.Conv1d(cfg.width, cfg.width, 4, stride=2, padding=1), nn.ReLU()]
        self.down = nn.Sequential(*stages)
        self.blocks = _block_stack(cfg)
        self.out = nn.Conv1d(cfg.width, cfg.latent_dim, 3, padding=1)

    def forward(self, x):  # (B, N, D) -> (B, n, d)
        h = self.down(x.transpose(1, 2))
        h = self.blocks(h)
        return self.out(h).transpose(1, 2)


class Decoder(nn.Module):
    def __init__(self, cfg: VqConfig):
        super().__init__()
        self.inp = nn.Conv1d(cfg.latent_dim, cfg.width, 3, padding=1)
        self.blocks = _block_stack(cfg)
        stages: list[nn.Module] = []
        for _ in range(int(math.log2(cfg.downscale))):
            stages += [
                nn.Upsample(scale_factor=2, mode="nearest"),
                nn.Conv1d(cfg.width, cfg.width, 3, padding=1),
                nn.ReLU(),
            ]
        stages.append(nn.Conv1d(cfg.width, cfg.input_dim, 3, padding=1))
        self.up = nn.Sequential(*stages)

    def forward(self, f):  # (B, n, d) -> (B, n*downscale, D)
        h = self.inp(f.transpose(1, 2))
        h = self.blocks(h)
        return self.up(h).transpose(1, 2)


class MotionVqVae(nn.Module):
    def __init__(self, cfg: VqConfig):
        super().__init__()
        self.cfg = cfg
        self.encoder = Encoder(cfg)
        self.decoder = Decoder(cfg)
        self.quantizer = ResidualQuantizer(
            cfg.num_codes,
            cfg.latent_dim,
            cfg.num_layers,
            mode=cfg.mode,
            decay=cfg.ema_decay,
            reset_window=cfg.reset_window,
        )

    def _pad(self, x: torch.Tensor) -> torch.Tensor:
        n = x.shape[1]
        if n < self.cfg.downscale:
            raise DataValidationError("clip too short")
        remainder = n % self.cfg.downscale
        if remainder == 0:
            return x
        pad = self.cfg.downscale - remainder
        return torch.cat([x, x[:, -1:].expand(x.shape[0], pad, x.shape[2])], dim=1)

    def encode(self, x: torch.Tensor) -> torch.Tensor:
        """Features (N, D) or (B, N, D) to latents of length ceil(N / downscale)."""
        single = x.dim() == 2
        if single:
            x = x.unsqueeze(0)
        f = self.encoder(self._pad(x))
        return f.squeeze(0) if single else f

    def decode(self, f_hat: torch.Tensor) -> torch.Tensor:
        single = f_hat.dim() == 2
        if single:
            f_hat = f_hat.unsqueeze(0)
        if f_hat.shape[-1] != self.cfg.latent_dim:
            raise DataValidationError("latent width does not match the model")
        out = self.decoder(f_hat)
        return out.squeeze(0) if single else out

    def forward(self, x: torch.Tensor) -> dict:
        """Full pass with straight-through latents; x is (B, N, D)."""
        f = self.encoder(self._pad(x))
        q = self.quantizer(f)
        dec_in = f + (q["f_hat"] - f).detach()
        recon = self.decoder(dec_in)
        q["f"] = f
        q["recon"] = recon[:, : x.shape[1]]
        return q

    @torch.no_grad()
    def reconstruct(self, x: torch.Tensor) -> torch.Tensor:
        """Encode, quantize, decode, trimmed to the input length."""
        single = x.dim() == 2
        out = self.forward(x.unsqueeze(0) if single else x)
        rec = out["recon"]
        return rec.squeeze(0) if single else rec


def rvq_loss(
    target: torch.Tensor,
    recon: torch.Tensor,
    commit: list[tuple[torch.Tensor, torch.Tensor]],
    beta: float,
) -> tuple[torch.Tensor, dict]:
    """SmoothL1 reconstruction plus per-layer commitment.

    Each layer contributes the Frobenius norm (mean over batch) between the
    residual at its native scale and the stop-gradient of the codes it chose.
    """
    rec = F.smooth_l1_loss(recon, target)
    commit_total = target.new_zeros(())
    for z, coded in commit:
        diff = z - coded.detach()
        if diff.dim() == 2:
            diff = diff.unsqueeze(0)
        commit_total = commit_total + torch.linalg.vector_norm(diff, dim=(1, 2)).mean()
    total = rec + beta * commit_total
    return total, {
        "reconstruction": float(rec.detach()),
        "commitment": float(commit_total.detach()),
    }


def essential_loss(target: torch.Tensor, recon: torch.Tensor, essential_dim: int) -> torch.Tensor:
    """SmoothL1 restricted to the leading essential (root + rotation) columns."""
    return F.smooth_l1_loss(recon[..., :essential_dim], target[..., :essential_dim])


def total_vq_loss(
    target: torch.Tensor, out: dict, cfg: VqConfig
) -> tuple[torch.Tensor, dict]:
    base, parts = rvq_loss(target, out["recon"], out["commit"], cfg.beta)
    ess = essential_loss(target, out["recon"], cfg.essential_dim)
    parts["essential"] = float(ess.detach())
    return base + cfg.lambda_ess * ess, parts
