"""Bidirectional masked transformer over concatenated multi-scale tokens.

Token embeddings are summed with a learned scale-identity embedding and a
learned per-scale local position embedding. Text enters either in-context
(word features prepended behind a separator) or through per-block
cross-attention. A learned null embedding stands in for the empty condition
used by classifier-free guidance.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import torch
from torch import nn

from ..errors import ConfigError, DataValidationError
from .text import ToyVocabEmbedder

IN_CONTEXT = "in_context"
CROSS_ATTENTION = "cross_attention"


@dataclass
class T2mConfig:
    num_codes: int = 2048
    layers: int = 8
    ff: int = 1024
    dim: int = 384
    heads: int = 6
    dropout: float = 0.2
    conditioning: str = IN_CONTEXT
    cfg_dropout: float = 0.1
    text_dim: int = 512
    max_scales: int = 8
    max_scale_len: int = 512
    # sampling defaults
    cfg_scale: float = 5.0
    iterations: int = 10
    temperature: float = 1.0

    def __post_init__(self):
        if min(self.num_codes, self.layers, self.ff, self.dim, self.heads) < 1:
            raise ConfigError("transformer dimensions must be positive")
        if self.conditioning not in (IN_CONTEXT, CROSS_ATTENTION):
            raise ConfigError(f"unknown conditioning mode {self.conditioning!r}")
        if not 0.0 <= self.cfg_dropout <= 1.0:
            raise ConfigError("cfg_dropout must lie in [0, 1]")

    @property
    def mask_id(self) -> int:
        return self.num_codes

    @property
    def pad_id(self) -> int:
        return self.num_codes + 1

    def to_dict(self) -> dict:
        return asdict(self)


class Block(nn.Module):
    def __init__(self, cfg: T2mConfig, cross: bool):
        super().__init__()
        self.ln1 = nn.LayerNorm(cfg.dim)
        self.attn = nn.MultiheadAttention(
            cfg.dim, cfg.heads, dropout=cfg.dropout, batch_first=True
        )
        if cross:
            self.lnx = nn.LayerNorm(cfg.dim)
            self.xattn = nn.MultiheadAttention(
                cfg.dim, cfg.heads, dropout=cfg.dropout, batch_first=True
            )
        else:
            self.xattn = None
        self.ln2 = nn.LayerNorm(cfg.dim)
        self.ff = nn.Sequential(
            nn.Linear(cfg.dim, cfg.ff),
            nn.GELU(),
            nn.Dropout(cfg.dropout),
            nn.Linear(cfg.ff, cfg.dim),
            nn.Dropout(cfg.dropout),
        )

    def forward(self, x, pad_mask, memory=None, memory_mask=None):
        h = self.ln1(x)
        a, _ = self.attn(h, h, h, key_padding_mask=pad_mask, need_weights=False)
        x = x + a
        if self.xattn is not None:
            h = self.lnx(x)
            c, _ = self.xattn(
                h, memory, memory, key_padding_mask=memory_mask, need_weights=False
            )
            x = x + c
        return x + self.ff(self.ln2(x))


class MaskedMotionTransformer(nn.Module):
    def __init__(self, cfg: T2mConfig, toy_vocab: dict[str, int] | None = None):
        super().__init__()
        self.cfg = cfg
        self.token_emb = nn.Embedding(cfg.num_codes + 2, cfg.dim)
        self.scale_emb = nn.Embedding(cfg.max_scales, cfg.dim)
        self.pos_emb = nn.Embedding(cfg.max_scale_len, cfg.dim)
        self.text_proj = nn.Linear(cfg.text_dim, cfg.dim)
        self.null_text = nn.Parameter(torch.randn(cfg.dim) * 0.02)
        self.separator = nn.Parameter(torch.randn(cfg.dim) * 0.02)
        self.emb_drop = nn.Dropout(cfg.dropout)
        cross = cfg.conditioning == CROSS_ATTENTION
        self.blocks = nn.ModuleList(Block(cfg, cross) for _ in range(cfg.layers))
        self.head_norm = nn.LayerNorm(cfg.dim)
        self.head = nn.Linear(cfg.dim, cfg.num_codes)
        # uniform logits at initialization
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)
        self.toy_embedder = ToyVocabEmbedder(toy_vocab, cfg.text_dim) if toy_vocab else None

    def _memory(
        self,
        batch: int,
        text: torch.Tensor | None,
        text_pad: torch.Tensor | None,
        uncond_mask: torch.Tensor | None,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        null = self.null_text.reshape(1, 1, -1)
        if text is None:
            memory = null.expand(batch, 1, -1)
            mask = torch.zeros(batch, 1, dtype=torch.bool, device=memory.device)
            return memory, mask
        if text.shape[-1] != self.cfg.text_dim:
            raise DataValidationError(
                f"text feature width {text.shape[-1]} does not match model ({self.cfg.text_dim})"
            )
        memory = self.text_proj(text)
        if text_pad is None:
            text_pad = torch.zeros(batch, text.shape[1], dtype=torch.bool, device=memory.device)
        if uncond_mask is not None and bool(uncond_mask.any()):
            memory = memory.clone()
            text_pad = text_pad.clone()
            memory[uncond_mask] = 0.0
            memory[uncond_mask, 0] = self.null_text
            text_pad[uncond_mask] = True
            text_pad[uncond_mask, 0] = False
        return memory, text_pad

    def forward(
        self,
        tokens: torch.Tensor,  # (B, N) values in [0, K) or MASK/PAD
        scale_ids: torch.Tensor,  # (B, N) or (N,)
        positions: torch.Tensor,  # (B, N) or (N,)
        pad_mask: torch.Tensor | None = None,  # (B, N), True where PAD
        text: torch.Tensor | None = None,  # (B, T, d_text)
        text_pad: torch.Tensor | None = None,  # (B, T), True where PAD
        uncond_mask: torch.Tensor | None = None,  # (B,) condition dropped
    ) -> torch.Tensor:
        b, n = tokens.shape
        if scale_ids.dim() == 1:
            scale_ids = scale_ids.unsqueeze(0).expand(b, n)
        if positions.dim() == 1:
            positions = positions.unsqueeze(0).expand(b, n)
        x = self.token_emb(tokens) + self.scale_emb(scale_ids) + self.pos_emb(positions)
        x = self.emb_drop(x)
        memory, mem_mask = self._memory(b, text, text_pad, uncond_mask)
        if pad_mask is None:
            pad_mask = torch.zeros(b, n, dtype=torch.bool, device=tokens.device)

        if self.cfg.conditioning == IN_CONTEXT:
            sep = self.separator.reshape(1, 1, -1).expand(b, 1, -1)
            seq = torch.cat([memory, sep, x], dim=1)
            sep_mask = torch.zeros(b, 1, dtype=torch.bool, device=tokens.device)
            full_mask = torch.cat([mem_mask, sep_mask, pad_mask], dim=1)
            for blk in self.blocks:
                seq = blk(seq, full_mask)
            h = seq[:, memory.shape[1] + 1 :]
        else:
            h = x
            for blk in self.blocks:
                h = blk(h, pad_mask, memory, mem_mask)
        return self.head(self.head_norm(h))
