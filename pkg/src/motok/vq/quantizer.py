"""Multi-scale residual quantization over a shared codebook.

A latent sequence f of length n is approximated layer by layer at strictly
increasing temporal resolutions h^0 < ... < h^V = n. Layer v resamples the
running residual down to h^v, snaps it to the nearest codes, upsamples the
coded sequence back to n and subtracts it from the residual:

    r^0 = f
    q^v = nearest(resample(r^v, h^v))
    r^{v+1} = r^v - resample(codes[q^v], n)

so f = sum_v resample(codes[q^v], n) + r^{V+1} holds exactly up to float
accumulation. With all resolutions equal to n and one codebook per layer
this reduces to classic residual VQ.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from ..errors import ConfigError
from .codebook import Codebook

MULTI_SCALE = "multi_scale"
FULL_SCALE_BASELINE = "full_scale_baseline"


def interpolate(seq: torch.Tensor, target_len: int) -> torch.Tensor:
    """Linear time-resampling of (L, d) or (B, L, d), align-corners.

    Sample positions are t_i = i * (L-1) / (target_len-1); length-1 inputs
    replicate, and matching lengths return the input unchanged.
    """
    if target_len < 1:
        raise ConfigError("target length must be >= 1")
    single = seq.dim() == 2
    x = seq.unsqueeze(0) if single else seq
    if x.dim() != 3:
        raise ConfigError("interpolate expects (L, d) or (B, L, d)")
    src = x.shape[1]
    if src < 1:
        raise ConfigError("source length must be >= 1")
    if src == target_len:
        return seq
    if src == 1:
        out = x.expand(x.shape[0], target_len, x.shape[2])
    elif target_len == 1:
        # align-corners sample position 0, avoids F.interpolate's size-1 edge case
        out = x[:, :1]
    else:
        out = F.interpolate(
            x.transpose(1, 2), size=target_len, mode="linear", align_corners=True
        ).transpose(1, 2)
    return out.squeeze(0) if single else out


@dataclass(frozen=True)
class ScaleSchedule:
    """Token-sequence lengths per quantization layer, coarse to fine."""

    lengths: tuple[int, ...]

    def __post_init__(self):
        if len(self.lengths) < 1:
            raise ConfigError("schedule needs at least one scale")
        if any(h < 1 for h in self.lengths):
            raise ConfigError("scale lengths must be >= 1")
        if any(b <= a for a, b in zip(self.lengths, self.lengths[1:])):
            raise ConfigError("scale lengths must be strictly increasing")

    @staticmethod
    def from_progression(n: int, extra_layers: int) -> "ScaleSchedule":
        """The halving progression [n/2^V, ..., n/2, n]."""
        lengths = tuple(max(1, n // 2 ** (extra_layers - v)) for v in range(extra_layers + 1))
        if len(set(lengths)) != len(lengths):
            raise ConfigError(f"schedule degenerate for n={n}, V={extra_layers}")
        return ScaleSchedule(lengths)

    @property
    def full_length(self) -> int:
        return self.lengths[-1]

    @property
    def num_layers(self) -> int:
        return len(self.lengths)

    @property
    def total_tokens(self) -> int:
        return sum(self.lengths)


@dataclass
class QuantizedMotion:
    """Ordered per-scale token sequences for one clip."""

    token_seqs: list[torch.Tensor]
    lengths: tuple[int, ...]
    mode: str = MULTI_SCALE

    def __post_init__(self):
        if len(self.token_seqs) != len(self.lengths):
            raise ConfigError("token_seqs and lengths disagree")
        for seq, h in zip(self.token_seqs, self.lengths):
            if seq.shape[-1] != h:
                raise ConfigError("token sequence length does not match schedule")
        if self.mode == MULTI_SCALE:
            ScaleSchedule(self.lengths)  # enforces strict increase

    @property
    def total_tokens(self) -> int:
        return sum(self.lengths)

    def flat(self) -> torch.Tensor:
        """Tokens of all scales concatenated coarse to fine."""
        return torch.cat(list(self.token_seqs), dim=-1)

    @staticmethod
    def from_flat(tokens: torch.Tensor, lengths: tuple[int, ...], mode: str = MULTI_SCALE):
        if tokens.shape[-1] != sum(lengths):
            raise ConfigError("flat token length does not match schedule")
        return QuantizedMotion(
            list(torch.split(tokens, list(lengths), dim=-1)), tuple(lengths), mode
        )


def nearest_codes(vectors: torch.Tensor, codes: torch.Tensor) -> torch.Tensor:
    """Exhaustive nearest-neighbour indices for (..., d) against (K, d)."""
    if codes.shape[0] == 0:
        raise ConfigError("empty codebook")
    flat = vectors.reshape(-1, vectors.shape[-1])
    d2 = torch.cdist(
        flat.detach().double(), codes.double(), compute_mode="donot_use_mm_for_euclid_dist"
    )
    return d2.argmin(dim=1).reshape(vectors.shape[:-1])


def quantize_multiscale(
    f: torch.Tensor, codebook: Codebook, schedule: ScaleSchedule
) -> tuple[QuantizedMotion, torch.Tensor, torch.Tensor]:
    """Quantize (n, d) latents; returns (tokens, f_hat, final residual)."""
    if f.dim() != 2:
        raise ConfigError("quantize_multiscale expects a single (n, d) sequence")
    if schedule.full_length != f.shape[0]:
        raise ConfigError("schedule full length must equal the latent length")
    seqs, f_hat, residual, _ = _quantize(
        f.unsqueeze(0), [codebook] * schedule.num_layers, schedule.lengths
    )
    qm = QuantizedMotion([s.squeeze(0) for s in seqs], schedule.lengths, MULTI_SCALE)
    return qm, f_hat.squeeze(0), residual.squeeze(0)


def dequantize(qm: QuantizedMotion, codebook: Codebook) -> torch.Tensor:
    """Sum of per-scale code sequences upsampled to full resolution."""
    n = qm.lengths[-1]
    out = None
    for seq in qm.token_seqs:
        up = interpolate(codebook.lookup(seq), n)
        out = up if out is None else out + up
    return out


def _quantize(
    f: torch.Tensor, codebooks: list[Codebook], lengths: tuple[int, ...]
) -> tuple[list[torch.Tensor], torch.Tensor, torch.Tensor, list[tuple[torch.Tensor, torch.Tensor]]]:
    """Batched core recursion on (B, n, d).

    Returns (token seqs, f_hat, final residual, per-scale (z_v, code_v)
    pairs at the coarse resolution for the commitment loss).
    """
    n = f.shape[1]
    residual = f
    f_hat = torch.zeros_like(f)
    seqs: list[torch.Tensor] = []
    commit: list[tuple[torch.Tensor, torch.Tensor]] = []
    for cb, h in zip(codebooks, lengths):
        z = interpolate(residual, h)  # (B, h, d), carries encoder gradient
        idx = cb.nearest(z.reshape(-1, z.shape[-1])).reshape(z.shape[:2])
        coded = cb.lookup(idx)
        up = interpolate(coded, n)
        residual = residual - up
        f_hat = f_hat + up
        seqs.append(idx)
        commit.append((z, coded))
    return seqs, f_hat, residual, commit


class ResidualQuantizer(nn.Module):
    """Residual quantization stage of the autoencoder.

    multi_scale mode runs the halving progression over one shared codebook;
    full_scale_baseline keeps every layer at full resolution with its own
    codebook, matching classic motion RVQ.
    """

    def __init__(
        self,
        num_codes: int,
        dim: int,
        num_layers: int,
        mode: str = MULTI_SCALE,
        decay: float = 0.99,
        reset_window: int = 256,
    ):
        super().__init__()
        if mode not in (MULTI_SCALE, FULL_SCALE_BASELINE):
            raise ConfigError(f"unknown quantizer mode {mode!r}")
        if num_layers < 1:
            raise ConfigError("need at least one quantization layer")
        self.mode = mode
        self.num_layers = num_layers
        self.num_codes = num_codes
        n_books = 1 if mode == MULTI_SCALE else num_layers
        self.codebooks = nn.ModuleList(
            Codebook(num_codes, dim, decay=decay, reset_window=reset_window)
            for _ in range(n_books)
        )

    def codebook_for(self, layer: int) -> Codebook:
        return self.codebooks[0] if self.mode == MULTI_SCALE else self.codebooks[layer]

    def lengths_for(self, n: int) -> tuple[int, ...]:
        if self.mode == MULTI_SCALE:
            return ScaleSchedule.from_progression(n, self.num_layers - 1).lengths
        return tuple([n] * self.num_layers)

    def forward(self, f: torch.Tensor) -> dict:
        lengths = self.lengths_for(f.shape[1])
        books = [self.codebook_for(v) for v in range(self.num_layers)]
        seqs, f_hat, residual, commit = _quantize(f, books, lengths)
        return {
            "tokens": seqs,
            "lengths": lengths,
            "f_hat": f_hat,
            "residual": residual,
            "commit": commit,
        }

    @torch.no_grad()
    def ema_step(self, out: dict, generator: torch.Generator | None = None) -> None:
        """Feed this step's assignments into the codebook EMA."""
        if self.mode == MULTI_SCALE:
            idx = torch.cat([s.reshape(-1) for s in out["tokens"]])
            vecs = torch.cat([z.reshape(-1, z.shape[-1]) for z, _ in out["commit"]])
            self.codebooks[0].ema_update(idx, vecs, generator)
        else:
            for v, (seq, (z, _)) in enumerate(zip(out["tokens"], out["commit"])):
                self.codebooks[v].ema_update(
                    seq.reshape(-1), z.reshape(-1, z.shape[-1]), generator
                )

    def dequantize_prefix(self, out_or_qm, upto: int, n: int) -> torch.Tensor:
        """Reconstruction using only the first `upto`+1 scales."""
        if isinstance(out_or_qm, QuantizedMotion):
            seqs = [s.unsqueeze(0) if s.dim() == 1 else s for s in out_or_qm.token_seqs]
        else:
            seqs = out_or_qm["tokens"]
        total = None
        for v, seq in enumerate(seqs[: upto + 1]):
            up = interpolate(self.codebook_for(v).lookup(seq), n)
            total = up if total is None else total + up
        return total
