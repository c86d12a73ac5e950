"""Learnable code matrix with exponential-moving-average updates.

Codes are trained without gradients: each step the per-code assignment
counts and vector sums enter EMA accumulators and the assigned codes are
refreshed to ema_sums / (ema_counts + eps). Codes that receive nothing are
left untouched. Codes unused for a full reset window are re-seeded from
random vectors of the current batch.
"""

from __future__ import annotations

import torch
from torch import nn

from ..errors import ConfigError


class Codebook(nn.Module):
    def __init__(
        self,
        num_codes: int,
        dim: int,
        decay: float = 0.99,
        reset_window: int = 256,
        epsilon: float = 1e-5,
    ):
        super().__init__()
        if num_codes < 2:
            raise ConfigError("codebook needs at least 2 codes")
        if dim < 1:
            raise ConfigError("code dimension must be positive")
        if not (0.0 < decay < 1.0):
            raise ConfigError("EMA decay must lie in (0, 1)")
        self.num_codes = num_codes
        self.dim = dim
        self.decay = decay
        self.reset_window = reset_window  # 0 disables dead-code reseeding
        self.epsilon = epsilon
        self.register_buffer("codes", torch.randn(num_codes, dim) / dim**0.5)
        self.register_buffer("ema_counts", torch.zeros(num_codes))
        self.register_buffer("ema_sums", torch.zeros(num_codes, dim))
        self.register_buffer("usage", torch.zeros(num_codes))
        self.register_buffer("steps_since_reset", torch.zeros((), dtype=torch.long))

    @torch.no_grad()
    def nearest(self, vectors: torch.Tensor) -> torch.Tensor:
        """Indices of the closest code for each row of (M, dim).

        Distances are evaluated in float64 with the direct (no matmul
        expansion) formula so ranking agrees with exhaustive search.
        """
        d2 = torch.cdist(
            vectors.detach().double(),
            self.codes.double(),
            compute_mode="donot_use_mm_for_euclid_dist",
        )
        return d2.argmin(dim=1)

    def lookup(self, indices: torch.Tensor) -> torch.Tensor:
        if indices.numel() and (indices.min() < 0 or indices.max() >= self.num_codes):
            raise ConfigError("token index out of codebook range")
        return self.codes[indices]

    @torch.no_grad()
    def ema_update(
        self,
        indices: torch.Tensor,
        vectors: torch.Tensor,
        generator: torch.Generator | None = None,
    ) -> None:
        """One training step with flat assignment (index, vector) pairs."""
        indices = indices.reshape(-1)
        vectors = vectors.detach().reshape(-1, self.dim)
        if indices.shape[0] != vectors.shape[0]:
            raise ConfigError("assignment indices/vectors length mismatch")
        counts = torch.bincount(indices, minlength=self.num_codes).float()
        sums = torch.zeros_like(self.ema_sums)
        sums.index_add_(0, indices, vectors)

        lam = self.decay
        self.ema_counts.mul_(lam).add_(counts, alpha=1.0 - lam)
        self.ema_sums.mul_(lam).add_(sums, alpha=1.0 - lam)
        assigned = counts > 0
        fresh = self.ema_sums[assigned] / (self.ema_counts[assigned, None] + self.epsilon)
        self.codes[assigned] = fresh
        self.usage.add_(counts)
        self.steps_since_reset.add_(1)

        if self.reset_window and int(self.steps_since_reset) >= self.reset_window:
            self._reseed_dead(vectors, generator)

    @torch.no_grad()
    def _reseed_dead(self, vectors: torch.Tensor, generator: torch.Generator | None) -> None:
        dead = self.usage == 0
        n_dead = int(dead.sum())
        if n_dead and vectors.shape[0] > 0:
            pick = torch.randint(
                0, vectors.shape[0], (n_dead,), generator=generator, device=vectors.device
            )
            self.codes[dead] = vectors[pick]
            self.ema_counts[dead] = 0.0
            self.ema_sums[dead] = 0.0
        self.usage.zero_()
        self.steps_since_reset.zero_()


def perplexity(indices: torch.Tensor, num_codes: int) -> float:
    """exp(entropy) of the empirical code-usage distribution."""
    counts = torch.bincount(indices.reshape(-1), minlength=num_codes).double()
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    ent = -(p[p > 0] * p[p > 0].log()).sum()
    return float(ent.exp())
