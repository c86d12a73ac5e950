"""Cosine masking schedule and the training-time corruption step."""

from __future__ import annotations

import math

import torch

from ..errors import ConfigError


def mask_schedule(tau: float) -> float:
    """Fraction of tokens masked at progress tau: cos(pi * tau / 2).

    Evaluated as sin(pi * (1 - tau) / 2), which is the same function but
    hits 1 and 0 exactly at the endpoints in floating point.
    """
    if not 0.0 <= tau <= 1.0:
        raise ConfigError("schedule progress must lie in [0, 1]")
    return math.sin(math.pi * (1.0 - tau) / 2.0)


def flat_layout(lengths: tuple[int, ...]) -> tuple[torch.Tensor, torch.Tensor]:
    """(scale_ids, per-scale local positions) for the concatenated sequence."""
    scale_ids = torch.cat(
        [torch.full((h,), v, dtype=torch.long) for v, h in enumerate(lengths)]
    )
    positions = torch.cat([torch.arange(h, dtype=torch.long) for h in lengths])
    return scale_ids, positions


def corrupt_for_training(
    tokens: torch.Tensor,
    tau: float,
    generator: torch.Generator,
    num_codes: int,
    mask_id: int,
) -> tuple[torch.Tensor, torch.Tensor]:
    """BERT-style corruption of one flat token sequence.

    ceil(mask_schedule(tau) * N) positions are drawn uniformly; 80% of them
    become the mask token, 10% a uniformly random code and 10% stay as they
    are. The returned boolean mask marks exactly the selected positions,
    which are the prediction targets.
    """
    if not 0.0 < tau <= 1.0:
        raise ConfigError("corruption progress must lie in (0, 1]")
    n = tokens.shape[0]
    k = math.ceil(mask_schedule(tau) * n)
    k = min(max(k, 1), n)
    order = torch.randperm(n, generator=generator)
    selected = torch.zeros(n, dtype=torch.bool)
    selected[order[:k]] = True

    out = tokens.clone()
    u = torch.rand(n, generator=generator)
    to_mask = selected & (u < 0.8)
    to_random = selected & (u >= 0.8) & (u < 0.9)
    out[to_mask] = mask_id
    if to_random.any():
        out[to_random] = torch.randint(
            0, num_codes, (int(to_random.sum()),), generator=generator
        )
    return out, selected
