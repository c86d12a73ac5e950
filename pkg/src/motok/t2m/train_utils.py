"""Small batching helpers shared by transformer training and evaluation."""

from __future__ import annotations

import torch


def pad_text_batch(feats: list[torch.Tensor]) -> tuple[torch.Tensor, torch.Tensor]:
    """Stack variable-length (T, d) word features; returns (B, T_max, d) and
    a True-means-pad mask."""
    t_max = max(f.shape[0] for f in feats)
    d = feats[0].shape[1]
    out = torch.zeros(len(feats), t_max, d)
    pad = torch.ones(len(feats), t_max, dtype=torch.bool)
    for i, f in enumerate(feats):
        out[i, : f.shape[0]] = f
        pad[i, : f.shape[0]] = False
    return out, pad
