"""Word-level text features: a precomputed on-disk store, plus a small
trainable vocabulary embedder for closed-vocabulary toy runs."""

from __future__ import annotations

import difflib
import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from ..errors import DataValidationError, MissingArtifactError
from ..tensorio import atomic_write_bytes, write_json

PRECOMPUTED = "precomputed_file"
TOY = "trainable_toy_embedder"

_WORD_RE = re.compile(r"[a-z0-9']+")


@dataclass
class TextEmbeddingSequence:
    """Word-level feature rows for one caption."""

    tokens: torch.Tensor  # (T, d_text)
    caption_id: str = ""
    source: str = PRECOMPUTED

    def __post_init__(self):
        if self.tokens.dim() != 2 or self.tokens.shape[0] < 1:
            raise DataValidationError("text features must be a non-empty (T, d) matrix")

    @property
    def width(self) -> int:
        return int(self.tokens.shape[1])


def tokenize_words(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


def _blob_name(caption_id: str) -> str:
    return caption_id.replace("#", "__").replace("/", "_") + ".f32"


def write_text_store(store_dir: str | Path, features: dict[str, np.ndarray]) -> None:
    """Persist caption-keyed word features; widths must agree."""
    store_dir = Path(store_dir)
    store_dir.mkdir(parents=True, exist_ok=True)
    widths = {arr.shape[1] for arr in features.values()}
    if len(widths) > 1:
        raise DataValidationError(f"mixed feature widths in store: {sorted(widths)}")
    index = {}
    for cid, arr in features.items():
        arr = np.ascontiguousarray(arr, dtype="<f4")
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise DataValidationError(f"caption {cid!r} features must be (T, d)")
        name = _blob_name(cid)
        atomic_write_bytes(store_dir / name, arr.tobytes())
        index[cid] = {"file": name, "shape": list(arr.shape)}
    write_json(store_dir / "manifest.json", {"captions": index})


class TextEmbeddingStore:
    def __init__(self, store_dir: str | Path):
        self.root = Path(store_dir)
        manifest = self.root / "manifest.json"
        if not manifest.exists():
            raise MissingArtifactError(f"no text store at {store_dir}")
        with open(manifest, "r", encoding="utf-8") as fh:
            self.index = json.load(fh)["captions"]

    def __len__(self) -> int:
        return len(self.index)

    def __contains__(self, caption_id: str) -> bool:
        return caption_id in self.index

    def load(self, caption_id: str) -> TextEmbeddingSequence:
        if caption_id not in self.index:
            near = difflib.get_close_matches(caption_id, self.index.keys(), n=3)
            hint = f"; closest ids: {near}" if near else ""
            raise MissingArtifactError(f"caption {caption_id!r} not in store{hint}")
        meta = self.index[caption_id]
        raw = np.fromfile(self.root / meta["file"], dtype="<f4")
        arr = raw.reshape(tuple(meta["shape"]))
        return TextEmbeddingSequence(torch.from_numpy(arr.copy()), caption_id, PRECOMPUTED)


def load_text_features(store: TextEmbeddingStore, caption_id: str) -> TextEmbeddingSequence:
    return store.load(caption_id)


class ToyVocabEmbedder(nn.Module):
    """Learned per-word vectors over a closed vocabulary (index 0 = unknown)."""

    def __init__(self, vocab: dict[str, int], dim: int):
        super().__init__()
        if 0 in vocab.values():
            raise DataValidationError("vocabulary index 0 is reserved for unknown words")
        self.vocab = dict(vocab)
        self.dim = dim
        self.table = nn.Embedding(len(vocab) + 1, dim)

    @staticmethod
    def build_vocab(captions: list[str]) -> dict[str, int]:
        words = sorted({w for c in captions for w in tokenize_words(c)})
        return {w: i + 1 for i, w in enumerate(words)}

    def indices(self, caption: str) -> torch.Tensor:
        words = tokenize_words(caption) or ["unknown"]
        return torch.tensor([self.vocab.get(w, 0) for w in words], dtype=torch.long)

    def encode(self, caption: str) -> TextEmbeddingSequence:
        return TextEmbeddingSequence(self.table(self.indices(caption)), caption, TOY)

    def encode_batch(self, captions: list[str]) -> tuple[torch.Tensor, torch.Tensor]:
        """Padded (B, T, d) features plus a True-means-pad mask."""
        idx = [self.indices(c) for c in captions]
        t_max = max(i.shape[0] for i in idx)
        batch = torch.zeros(len(idx), t_max, dtype=torch.long)
        pad = torch.ones(len(idx), t_max, dtype=torch.bool)
        for b, i in enumerate(idx):
            batch[b, : i.shape[0]] = i
            pad[b, : i.shape[0]] = False
        return self.table(batch), pad
