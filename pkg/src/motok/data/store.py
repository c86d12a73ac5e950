"""Populate the caption-keyed word-feature store from precomputed files."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import DataValidationError, MissingArtifactError
from ..t2m.text import _blob_name, write_text_store
from .manifest import DatasetManifest


def populate_text_store(
    manifest: DatasetManifest, features_dir: str | Path, store_dir: str | Path
) -> int:
    """Ingest one .npy word-feature matrix per caption into the store.

    Files are named after the caption id with '#' replaced by '__'
    (e.g. clip01__0.npy). Returns the number of captions stored.
    """
    features_dir = Path(features_dir)
    collected: dict[str, np.ndarray] = {}
    missing: list[str] = []
    widths: set[int] = set()
    for caps in manifest.captions.values():
        for cap_id in caps:
            path = features_dir / (_blob_name(cap_id)[: -len(".f32")] + ".npy")
            if not path.exists():
                missing.append(cap_id)
                continue
            arr = np.load(path)
            if arr.ndim != 2 or arr.shape[0] < 1:
                raise DataValidationError(f"{path} is not a (T, d) word-feature matrix")
            widths.add(arr.shape[1])
            collected[cap_id] = arr.astype(np.float32)
    if missing:
        raise MissingArtifactError(
            f"{len(missing)} captions lack feature files, e.g. {missing[:5]}"
        )
    if len(widths) > 1:
        raise DataValidationError(f"mixed word-feature widths: {sorted(widths)}")
    write_text_store(store_dir, collected)
    return len(collected)
