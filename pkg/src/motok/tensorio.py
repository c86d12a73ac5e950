"""File containers: raw float32 tensors with JSON sidecars, and checkpoint
directories holding a JSON manifest plus named float32 blobs.

All writes go through a temp-file-then-rename step so partially written
artifacts are never observed.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
import tempfile
from pathlib import Path

import numpy as np

from .errors import DataValidationError, MissingArtifactError
from .features import ESSENTIAL, FULL, FeatureLayout, FeatureSequence

SCHEMA_VERSION = 1


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str | Path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# raw tensor container: <path> holds little-endian float32 row-major data,
# <path>.json holds {"shape", "dtype", "layout", "fps"}
# ---------------------------------------------------------------------------


def save_tensor(path: str | Path, data: np.ndarray, layout: str = "raw", fps: float = 30.0) -> None:
    arr = np.ascontiguousarray(data, dtype="<f4")
    atomic_write_bytes(path, arr.tobytes())
    write_json(
        str(path) + ".json",
        {"shape": list(arr.shape), "dtype": "f32", "layout": layout, "fps": fps},
    )


def load_tensor(path: str | Path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    sidecar = Path(str(path) + ".json")
    if not path.exists() or not sidecar.exists():
        raise MissingArtifactError(f"tensor container not found: {path}")
    with open(sidecar, "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    if meta.get("dtype") != "f32":
        raise DataValidationError(f"unsupported tensor dtype {meta.get('dtype')!r}")
    raw = np.fromfile(path, dtype="<f4")
    shape = tuple(meta["shape"])
    if raw.size != int(np.prod(shape)):
        raise DataValidationError(f"tensor payload size does not match shape in {sidecar}")
    return raw.reshape(shape), meta


def feature_layout_tag(feat: FeatureSequence) -> str:
    state = "norm" if feat.normalized else "raw"
    return f"{feat.kind}-j{feat.layout.joints}-{state}"


def save_features(path: str | Path, feat: FeatureSequence) -> None:
    save_tensor(path, feat.data, layout=feature_layout_tag(feat), fps=feat.fps)


def load_features(path: str | Path) -> FeatureSequence:
    data, meta = load_tensor(path)
    tag = meta.get("layout", "")
    try:
        kind, joints, state = tag.split("-")
        joints = int(joints[1:])
    except ValueError:
        raise DataValidationError(f"bad feature layout tag {tag!r}") from None
    if kind not in (FULL, ESSENTIAL):
        raise DataValidationError(f"bad feature layout tag {tag!r}")
    return FeatureSequence(
        data,
        layout=FeatureLayout(joints),
        kind=kind,
        fps=float(meta.get("fps", 30.0)),
        normalized=state == "norm",
    )


# ---------------------------------------------------------------------------
# checkpoint container: directory with manifest.json + tensors/<name>.f32
# ---------------------------------------------------------------------------


def save_checkpoint(path: str | Path, manifest: dict, tensors: dict[str, np.ndarray]) -> None:
    """Write manifest + blobs into a fresh directory, then swap it in place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(dir=path.parent, prefix=f".{path.name}."))
    try:
        blob_dir = tmp / "tensors"
        blob_dir.mkdir()
        index = {}
        for name, tensor in tensors.items():
            arr = np.ascontiguousarray(np.asarray(tensor), dtype="<f4")
            fname = name.replace("/", "_") + ".f32"
            with open(blob_dir / fname, "wb") as fh:
                fh.write(arr.tobytes())
            index[name] = {"file": fname, "shape": list(arr.shape), "dtype": "f32"}
        full = dict(manifest)
        full["schema_version"] = SCHEMA_VERSION
        full["tensors"] = index
        with open(tmp / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(full, fh, indent=2, sort_keys=True)
            fh.write("\n")
        if path.exists():
            shutil.rmtree(path)
        os.replace(tmp, path)
    except BaseException:
        if tmp.exists():
            shutil.rmtree(tmp, ignore_errors=True)
        raise


def load_checkpoint(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    path = Path(path)
    manifest_path = path / "manifest.json"
    if not manifest_path.exists():
        raise MissingArtifactError(f"no checkpoint at {path}")
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise DataValidationError(
            f"checkpoint schema {manifest.get('schema_version')} unsupported"
        )
    tensors = {}
    for name, meta in manifest.get("tensors", {}).items():
        blob = path / "tensors" / meta["file"]
        if not blob.exists():
            raise MissingArtifactError(f"checkpoint blob missing: {blob}")
        raw = np.fromfile(blob, dtype="<f4")
        shape = tuple(meta["shape"])
        if raw.size != int(np.prod(shape)):
            raise DataValidationError(f"blob {name} does not match its declared shape")
        tensors[name] = raw.reshape(shape)
    return manifest, tensors
