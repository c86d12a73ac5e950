"""Dataset directory layout, manifest building and mirror augmentation.

Expected tree:
    root/motions/<id>.bvh | <id>.tensor   motion files
    root/texts/<id>.txt                   one caption per line
    root/splits/{train,val,test}.txt      clip ids, one per line

Caption ids are "<clip_id>#<line_index>". Manifest building is pure and
deterministic: rebuilding over an unchanged tree yields byte-identical JSON.
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DataValidationError
from ..tensorio import write_json

_SWAP = {"left": "right", "right": "left", "Left": "Right", "Right": "Left",
         "LEFT": "RIGHT", "RIGHT": "LEFT"}
_SWAP_RE = re.compile(r"\b(left|right|Left|Right|LEFT|RIGHT)\b")


def swap_left_right(text: str) -> str:
    return _SWAP_RE.sub(lambda m: _SWAP[m.group(0)], text)


def mirror_id(clip_id: str) -> str:
    """Involutive id transform for mirrored clips."""
    return clip_id[2:] if clip_id.startswith("M_") else "M_" + clip_id


@dataclass
class DatasetManifest:
    root: str
    clips: dict[str, dict] = field(default_factory=dict)
    captions: dict[str, list[str]] = field(default_factory=dict)
    caption_texts: dict[str, str] = field(default_factory=dict)
    splits: dict[str, list[str]] = field(default_factory=dict)

    def validate(self) -> None:
        problems = []
        seen: set[str] = set()
        for name, ids in self.splits.items():
            overlap = seen & set(ids)
            if overlap:
                problems.append(f"split {name!r} overlaps another split: {sorted(overlap)[:5]}")
            seen |= set(ids)
            missing = [i for i in ids if i not in self.clips]
            if missing:
                problems.append(f"split {name!r} references unknown clips: {missing[:5]}")
        for cid in self.clips:
            if not self.captions.get(cid):
                problems.append(f"clip {cid!r} has no captions")
        all_caps = [c for caps in self.captions.values() for c in caps]
        if len(all_caps) != len(set(all_caps)):
            problems.append("duplicate caption ids")
        if problems:
            raise DataValidationError("manifest validation failed:\n- " + "\n- ".join(problems))

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    def save(self, path) -> None:
        write_json(path, asdict(self))

    @staticmethod
    def load(path) -> "DatasetManifest":
        with open(path, "r", encoding="utf-8") as fh:
            return DatasetManifest(**json.load(fh))

    def split_of(self, clip_id: str) -> str | None:
        for name, ids in self.splits.items():
            if clip_id in ids:
                return name
        return None


def _bvh_header(path: Path) -> tuple[float, int]:
    frames, fps = None, None
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("Frames:"):
                frames = int(line.split()[1])
            elif line.startswith("Frame Time:"):
                fps = 1.0 / float(line.split()[2])
            if frames is not None and fps is not None:
                break
    if frames is None or fps is None:
        raise DataValidationError(f"{path} lacks Frames/Frame Time header")
    return fps, frames


def build_manifest(root: str | Path) -> DatasetManifest:
    """Scan the directory layout and validate the dataset invariants."""
    root = Path(root)
    motions_dir, texts_dir, splits_dir = root / "motions", root / "texts", root / "splits"
    problems = []
    if not motions_dir.is_dir():
        raise DataValidationError(f"missing motions directory under {root}")

    clips: dict[str, dict] = {}
    for path in sorted(motions_dir.iterdir()):
        if path.suffix == ".json":
            continue
        if path.suffix not in (".bvh", ".tensor"):
            continue
        cid = path.stem
        if cid in clips:
            problems.append(f"duplicate clip id {cid!r} (both .bvh and .tensor present)")
            continue
        try:
            if path.suffix == ".bvh":
                fps, frames = _bvh_header(path)
            else:
                with open(str(path) + ".json", "r", encoding="utf-8") as fh:
                    meta = json.load(fh)
                fps, frames = float(meta.get("fps", 30.0)), int(meta["shape"][0])
        except (OSError, KeyError, ValueError, DataValidationError) as ex:
            problems.append(f"unreadable motion file {path.name}: {ex}")
            continue
        clips[cid] = {
            "motion": str(path.relative_to(root)),
            "fps": fps,
            "frames": frames,
            "mirrored": False,
            "source": None,
        }
    if not clips:
        problems.append("no motion files found")

    captions: dict[str, list[str]] = {}
    caption_texts: dict[str, str] = {}
    if texts_dir.is_dir():
        for path in sorted(texts_dir.glob("*.txt")):
            cid = path.stem
            if cid not in clips:
                problems.append(f"caption file {path.name} has no matching motion")
                continue
            lines = [l.strip() for l in path.read_text(encoding="utf-8").splitlines()]
            lines = [l for l in lines if l]
            if not lines:
                problems.append(f"caption file {path.name} is empty")
                continue
            ids = [f"{cid}#{k}" for k in range(len(lines))]
            captions[cid] = ids
            caption_texts.update(dict(zip(ids, lines)))
    missing_caps = [cid for cid in clips if cid not in captions]
    if missing_caps:
        problems.append(f"clips without captions: {missing_caps[:5]}")

    splits: dict[str, list[str]] = {}
    if splits_dir.is_dir():
        for name in ("train", "val", "test"):
            f = splits_dir / f"{name}.txt"
            if f.exists():
                splits[name] = [l.strip() for l in f.read_text().splitlines() if l.strip()]

    if problems:
        raise DataValidationError("dataset validation failed:\n- " + "\n- ".join(problems))
    manifest = DatasetManifest(
        root=str(root),
        clips=clips,
        captions=captions,
        caption_texts=caption_texts,
        splits=splits,
    )
    manifest.validate()
    return manifest


def augment_with_mirrors(manifest: DatasetManifest) -> DatasetManifest:
    """Add a mirrored twin per clip with left/right-swapped captions.

    The twin shares the source motion file (the loader mirrors on read),
    inherits the split of its source, and mirrored test clips therefore
    never leak into train.
    """
    out = DatasetManifest(
        root=manifest.root,
        clips=dict(manifest.clips),
        captions=dict(manifest.captions),
        caption_texts=dict(manifest.caption_texts),
        splits={k: list(v) for k, v in manifest.splits.items()},
    )
    for cid, info in manifest.clips.items():
        if info.get("mirrored"):
            continue
        mid = mirror_id(cid)
        if mid in out.clips:
            continue
        out.clips[mid] = {**info, "mirrored": True, "source": cid}
        mcaps = []
        for cap_id in manifest.captions.get(cid, []):
            mcap_id = "M_" + cap_id
            mcaps.append(mcap_id)
            out.caption_texts[mcap_id] = swap_left_right(manifest.caption_texts[cap_id])
        out.captions[mid] = mcaps
        split = manifest.split_of(cid)
        if split is not None:
            out.splits[split].append(mid)
    out.validate()
    return out


def make_splits(
    ids: list[str],
    seed: int,
    val_frac: float = 0.05,
    test_frac: float = 0.10,
    scenario: dict[str, str] | None = None,
) -> dict[str, list[str]]:
    """Random split, stratified by a scenario tag when one is supplied."""
    rng = np.random.default_rng(seed)
    groups: dict[str, list[str]] = {}
    for i in ids:
        groups.setdefault(scenario[i] if scenario else "all", []).append(i)
    splits = {"train": [], "val": [], "test": []}
    for members in groups.values():
        members = sorted(members)
        rng.shuffle(members)
        n = len(members)
        n_test = int(round(n * test_frac))
        n_val = int(round(n * val_frac))
        splits["test"] += members[:n_test]
        splits["val"] += members[n_test : n_test + n_val]
        splits["train"] += members[n_test + n_val :]
    return {k: sorted(v) for k, v in splits.items()}
