"""
RGB-D dataset files: JSONL manifests, PNG image pairs, provenance logs.

Images are PNG. RGB is 8-bit, 3 channels; depth is 16-bit, 1 channel,
storing meters * depth_scale.

Manifest layout (JSON Lines):

    {"format": "cutdepth-manifest", "depth_scale": 1000.0}
    {"id": "scene_00000", "rgb_path": "rgb/scene_00000.png", "depth_path": "depth/scene_00000.png"}
    ...

Paths are relative to the manifest's directory. rgb_path may be null for
prediction-only manifests.
"""

import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import cv2
import numpy as np

from ..engine.rng import RngStream
from ..errors import (
    DatasetError,
    IdMismatchError,
    ImageFormatError,
    ManifestError,
    MissingFileError,
    PairDimensionError,
    ParameterError,
)
from ..models.augment_spec import ProvenanceRecord
from ..models.images import DepthMap, RgbImage, SamplePair

log = logging.getLogger(__name__)

MANIFEST_FORMAT = "cutdepth-manifest"
DEFAULT_DEPTH_SCALE = 1000.0
MAX_RAW_DEPTH = np.iinfo(np.uint16).max
PNG_PARAMS = [cv2.IMWRITE_PNG_COMPRESSION, 3]


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    depth_path: Path
    rgb_path: Path | None = None


@dataclass
class Manifest:
    """Ordered list of entries sharing one depth scale."""
    entries: list[ManifestEntry] = field(default_factory=list)
    depth_scale: float = DEFAULT_DEPTH_SCALE

    def __post_init__(self):
        if not (math.isfinite(self.depth_scale) and self.depth_scale > 0):
            raise ManifestError(f"depth_scale must be > 0, got {self.depth_scale}")
        seen = set()
        for entry in self.entries:
            if entry.id in seen:
                raise ManifestError(f"duplicate id {entry.id!r}")
            seen.add(entry.id)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def ids(self) -> list[str]:
        return [e.id for e in self.entries]


# --- manifest ---

def read_manifest(path: Path | str) -> Manifest:
    """
    Parse a JSONL manifest.

    Returns:
        Manifest with entry paths resolved against the manifest's directory.
    """
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"manifest not found: {path}")
    root = path.parent

    with open(path, "r", encoding="utf-8") as f:
        lines = [(n, line.strip()) for n, line in enumerate(f, start=1) if line.strip()]
    if not lines:
        raise ManifestError(f"{path}: empty manifest (missing header line)")

    records = []
    for n, line in lines:
        try:
            records.append((n, json.loads(line)))
        except json.JSONDecodeError as e:
            raise ManifestError(f"{path}:{n}: invalid JSON: {e.msg}") from e

    header_line, header = records[0]
    if not isinstance(header, dict) or header.get("format") != MANIFEST_FORMAT:
        raise ManifestError(f"{path}:{header_line}: expected a {MANIFEST_FORMAT!r} header")

    entries = []
    for n, record in records[1:]:
        try:
            rgb = record.get("rgb_path")
            entries.append(ManifestEntry(
                id=str(record["id"]),
                depth_path=root / record["depth_path"],
                rgb_path=root / rgb if rgb else None,
            ))
        except (KeyError, TypeError, AttributeError) as e:
            raise ManifestError(f"{path}:{n}: malformed entry ({e})") from e

    try:
        depth_scale = float(header.get("depth_scale", DEFAULT_DEPTH_SCALE))
    except (TypeError, ValueError) as e:
        raise ManifestError(f"{path}:{header_line}: invalid depth_scale") from e
    manifest = Manifest(entries, depth_scale)
    log.debug(f"Read {len(manifest)} entries from {path}")
    return manifest


def _relative(target: Path, root: Path) -> str:
    return Path(os.path.relpath(Path(target).resolve(), root.resolve())).as_posix()


def write_manifest(manifest: Manifest, path: Path | str) -> Path:
    """Write a manifest with paths relative to its own directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    root = path.parent

    lines = [json.dumps({"format": MANIFEST_FORMAT, "depth_scale": manifest.depth_scale})]
    for entry in manifest.entries:
        lines.append(json.dumps({
            "id": entry.id,
            "rgb_path": _relative(entry.rgb_path, root) if entry.rgb_path else None,
            "depth_path": _relative(entry.depth_path, root),
        }))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
    return path


def align_manifests(gt: Manifest, pred: Manifest) -> list[tuple[ManifestEntry, ManifestEntry]]:
    """Pair entries by id in ground-truth order; raise listing any offenders."""
    by_id = {e.id: e for e in pred.entries}
    missing = [i for i in gt.ids if i not in by_id]
    gt_ids = set(gt.ids)
    extra = [i for i in pred.ids if i not in gt_ids]
    if missing or extra:
        raise IdMismatchError(missing, extra)
    return [(e, by_id[e.id]) for e in gt.entries]


def subsample_manifest(manifest: Manifest, fraction: float, seed: int) -> Manifest:
    """
    Keep fraction * n entries (rounded half up) chosen by a seeded permutation.

    The kept entries stay in their original order.
    """
    if not (math.isfinite(fraction) and 0.0 < fraction <= 1.0):
        raise ParameterError(f"fraction must be in (0, 1], got {fraction}")
    n = len(manifest)
    keep = int(math.floor(fraction * n + 0.5))
    order = np.argsort(RngStream(seed).uniform_array(n), kind="stable")
    chosen = sorted(int(i) for i in order[:keep])
    return Manifest([manifest.entries[i] for i in chosen], manifest.depth_scale)


# --- quantization ---

def rgb_to_bytes(values: np.ndarray) -> np.ndarray:
    """[0, 1] floats to uint8, round half up."""
    return np.floor(np.clip(values, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def depth_to_raw(values: np.ndarray, depth_scale: float) -> np.ndarray:
    """
    Meters to uint16 raw units, round half up.

    Products are pre-rounded to 9 decimals so 9.9995 m at scale 1000 is
    10000, not 9999. Values beyond the 16-bit range are clipped.
    """
    raw = np.floor(np.round(np.asarray(values) * depth_scale, 9) + 0.5)
    overflow = int(np.count_nonzero(raw > MAX_RAW_DEPTH))
    if overflow:
        log.warning(f"{overflow} depth pixels exceed {MAX_RAW_DEPTH / depth_scale:g} m and were clipped")
        raw = np.minimum(raw, MAX_RAW_DEPTH)
    return raw.astype(np.uint16)


# --- images ---

def _read_image(path: Path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"image not found: {path}")
    image = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if image is None:
        raise ImageFormatError(f"{path}: not a readable image")
    return image


def _write_image(image: np.ndarray, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        ok = cv2.imwrite(str(path), image, PNG_PARAMS)
    except cv2.error as e:
        raise DatasetError(f"{path}: write failed: {e}") from e
    if not ok:
        raise DatasetError(f"{path}: write failed")
    return path


def load_rgb(path: Path | str) -> RgbImage:
    image = _read_image(path)
    if image.dtype != np.uint8 or image.ndim != 3 or image.shape[2] != 3:
        raise ImageFormatError(f"{path}: expected 8-bit 3-channel rgb, got {image.dtype} {image.shape}")
    return RgbImage(cv2.cvtColor(image, cv2.COLOR_BGR2RGB) / 255.0)


def load_depth(path: Path | str, depth_scale: float = DEFAULT_DEPTH_SCALE) -> DepthMap:
    image = _read_image(path)
    if image.dtype != np.uint16 or image.ndim != 2:
        raise ImageFormatError(f"{path}: expected 16-bit single-channel depth, got {image.dtype} {image.shape}")
    return DepthMap(image / depth_scale)


def load_pair(entry: ManifestEntry, depth_scale: float = DEFAULT_DEPTH_SCALE) -> SamplePair:
    """Read one rgb/depth pair; rgb / 255, depth raw / depth_scale."""
    if entry.rgb_path is None:
        raise ManifestError(f"entry {entry.id!r} has no rgb_path")
    rgb = load_rgb(entry.rgb_path)
    depth = load_depth(entry.depth_path, depth_scale)
    if rgb.size != depth.size:
        raise PairDimensionError(
            f"{entry.id}: rgb is {rgb.width}x{rgb.height} but depth is {depth.width}x{depth.height}"
        )
    return SamplePair(rgb, depth)


def save_rgb(rgb: RgbImage, path: Path | str) -> Path:
    return _write_image(cv2.cvtColor(rgb_to_bytes(rgb.values), cv2.COLOR_RGB2BGR), path)


def save_depth(depth: DepthMap, path: Path | str, depth_scale: float = DEFAULT_DEPTH_SCALE) -> Path:
    return _write_image(depth_to_raw(depth.values, depth_scale), path)


def save_pair(
    pair: SamplePair,
    rgb_path: Path | str,
    depth_path: Path | str,
    depth_scale: float = DEFAULT_DEPTH_SCALE,
) -> tuple[Path, Path]:
    """Inverse of load_pair up to quantization; identical inputs give identical bytes."""
    return save_rgb(pair.rgb, rgb_path), save_depth(pair.depth, depth_path, depth_scale)


# --- provenance ---

def write_provenance(records: Iterable[ProvenanceRecord], path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for record in records:
            f.write(json.dumps(record.to_dict()) + "\n")
    return path


def read_provenance(path: Path | str) -> list[ProvenanceRecord]:
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"provenance file not found: {path}")
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for n, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                records.append(ProvenanceRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError) as e:
                raise DatasetError(f"{path}:{n}: malformed provenance record ({e})") from e
    return records
