"""Shared fixtures: random pairs and synthetic manifests on disk."""

import hashlib
import math
from pathlib import Path

import numpy as np
import pytest

from cli.commands import cmd_synth
from core.io.scenes import SceneSpec
from core.models.images import DepthMap, RgbImage, SamplePair


def random_pair(seed: int, width: int = 8, height: int = 6, invalid_fraction: float = 0.0) -> SamplePair:
    """Pair with uniform rgb and depth in [0.5, 9.5) m; some pixels optionally invalid."""
    gen = np.random.default_rng(seed)
    rgb = gen.random((height, width, 3))
    depth = 0.5 + 9.0 * gen.random((height, width))
    if invalid_fraction:
        depth[gen.random((height, width)) < invalid_fraction] = 0.0
    return SamplePair(RgbImage(rgb), DepthMap(depth))


def brute_force(pred: np.ndarray, gt: np.ndarray) -> dict[str, float]:
    """Scalar double loop over all pixels with gt > 0."""
    n = 0
    abs_rel = log10 = sq = sq_log = 0.0
    hits = [0, 0, 0]
    for row in range(gt.shape[0]):
        for col in range(gt.shape[1]):
            g = float(gt[row, col])
            p = float(pred[row, col])
            if g <= 0:
                continue
            n += 1
            abs_rel += abs(p - g) / g
            log10 += abs(math.log10(p) - math.log10(g))
            sq += (p - g) ** 2
            sq_log += (math.log(p) - math.log(g)) ** 2
            ratio = max(p / g, g / p)
            for k in range(3):
                if ratio < 1.25 ** (k + 1):
                    hits[k] += 1
    return {
        "abs_rel": abs_rel / n,
        "log10": log10 / n,
        "rmse": math.sqrt(sq / n),
        "rmse_log": math.sqrt(sq_log / n),
        "d1": hits[0] / n,
        "d2": hits[1] / n,
        "d3": hits[2] / n,
    }


def tree_digest(root: Path) -> dict[str, str]:
    """Relative path -> sha256 of every file under root."""
    return {
        path.relative_to(root).as_posix(): hashlib.sha256(path.read_bytes()).hexdigest()
        for path in sorted(root.rglob("*"))
        if path.is_file()
    }


@pytest.fixture
def pair() -> SamplePair:
    return random_pair(0)


@pytest.fixture
def scene_manifest(tmp_path) -> Path:
    """Eight small synthetic scenes; returns the manifest path."""
    out = tmp_path / "scenes"
    cmd_synth(8, SceneSpec(width=32, height=24, n_boxes=3), out, seed=11)
    return out / "manifest.jsonl"
