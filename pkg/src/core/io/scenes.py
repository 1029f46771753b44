"""
Synthetic RGB-D scenes: flat boxes at discrete depths in front of a far
background plane.

Contract used by the edge tests:
  - depth takes depth_levels evenly spaced values over depth_range; the
    background sits at the far end and boxes at one of the nearer levels
  - rgb luminance is 0.15 + 0.7 * (1 - n), n = depth mapped from
    depth_range onto [0, 1], so every depth step is a luminance step
  - each box adds a per-channel tint with zero channel mean, so the tint
    changes colour but never luminance, and no channel leaves [0, 1]
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..engine.rng import RngStream
from ..errors import ParameterError
from ..models.images import DepthMap, RgbImage, SamplePair

log = logging.getLogger(__name__)

LUMA_NEAR = 0.85
LUMA_SPAN = 0.7
TINT_AMPLITUDE = 0.12


@dataclass(frozen=True)
class SceneSpec:
    width: int = 64
    height: int = 48
    n_boxes: int = 4
    depth_range: tuple[float, float] = (1.0, 10.0)
    seed: int = 0
    depth_levels: int = 8

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ParameterError(f"scene size must be at least 1x1, got {self.width}x{self.height}")
        if self.n_boxes < 1:
            raise ParameterError(f"n_boxes must be >= 1, got {self.n_boxes}")
        if self.depth_levels < 2:
            raise ParameterError(f"depth_levels must be >= 2, got {self.depth_levels}")
        lo, hi = (float(v) for v in self.depth_range)
        if not (0.0 < lo < hi and math.isfinite(hi)):
            raise ParameterError(f"depth_range must be a positive interval, got ({lo}, {hi})")
        object.__setattr__(self, "depth_range", (lo, hi))

    @classmethod
    def from_config(cls, section: dict, seed: int = 0) -> "SceneSpec":
        return cls(
            width=int(section.get("width", 64)),
            height=int(section.get("height", 48)),
            n_boxes=int(section.get("n_boxes", 4)),
            depth_range=tuple(section.get("depth_range", (1.0, 10.0))),
            seed=seed,
            depth_levels=int(section.get("depth_levels", 8)),
        )

    @property
    def levels(self) -> np.ndarray:
        return np.linspace(self.depth_range[0], self.depth_range[1], self.depth_levels)


def _box_extent(draw: float, size: int) -> int:
    smallest = max(size // 8, 1)
    largest = max(size // 2, smallest)
    return smallest + math.floor(draw * (largest - smallest + 1))


def scene_luminance(depth: np.ndarray, depth_range: tuple[float, float]) -> np.ndarray:
    """Luminance the generator assigns to a depth value."""
    lo, hi = depth_range
    normalized = (depth - lo) / (hi - lo)
    return LUMA_NEAR - LUMA_SPAN * normalized


def generate_scene(spec: SceneSpec) -> SamplePair:
    """
    Render one scene deterministically from spec.seed.

    Per box the stream yields: a, b (position), c, d (size), e (depth level),
    t1, t2 (tint). Boxes are painted far-to-near.
    """
    rng = RngStream(spec.seed)
    width, height = spec.width, spec.height
    levels = spec.levels

    boxes = []
    for _ in range(spec.n_boxes):
        a, b, c, d, e, t1, t2 = (rng.uniform() for _ in range(7))
        w = _box_extent(c, width)
        h = _box_extent(d, height)
        left = math.floor(a * (width - w + 1))
        top = math.floor(b * (height - h + 1))
        level = levels[math.floor(e * (spec.depth_levels - 1))]
        tint = TINT_AMPLITUDE * np.array([t1 - 0.5, t2 - 0.5, 1.0 - t1 - t2])
        boxes.append((level, left, top, w, h, tint))

    depth = np.full((height, width), levels[-1])
    tints = np.zeros((height, width, 3))
    # stable sort keeps draw order among boxes at the same depth
    for level, left, top, w, h, tint in sorted(boxes, key=lambda box: -box[0]):
        depth[top:top + h, left:left + w] = level
        tints[top:top + h, left:left + w] = tint

    luma = scene_luminance(depth, spec.depth_range)
    rgb = np.clip(luma[:, :, np.newaxis] + tints, 0.0, 1.0)
    log.debug(f"Scene seed={spec.seed}: {spec.n_boxes} boxes over {width}x{height}")
    return SamplePair(RgbImage(rgb), DepthMap(depth))
