"""
Plane-level helpers shared by the augmentations: the mixing mask, depth
normalization into image range, and channel replication.
"""

import numpy as np

from ..errors import DegenerateInputError, ParameterError
from ..models.augment_spec import PER_IMAGE_MINMAX, NormStrategy
from ..models.images import DepthMap, Region, RegionMask, RgbImage


def mask_from_region(region: Region, width: int, height: int) -> RegionMask:
    """Mixing matrix M for a region: zeros inside, ones elsewhere."""
    return RegionMask(region, width, height)


def normalize_depth(depth: DepthMap, strategy: NormStrategy = PER_IMAGE_MINMAX) -> np.ndarray:
    """
    Map metric depth onto [0, 1].

    Invalid (0) pixels map to 0. per-image-minmax maps the smallest valid
    depth to 0 and the largest to 1; a zero span maps every valid pixel to 0.
    fixed-range maps [lo, hi] to [0, 1] and clamps outside.
    """
    values = depth.values
    valid = values > 0
    out = np.zeros(values.shape, dtype=np.float64)

    if strategy.kind == "per-image-minmax":
        if not valid.any():
            raise DegenerateInputError("per-image-minmax needs at least one valid depth pixel")
        lo = values[valid].min()
        hi = values[valid].max()
        if hi > lo:
            out[valid] = (values[valid] - lo) / (hi - lo)
    else:
        out[valid] = np.clip((values[valid] - strategy.lo) / (strategy.hi - strategy.lo), 0.0, 1.0)

    return out


def replicate_channels(plane: np.ndarray, channels: int = 3) -> RgbImage:
    """Stack a [0, 1] plane into every channel of an RGB image."""
    if channels != RgbImage.CHANNELS:
        raise ParameterError(f"replicate_channels supports 3 channels, got {channels}")
    plane = np.asarray(plane, dtype=np.float64)
    return RgbImage(np.repeat(plane[:, :, np.newaxis], channels, axis=2))


def luminance(rgb: RgbImage) -> np.ndarray:
    """Unweighted channel mean, (r + g + b) / 3."""
    return rgb.values.sum(axis=2) / 3.0
