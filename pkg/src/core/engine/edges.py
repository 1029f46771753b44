"""
Binary gradient edges and the edge-preservation score.
"""

import numpy as np
import cv2

from ..errors import ParameterError, ShapeMismatchError
from ..models.images import Region, RgbImage
from .planes import luminance

DEFAULT_EDGE_THRESHOLD = 0.25


def edge_map(plane, threshold: float = DEFAULT_EDGE_THRESHOLD) -> np.ndarray:
    """
    3x3 Sobel gradient magnitude binarized at threshold.

    Border pixels are always False; planes narrower than 3 pixels in either
    direction have no interior and give an all-False map.
    """
    if not threshold > 0:
        raise ParameterError(f"edge threshold must be > 0, got {threshold}")
    plane = np.ascontiguousarray(plane, dtype=np.float64)
    if plane.ndim != 2:
        raise ShapeMismatchError(f"edge_map expects a 2-D plane, got shape {plane.shape}")

    height, width = plane.shape
    edges = np.zeros((height, width), dtype=bool)
    if height < 3 or width < 3:
        return edges

    gx = cv2.Sobel(plane, cv2.CV_64F, 1, 0, ksize=3)
    gy = cv2.Sobel(plane, cv2.CV_64F, 0, 1, ksize=3)
    magnitude = np.hypot(gx, gy)
    edges[1:-1, 1:-1] = magnitude[1:-1, 1:-1] > threshold
    return edges


def edge_preservation_score(
    original: RgbImage,
    augmented: RgbImage,
    region: Region,
    threshold: float = DEFAULT_EDGE_THRESHOLD,
) -> float:
    """
    IoU of luminance edges of original and augmented inside region.

    Edges are detected on the region crop itself, so only the interior
    (the crop minus its one-pixel ring) is scored and the paste seam never
    counts as an edge. Returns 1.0 when neither crop has an interior edge,
    which includes regions thinner than 3 pixels.
    """
    if original.size != augmented.size:
        raise ShapeMismatchError(f"images differ in size: {original.size} vs {augmented.size}")
    region.check_bounds(original.width, original.height)

    rows, cols = region.slices
    before = edge_map(luminance(original)[rows, cols], threshold)
    after = edge_map(luminance(augmented)[rows, cols], threshold)

    union = np.count_nonzero(before | after)
    if union == 0:
        return 1.0
    return np.count_nonzero(before & after) / union
