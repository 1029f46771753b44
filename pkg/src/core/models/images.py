"""
Image, depth and region value types.

Arrays are stored row-major as (H, W[, C]) float64 and frozen after
construction: every operation returns a new value instead of mutating.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError, RegionBoundsError, ShapeMismatchError


def _frozen_array(values, ndim: int, name: str) -> np.ndarray:
    array = np.array(values, dtype=np.float64, copy=True)
    if array.ndim != ndim:
        raise ShapeMismatchError(f"{name} must have {ndim} dimensions, got shape {array.shape}")
    if array.shape[0] < 1 or array.shape[1] < 1:
        raise ShapeMismatchError(f"{name} must be at least 1x1, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ParameterError(f"{name} contains non-finite values")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class RgbImage:
    """Normalized RGB image, values in [0, 1], shape (H, W, 3)."""
    values: np.ndarray

    CHANNELS = 3

    def __post_init__(self):
        array = _frozen_array(self.values, 3, "RgbImage")
        if array.shape[2] != self.CHANNELS:
            raise ShapeMismatchError(f"RgbImage must have 3 channels, got {array.shape[2]}")
        if array.min() < 0.0 or array.max() > 1.0:
            raise ParameterError("RgbImage values must lie in [0, 1]")
        object.__setattr__(self, "values", array)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def size(self) -> tuple[int, int]:
        """(W, H)."""
        return self.width, self.height

    def __eq__(self, other) -> bool:
        return isinstance(other, RgbImage) and np.array_equal(self.values, other.values)


@dataclass(frozen=True, eq=False)
class DepthMap:
    """Metric depth in meters, shape (H, W); 0 marks an invalid pixel."""
    values: np.ndarray

    def __post_init__(self):
        array = _frozen_array(self.values, 2, "DepthMap")
        if array.min() < 0.0:
            raise ParameterError("DepthMap values must be >= 0")
        object.__setattr__(self, "values", array)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def size(self) -> tuple[int, int]:
        return self.width, self.height

    @property
    def valid(self) -> np.ndarray:
        return self.values > 0

    def __eq__(self, other) -> bool:
        return isinstance(other, DepthMap) and np.array_equal(self.values, other.values)


@dataclass(frozen=True)
class SamplePair:
    """Training sample: RGB input and its depth target, same W and H."""
    rgb: RgbImage
    depth: DepthMap

    def __post_init__(self):
        if self.rgb.size != self.depth.size:
            raise ShapeMismatchError(
                f"rgb is {self.rgb.width}x{self.rgb.height} but depth is "
                f"{self.depth.width}x{self.depth.height}"
            )

    @property
    def width(self) -> int:
        return self.rgb.width

    @property
    def height(self) -> int:
        return self.rgb.height


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangle: columns [l, l+w), rows [u, u+h)."""
    l: int
    u: int
    w: int
    h: int

    def __post_init__(self):
        for name in ("l", "u", "w", "h"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ParameterError(f"Region.{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.w < 1 or self.h < 1:
            raise RegionBoundsError(f"Region size must be at least 1x1, got {self.w}x{self.h}")
        if self.l < 0 or self.u < 0:
            raise RegionBoundsError(f"Region origin must be non-negative, got ({self.l}, {self.u})")

    def fits(self, width: int, height: int) -> bool:
        return self.l + self.w <= width and self.u + self.h <= height

    def check_bounds(self, width: int, height: int) -> "Region":
        """Raise RegionBoundsError unless the region fits a width x height image."""
        if not self.fits(width, height):
            raise RegionBoundsError(f"{self} does not fit a {width}x{height} image")
        return self

    @property
    def slices(self) -> tuple[slice, slice]:
        """(rows, cols) index for numpy arrays."""
        return slice(self.u, self.u + self.h), slice(self.l, self.l + self.w)

    @property
    def area(self) -> int:
        return self.w * self.h

    def to_dict(self) -> dict[str, int]:
        return {"l": self.l, "u": self.u, "w": self.w, "h": self.h}

    @classmethod
    def from_dict(cls, data: dict) -> "Region":
        return cls(int(data["l"]), int(data["u"]), int(data["w"]), int(data["h"]))


@dataclass(frozen=True)
class RegionMask:
    """
    Binary mixing matrix M: 0 inside the region, 1 elsewhere.

    Stored as the region plus image size; to_array() materializes it.
    """
    region: Region
    width: int
    height: int

    def __post_init__(self):
        self.region.check_bounds(self.width, self.height)

    def to_array(self) -> np.ndarray:
        """Dense (H, W) uint8 matrix."""
        cells = np.ones((self.height, self.width), dtype=np.uint8)
        cells[self.region.slices] = 0
        return cells

    @property
    def zero_count(self) -> int:
        return self.region.area
