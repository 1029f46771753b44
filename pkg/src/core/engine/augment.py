"""
CutDepth, the comparison augmentations (CutOut, Random Erasing, CutMix)
and the baseline flip / color / rotation transforms.

All operations are pure: inputs are never modified and every random
quantity comes from the RngStream passed in. Draw order per call is fixed
so that provenance records replay exactly:

    sample_region     a, b, c, d
    random_erasing    h*w*3 values, row-major, channel-minor
    color_jitter      gamma, brightness, c_r, c_g, c_b
    rotate_pair       angle (only when no angle is given)
    apply_baseline    flip, rotation, color gate, [color_jitter draws]
    apply             [baseline draws], gate, [a, b, c, d], [method draws]

Region width and height never drop below one pixel.
"""

import logging
import math
from typing import Any

import cv2
import numpy as np

from ..errors import ParameterError, ShapeMismatchError
from ..models.augment_spec import (
    PER_IMAGE_MINMAX,
    AugmentSpec,
    BaselineSpec,
    FillMode,
    Method,
    NormStrategy,
    ProvenanceRecord,
    check_interval,
    check_p,
)
from ..models.images import DepthMap, Region, RgbImage, SamplePair
from .planes import normalize_depth, replicate_channels
from .rng import RngStream

log = logging.getLogger(__name__)

DEFAULT_JITTER_RANGE = (0.9, 1.1)
DEFAULT_MAX_ROTATION = 2.5


def _check_size(width: int, height: int) -> None:
    for name, value in (("W", width), ("H", height)):
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
            raise ParameterError(f"{name} must be an integer >= 1, got {value!r}")


# --- region sampling ---

def region_from_draws(a: float, b: float, c: float, d: float, width: int, height: int, p: float) -> Region:
    """
    Region for given uniform draws.

    l = floor(a*W), u = floor(b*H),
    w = max(floor((W - l)*c*p), 1), h = max(floor((H - u)*d*p), 1).
    """
    if not (0.0 <= a < 1.0 and 0.0 <= b < 1.0):
        raise ParameterError(f"position draws must be in [0, 1), got a={a}, b={b}")
    if not (0.0 <= c <= 1.0 and 0.0 <= d <= 1.0):
        raise ParameterError(f"size draws must be in [0, 1], got c={c}, d={d}")
    left = math.floor(a * width)
    top = math.floor(b * height)
    w = max(math.floor((width - left) * c * p), 1)
    h = max(math.floor((height - top) * d * p), 1)
    return Region(left, top, w, h)


def sample_region(rng: RngStream, width: int, height: int, p: float) -> Region:
    """Draw a, b, c, d (in that order) and build the paste region."""
    p = check_p(p)
    _check_size(width, height)
    a, b, c, d = (rng.uniform() for _ in range(4))
    return region_from_draws(a, b, c, d, width, height, p)


def sample_regions(rng: RngStream, width: int, height: int, p: float, n: int) -> np.ndarray:
    """
    n regions as an (n, 4) int64 array of (l, u, w, h).

    Consumes the same draws as n successive sample_region calls.
    """
    p = check_p(p)
    _check_size(width, height)
    if n < 0:
        raise ParameterError(f"n must be >= 0, got {n}")
    draws = rng.uniform_array((n, 4))
    a, b, c, d = draws.T
    left = np.floor(a * width)
    top = np.floor(b * height)
    w = np.maximum(np.floor((width - left) * c * p), 1)
    h = np.maximum(np.floor((height - top) * d * p), 1)
    return np.stack([left, top, w, h], axis=1).astype(np.int64)


# --- region methods ---

def _pasted(base: np.ndarray, patch: np.ndarray, region: Region) -> np.ndarray:
    out = base.copy()
    rows, cols = region.slices
    out[rows, cols] = patch[rows, cols]
    return out


def cut_depth(pair: SamplePair, region: Region, depth_norm: NormStrategy = PER_IMAGE_MINMAX) -> RgbImage:
    """
    Paste the channel-replicated, normalized depth into the RGB input.

    Equivalent to M * x_s + (1 - M) * x_t with M zero inside the region.
    The depth target itself is left untouched.
    """
    if pair.rgb.size != pair.depth.size:
        raise ShapeMismatchError("rgb and depth sizes differ")
    region.check_bounds(pair.width, pair.height)
    depth_image = replicate_channels(normalize_depth(pair.depth, depth_norm))
    return RgbImage(_pasted(pair.rgb.values, depth_image.values, region))


def cut_out(rgb: RgbImage, region: Region, fill_mode: FillMode = FillMode()) -> RgbImage:
    """Fill the region with the per-channel image mean or a constant."""
    region.check_bounds(rgb.width, rgb.height)
    if fill_mode.kind == "image-mean":
        fill = rgb.values.mean(axis=(0, 1))
    else:
        fill = np.full(3, fill_mode.value)
    out = rgb.values.copy()
    rows, cols = region.slices
    out[rows, cols] = fill
    return RgbImage(np.clip(out, 0.0, 1.0))


def random_erasing(rgb: RgbImage, region: Region, rng: RngStream) -> RgbImage:
    """Replace every pixel/channel in the region with an independent uniform draw."""
    region.check_bounds(rgb.width, rgb.height)
    noise = rng.uniform_array((region.h, region.w, 3))
    out = rgb.values.copy()
    rows, cols = region.slices
    out[rows, cols] = noise
    return RgbImage(out)


def cut_mix(dst: RgbImage, src: RgbImage, region: Region) -> RgbImage:
    """Copy the region from src into dst."""
    if dst.size != src.size:
        raise ShapeMismatchError(f"CutMix images differ in size: {dst.size} vs {src.size}")
    region.check_bounds(dst.width, dst.height)
    return RgbImage(_pasted(dst.values, src.values, region))


# --- baseline transforms ---

def horizontal_flip(pair: SamplePair) -> SamplePair:
    """Mirror rgb and depth together about the vertical axis."""
    return SamplePair(
        RgbImage(pair.rgb.values[:, ::-1, :]),
        DepthMap(pair.depth.values[:, ::-1]),
    )


def adjust_color(rgb: RgbImage, gamma: float, brightness: float, gains=(1.0, 1.0, 1.0)) -> RgbImage:
    """clamp(rgb^gamma * brightness * gain_k, 0, 1)."""
    if gamma <= 0 or brightness <= 0 or any(g <= 0 for g in gains):
        raise ParameterError("gamma, brightness and channel gains must be positive")
    gains = np.asarray(gains, dtype=np.float64).reshape(1, 1, 3)
    out = np.power(rgb.values, gamma) * brightness * gains
    return RgbImage(np.clip(out, 0.0, 1.0))


def color_jitter(
    rgb: RgbImage,
    rng: RngStream,
    gamma_range=DEFAULT_JITTER_RANGE,
    brightness_range=DEFAULT_JITTER_RANGE,
    per_channel_range=DEFAULT_JITTER_RANGE,
) -> RgbImage:
    """Random gamma, brightness and per-channel gain, drawn in that order."""
    return adjust_color(rgb, *_draw_color_params(rng, gamma_range, brightness_range, per_channel_range))


def _draw_color_params(rng, gamma_range, brightness_range, per_channel_range):
    gamma_lo, gamma_hi = check_interval("gamma_range", gamma_range, positive=True)
    bright_lo, bright_hi = check_interval("brightness_range", brightness_range, positive=True)
    gain_lo, gain_hi = check_interval("per_channel_range", per_channel_range, positive=True)
    gamma = rng.uniform_range(gamma_lo, gamma_hi)
    brightness = rng.uniform_range(bright_lo, bright_hi)
    gains = tuple(rng.uniform_range(gain_lo, gain_hi) for _ in range(3))
    return gamma, brightness, gains


def _rotation_matrix(width: int, height: int, angle: float) -> np.ndarray:
    center = ((width - 1) / 2.0, (height - 1) / 2.0)
    matrix = cv2.getRotationMatrix2D(center, angle, 1.0)
    # drop sin/cos round-off so right angles map pixel centres exactly
    return np.round(matrix, 12)


def rotate_pair(
    pair: SamplePair,
    angle: float | None = None,
    rng: RngStream | None = None,
    max_angle: float = DEFAULT_MAX_ROTATION,
) -> SamplePair:
    """
    Rotate rgb and depth by the same angle (degrees, counter-clockwise on
    screen) about the image centre.

    Depth uses nearest-neighbour sampling so only input values (or 0 for
    pixels rotated in from outside) appear; rgb is bilinear. With angle None
    the angle is drawn uniformly from [-max_angle, max_angle).
    """
    if angle is None:
        if rng is None:
            raise ParameterError("rotate_pair needs either an angle or an rng")
        angle = (2.0 * rng.uniform() - 1.0) * max_angle
    if not math.isfinite(angle) or abs(angle) > max_angle:
        raise ParameterError(f"|angle| must be <= {max_angle}, got {angle}")
    if angle == 0:
        return pair

    matrix = _rotation_matrix(pair.width, pair.height, angle)
    size = (pair.width, pair.height)
    depth = cv2.warpAffine(
        pair.depth.values.copy(), matrix, size,
        flags=cv2.INTER_NEAREST, borderMode=cv2.BORDER_CONSTANT, borderValue=0,
    )
    rgb = cv2.warpAffine(
        pair.rgb.values.copy(), matrix, size,
        flags=cv2.INTER_LINEAR, borderMode=cv2.BORDER_REFLECT_101,
    )
    return SamplePair(RgbImage(np.clip(rgb, 0.0, 1.0)), DepthMap(depth))


def apply_baseline(pair: SamplePair, spec: BaselineSpec, rng: RngStream) -> tuple[SamplePair, dict[str, Any]]:
    """
    Baseline training augmentation: random flip, rotation and color jitter.

    Returns the transformed pair and the parameters that were used.
    """
    params: dict[str, Any] = {}

    flip = rng.uniform() < spec.flip_probability
    if flip:
        pair = horizontal_flip(pair)
    params["flip"] = flip

    angle = (2.0 * rng.uniform() - 1.0) * spec.max_rotation
    pair = rotate_pair(pair, angle, max_angle=spec.max_rotation)
    params["angle"] = angle

    if rng.uniform() < spec.color_probability:
        gamma, brightness, gains = _draw_color_params(
            rng, spec.gamma_range, spec.brightness_range, spec.channel_range
        )
        pair = SamplePair(adjust_color(pair.rgb, gamma, brightness, gains), pair.depth)
        params["color"] = {"gamma": gamma, "brightness": brightness, "gains": list(gains)}
    else:
        params["color"] = None

    return pair, params


# --- dispatch ---

def augment_region(
    method: Method,
    pair: SamplePair,
    region: Region,
    spec: AugmentSpec,
    rng: RngStream,
    partner: SamplePair | None = None,
) -> SamplePair:
    """Run one region-based method on a pair for an already sampled region."""
    method = Method.parse(method)
    if method is Method.CUTDEPTH:
        return SamplePair(cut_depth(pair, region, spec.depth_norm), pair.depth)
    if method is Method.CUTOUT:
        return SamplePair(cut_out(pair.rgb, region, spec.fill_mode), pair.depth)
    if method is Method.RANDOM_ERASING:
        return SamplePair(random_erasing(pair.rgb, region, rng), pair.depth)
    if method is Method.CUTMIX:
        if partner is None:
            raise ParameterError("cutmix needs a partner sample")
        rgb = cut_mix(pair.rgb, partner.rgb, region)
        depth = pair.depth
        if spec.cutmix_mix_depth:
            depth = DepthMap(_pasted(pair.depth.values, partner.depth.values, region))
        return SamplePair(rgb, depth)
    return pair


def apply(
    pair: SamplePair,
    spec: AugmentSpec,
    rng: RngStream,
    partner: SamplePair | None = None,
) -> tuple[SamplePair, ProvenanceRecord]:
    """
    Augment one sample.

    The optional baseline runs first. Then, with probability
    spec.apply_probability, a region is sampled and the spec's method is
    applied. The returned record lists every draw consumed.
    """
    baseline_params = None
    region = None

    with rng.record() as draws:
        if spec.baseline is not None:
            pair, baseline_params = apply_baseline(pair, spec.baseline, rng)

        gate = rng.uniform()
        if gate >= spec.apply_probability:
            status = "skipped"
        elif spec.method is Method.NONE:
            status = "passthrough"
        else:
            region = sample_region(rng, pair.width, pair.height, spec.p)
            pair = augment_region(spec.method, pair, region, spec, rng, partner)
            status = "applied"

    log.debug(f"{spec.method.value}: {status} region={region} draws={draws.total}")

    record = ProvenanceRecord(
        method=spec.method.value,
        status=status,
        region=region,
        draws=list(draws.scalars),
        n_draws=draws.total,
        seed=rng.seed,
        baseline=baseline_params,
    )
    return pair, record
