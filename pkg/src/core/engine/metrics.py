"""
Depth error metrics, latent-vector distances, and augmentation
affinity / diversity.

Depth metrics follow the usual monocular-depth benchmark columns:

    abs_rel   mean |p - g| / g
    log10     mean |log10 p - log10 g|
    rmse      sqrt(mean (p - g)^2)
    rmse_log  sqrt(mean (ln p - ln g)^2)
    d_k       fraction of pixels with max(p/g, g/p) < 1.25^k

All statistics are over the valid mask only.
"""

import logging
import math
from typing import Iterable, Sequence

import numpy as np

from ..errors import EmptyEvaluationError, MetricDomainError, ParameterError, ShapeMismatchError
from ..models.images import DepthMap, Region
from ..models.reports import DepthEvalReport, DistanceReport, QualityReport

log = logging.getLogger(__name__)

DEFAULT_MIN_DEPTH = 0.001
DEFAULT_MAX_DEPTH = 10.0
DEFAULT_DIVERSITY_WINDOW = 10

THRESHOLDS = (1.25, 1.25**2, 1.25**3)

ORIENTATIONS = ("higher-better", "lower-better")


def valid_mask(
    gt: DepthMap,
    min_depth: float = DEFAULT_MIN_DEPTH,
    max_depth: float = DEFAULT_MAX_DEPTH,
    crop: Region | None = None,
) -> np.ndarray:
    """
    Pixels whose ground truth lies strictly inside (min_depth, max_depth).

    Args:
        gt: Ground-truth depth.
        min_depth: Lower cap, meters (exclusive).
        max_depth: Upper cap, meters (exclusive).
        crop: Optional evaluation rectangle; pixels outside it are masked out.

    Returns:
        (H, W) bool array.
    """
    if not (0.0 <= min_depth < max_depth):
        raise ParameterError(f"depth caps must satisfy 0 <= min < max, got ({min_depth}, {max_depth})")
    values = gt.values
    mask = (values > min_depth) & (values < max_depth)
    if crop is not None:
        crop.check_bounds(gt.width, gt.height)
        cropped = np.zeros_like(mask)
        cropped[crop.slices] = mask[crop.slices]
        mask = cropped
    return mask


class DepthErrorAccumulator:
    """
    Running sums of the depth error terms.

    Adding several images and calling report() gives metrics over the
    pooled valid pixels of all of them.
    """

    def __init__(self):
        self.n_valid = 0
        self._abs_rel = 0.0
        self._log10 = 0.0
        self._sq = 0.0
        self._sq_log = 0.0
        self._hits = [0, 0, 0]

    def add(self, pred: DepthMap, gt: DepthMap, mask: np.ndarray | None = None) -> int:
        """Accumulate one image; returns its valid pixel count."""
        if pred.size != gt.size:
            raise ShapeMismatchError(f"prediction is {pred.size}, ground truth is {gt.size}")
        if mask is None:
            mask = gt.valid
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != gt.values.shape:
            raise ShapeMismatchError(f"mask shape {mask.shape} does not match depth {gt.values.shape}")

        p = pred.values[mask]
        g = gt.values[mask]
        if p.size == 0:
            return 0
        if np.any(p <= 0):
            raise MetricDomainError("prediction must be positive on every evaluated pixel")
        if np.any(g <= 0):
            raise MetricDomainError("ground truth must be positive on every evaluated pixel")

        diff = p - g
        ratio = np.maximum(p / g, g / p)
        self.n_valid += int(p.size)
        self._abs_rel += float(np.sum(np.abs(diff) / g))
        self._log10 += float(np.sum(np.abs(np.log10(p) - np.log10(g))))
        self._sq += float(np.sum(diff * diff))
        log_diff = np.log(p) - np.log(g)
        self._sq_log += float(np.sum(log_diff * log_diff))
        for k, threshold in enumerate(THRESHOLDS):
            self._hits[k] += int(np.count_nonzero(ratio < threshold))
        return int(p.size)

    def report(self) -> DepthEvalReport:
        if self.n_valid == 0:
            raise EmptyEvaluationError("no valid pixel to evaluate")
        n = self.n_valid
        return DepthEvalReport(
            abs_rel=self._abs_rel / n,
            log10=self._log10 / n,
            rmse=math.sqrt(self._sq / n),
            rmse_log=math.sqrt(self._sq_log / n),
            d1=self._hits[0] / n,
            d2=self._hits[1] / n,
            d3=self._hits[2] / n,
            n_valid=n,
        )


def eval_depth(pred: DepthMap, gt: DepthMap, mask: np.ndarray | None = None) -> DepthEvalReport:
    """
    Depth metrics for one prediction.

    Args:
        pred: Predicted depth, positive on every masked pixel.
        gt: Ground truth.
        mask: Bool (H, W) valid mask; defaults to gt > 0.

    Returns:
        DepthEvalReport over the masked pixels.
    """
    accumulator = DepthErrorAccumulator()
    accumulator.add(pred, gt, mask)
    return accumulator.report()


def mean_reports(reports: Sequence[DepthEvalReport]) -> DepthEvalReport:
    """Unweighted mean of per-image reports; n_valid is the total."""
    if not reports:
        raise EmptyEvaluationError("no reports to average")
    count = len(reports)
    return DepthEvalReport(
        abs_rel=sum(r.abs_rel for r in reports) / count,
        log10=sum(r.log10 for r in reports) / count,
        rmse=sum(r.rmse for r in reports) / count,
        rmse_log=sum(r.rmse_log for r in reports) / count,
        d1=sum(r.d1 for r in reports) / count,
        d2=sum(r.d2 for r in reports) / count,
        d3=sum(r.d3 for r in reports) / count,
        n_valid=sum(r.n_valid for r in reports),
    )


def _as_vector(values, name: str) -> np.ndarray:
    vector = np.asarray(values, dtype=np.float64)
    if vector.ndim != 1 or vector.size == 0:
        raise ShapeMismatchError(f"{name} must be a non-empty 1-D vector, got shape {vector.shape}")
    if not np.all(np.isfinite(vector)):
        raise ParameterError(f"{name} contains non-finite values")
    return vector


def vector_distance(a, b) -> DistanceReport:
    """RMSE, MAE and cosine similarity between two feature vectors."""
    a = _as_vector(a, "a")
    b = _as_vector(b, "b")
    if a.shape != b.shape:
        raise ShapeMismatchError(f"vectors differ in length: {a.size} vs {b.size}")

    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise MetricDomainError("cosine is undefined for a zero-norm vector")

    diff = a - b
    rmse = math.sqrt(float(np.mean(diff * diff)))
    mae = float(np.mean(np.abs(diff)))
    cosine = float(np.clip(np.dot(a, b) / (norm_a * norm_b), -1.0, 1.0))
    return DistanceReport(rmse=rmse, mae=mae, cosine=cosine)


def affinity(clean_metric: float, aug_metric: float, orientation: str = "higher-better") -> float:
    """
    Metric shift of a clean-trained model when evaluated on augmented data.

    Signed so that a larger value always means a smaller harmful shift.
    """
    if orientation not in ORIENTATIONS:
        raise ParameterError(f"orientation must be one of {ORIENTATIONS}, got {orientation!r}")
    if not (math.isfinite(clean_metric) and math.isfinite(aug_metric)):
        raise ParameterError("affinity inputs must be finite")
    if orientation == "higher-better":
        return aug_metric - clean_metric
    return clean_metric - aug_metric


def diversity(losses: Iterable[float], k: int = DEFAULT_DIVERSITY_WINDOW) -> float:
    """Mean of the final k training losses (the whole series if shorter)."""
    series = [float(v) for v in losses]
    if not series:
        raise ParameterError("diversity needs a non-empty loss series")
    if k < 1:
        raise ParameterError(f"diversity window must be >= 1, got {k}")
    tail = series[-k:]
    return sum(tail) / len(tail)


def quality_report(
    clean_metric: float,
    aug_metric: float,
    losses: Iterable[float],
    orientation: str = "higher-better",
    k: int = DEFAULT_DIVERSITY_WINDOW,
) -> QualityReport:
    return QualityReport(
        affinity=affinity(clean_metric, aug_metric, orientation),
        diversity=diversity(losses, k),
    )
