"""
Evaluation report types.

Each report knows its CSV columns (after the leading `name` column) so
core.io.reports can write any list of reports of one kind.
"""

import math
from dataclasses import dataclass, fields
from typing import Any, ClassVar

from ..errors import ParameterError


@dataclass(frozen=True)
class DepthEvalReport:
    """Depth error metrics over the valid pixels of one or more images."""
    abs_rel: float
    log10: float
    rmse: float
    rmse_log: float
    d1: float
    d2: float
    d3: float
    n_valid: int

    KIND: ClassVar[str] = "depth"
    COLUMNS: ClassVar[tuple[str, ...]] = ("abs_rel", "log10", "rmse", "rmse_log", "d1", "d2", "d3", "n_valid")

    def __post_init__(self):
        if self.n_valid > 0:
            for f in fields(self):
                if not math.isfinite(getattr(self, f.name)):
                    raise ParameterError(f"DepthEvalReport.{f.name} is not finite")
        if not (0.0 <= self.d1 <= self.d2 <= self.d3 <= 1.0):
            raise ParameterError(f"threshold accuracies must satisfy 0 <= d1 <= d2 <= d3 <= 1, got "
                                 f"{self.d1}, {self.d2}, {self.d3}")

    def as_row(self) -> tuple[Any, ...]:
        return tuple(getattr(self, c) for c in self.COLUMNS)


@dataclass(frozen=True)
class DistanceReport:
    """Distances between two feature vectors."""
    rmse: float
    mae: float
    cosine: float

    KIND: ClassVar[str] = "distance"
    COLUMNS: ClassVar[tuple[str, ...]] = ("rmse", "mae", "cosine")

    def __post_init__(self):
        if self.rmse < 0 or self.mae < 0:
            raise ParameterError("distances must be non-negative")
        if not -1.0 <= self.cosine <= 1.0:
            raise ParameterError(f"cosine must be in [-1, 1], got {self.cosine}")

    def as_row(self) -> tuple[Any, ...]:
        return self.rmse, self.mae, self.cosine


@dataclass(frozen=True)
class QualityReport:
    """Affinity and diversity of one augmentation method."""
    affinity: float
    diversity: float

    KIND: ClassVar[str] = "quality"
    COLUMNS: ClassVar[tuple[str, ...]] = ("affinity", "diversity")

    def as_row(self) -> tuple[Any, ...]:
        return self.affinity, self.diversity


@dataclass(frozen=True)
class EdgeScoreReport:
    """Edge-preservation score of one method, per item or averaged."""
    method: str
    p: float
    score: float
    n_items: int = 1

    KIND: ClassVar[str] = "edge"
    COLUMNS: ClassVar[tuple[str, ...]] = ("method", "p", "score", "n_items")

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ParameterError(f"edge score must be in [0, 1], got {self.score}")

    def as_row(self) -> tuple[Any, ...]:
        return self.method, self.p, self.score, self.n_items


REPORT_TYPES = (DepthEvalReport, DistanceReport, QualityReport, EdgeScoreReport)
