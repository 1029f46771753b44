"""
Exception hierarchy for the toolkit.

Every error derives from CutDepthError and from the builtin it refines,
so callers can catch either the domain error or the plain ValueError /
FileNotFoundError.
"""


class CutDepthError(Exception):
    """Base class for all toolkit errors."""

    kind = "error"


class ParameterError(CutDepthError, ValueError):
    """Invalid hyperparameter, probability, range, threshold or seed."""

    kind = "parameter"


class RegionBoundsError(CutDepthError, ValueError):
    """Region does not fit inside its target image."""

    kind = "bounds"


class ShapeMismatchError(CutDepthError, ValueError):
    """Arrays that must share a shape do not."""

    kind = "shape"


class DegenerateInputError(CutDepthError, ValueError):
    """Input carries no usable information (e.g. no valid depth pixel)."""

    kind = "degenerate-input"


class EmptyEvaluationError(CutDepthError, ValueError):
    """Evaluation mask selects no pixel."""

    kind = "empty-evaluation"


class MetricDomainError(CutDepthError, ValueError):
    """Metric undefined for the given values (non-positive depth, zero norm)."""

    kind = "domain"


class DatasetError(CutDepthError):
    """Base for dataset ingestion/emission problems."""

    kind = "dataset"


class MissingFileError(DatasetError, FileNotFoundError):
    kind = "missing-file"


class ImageFormatError(DatasetError, ValueError):
    kind = "image-format"


class PairDimensionError(DatasetError, ShapeMismatchError):
    kind = "pair-dimension"


class ManifestError(DatasetError, ValueError):
    kind = "manifest"


class ReportParseError(CutDepthError, ValueError):
    """Malformed CSV input; message carries path and line number."""

    kind = "parse"

    def __init__(self, path, line: int, message: str):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {message}")


class IdMismatchError(CutDepthError, ValueError):
    """Two manifests that must be aligned disagree on their ids."""

    kind = "id-mismatch"

    def __init__(self, missing: list[str], extra: list[str]):
        self.missing = list(missing)
        self.extra = list(extra)
        parts = []
        if self.missing:
            parts.append(f"missing from predictions: {', '.join(self.missing)}")
        if self.extra:
            parts.append(f"not in ground truth: {', '.join(self.extra)}")
        super().__init__("; ".join(parts) or "id mismatch")
