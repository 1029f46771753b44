"""
CSV reports, CSV inputs for the distance and quality commands, and the
depth heatmap.

Report files start with `name` followed by the report kind's columns.
Floats are written with 6 decimals and lines end with a bare newline, so
identical reports give identical bytes.
"""

import csv
import logging
from dataclasses import fields
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from ..engine.metrics import ORIENTATIONS
from ..errors import MissingFileError, ParameterError, ReportParseError
from ..models.images import DepthMap, RgbImage
from ..models.reports import REPORT_TYPES

log = logging.getLogger(__name__)

FLOAT_FORMAT = "{:.6f}"

# blue -> cyan -> green -> yellow -> red, near to far
HEATMAP_STOPS = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
HEATMAP_COLORS = np.array([
    [0.0, 0.0, 1.0],
    [0.0, 1.0, 1.0],
    [0.0, 1.0, 0.0],
    [1.0, 1.0, 0.0],
    [1.0, 0.0, 0.0],
])


def format_cell(value: Any) -> str:
    if isinstance(value, float):
        return FLOAT_FORMAT.format(value)
    return str(value)


def _open_rows(path: Path):
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"file not found: {path}")
    return open(path, "r", encoding="utf-8", newline="")


def write_report(reports: Sequence[tuple[str, Any]], path: Path | str) -> Path:
    """
    Write named reports of one kind as CSV.

    Args:
        reports: (name, report) pairs; every report must be the same type.
        path: Output file.

    Returns:
        The written path.
    """
    if not reports:
        raise ParameterError("write_report needs at least one report")
    report_type = type(reports[0][1])
    if any(type(r) is not report_type for _, r in reports):
        raise ParameterError("all reports in one file must be of the same kind")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(("name",) + report_type.COLUMNS)
        for name, report in reports:
            writer.writerow([name] + [format_cell(v) for v in report.as_row()])
    log.debug(f"Wrote {len(reports)} {report_type.KIND} rows to {path}")
    return path


def read_report(path: Path | str) -> list[tuple[str, Any]]:
    """Parse a file written by write_report back into (name, report) pairs."""
    with _open_rows(path) as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            raise ReportParseError(path, 1, "empty report")
        report_type = next((t for t in REPORT_TYPES if ("name",) + t.COLUMNS == tuple(header)), None)
        if report_type is None:
            raise ReportParseError(path, 1, f"unknown report header {','.join(header)}")

        casts = {f.name: f.type for f in fields(report_type)}
        reports = []
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise ReportParseError(path, reader.line_num, f"expected {len(header)} columns, got {len(row)}")
            try:
                values = {c: casts[c](v) for c, v in zip(report_type.COLUMNS, row[1:])}
                reports.append((row[0], report_type(**values)))
            except ValueError as e:
                raise ReportParseError(path, reader.line_num, str(e)) from e
    return reports


def read_vectors(path: Path | str) -> list[np.ndarray]:
    """
    Feature vectors, one numeric row per line.

    Blank lines and lines starting with '#' are skipped. Every row must have
    the same width.
    """
    rows = []
    width = None
    with _open_rows(path) as f:
        for n, line in enumerate(f, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                row = np.array([float(v) for v in text.split(",")])
            except ValueError as e:
                raise ReportParseError(path, n, f"non-numeric value ({e})") from e
            if width is None:
                width = row.size
            elif row.size != width:
                raise ReportParseError(path, n, f"expected {width} values, got {row.size}")
            rows.append(row)
    return rows


def _check_header(path, header, expected: tuple[str, ...]) -> None:
    if header is None or tuple(h.strip() for h in header) != expected:
        raise ReportParseError(path, 1, f"expected header {','.join(expected)}")


def read_losses(path: Path | str) -> dict[str, list[float]]:
    """Training-loss series per method from `method,step,loss` rows, ordered by step."""
    series: dict[str, list[tuple[int, float]]] = {}
    with _open_rows(path) as f:
        reader = csv.reader(f)
        _check_header(path, next(reader, None), ("method", "step", "loss"))
        for row in reader:
            if not row:
                continue
            if len(row) != 3:
                raise ReportParseError(path, reader.line_num, f"expected 3 columns, got {len(row)}")
            try:
                series.setdefault(row[0].strip(), []).append((int(row[1]), float(row[2])))
            except ValueError as e:
                raise ReportParseError(path, reader.line_num, str(e)) from e
    return {method: [loss for _, loss in sorted(points)] for method, points in series.items()}


def read_eval_metrics(path: Path | str) -> dict[str, tuple[float, float, str]]:
    """(clean, augmented, orientation) per method from `method,clean,augmented,orientation` rows."""
    metrics = {}
    with _open_rows(path) as f:
        reader = csv.reader(f)
        _check_header(path, next(reader, None), ("method", "clean", "augmented", "orientation"))
        for row in reader:
            if not row:
                continue
            if len(row) != 4:
                raise ReportParseError(path, reader.line_num, f"expected 4 columns, got {len(row)}")
            method, clean, augmented, orientation = (v.strip() for v in row)
            if orientation not in ORIENTATIONS:
                raise ReportParseError(path, reader.line_num, f"unknown orientation {orientation!r}")
            try:
                metrics[method] = (float(clean), float(augmented), orientation)
            except ValueError as e:
                raise ReportParseError(path, reader.line_num, str(e)) from e
    return metrics


def depth_heatmap(depth: DepthMap, lo: float = 0.0, hi: float = 10.0) -> RgbImage:
    """
    Color valid depth near-blue to far-red over [lo, hi], clamped.

    Anchors: blue at lo, cyan, green at the midpoint, yellow, red at hi;
    linear in between. Invalid (0) pixels are black.
    """
    if not lo < hi:
        raise ParameterError(f"heatmap range must satisfy lo < hi, got ({lo}, {hi})")
    values = depth.values
    position = np.clip((values - lo) / (hi - lo), 0.0, 1.0)
    rgb = np.stack(
        [np.interp(position, HEATMAP_STOPS, HEATMAP_COLORS[:, k]) for k in range(3)],
        axis=-1,
    )
    rgb[~depth.valid] = 0.0
    return RgbImage(rgb)
