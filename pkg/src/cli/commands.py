"""
Batch commands behind the `cutdepth` CLI.

Each cmd_* function does one run and returns a RunResult. Item-level
failures are logged and collected, never raised; anything that prevents
the run as a whole (unreadable manifest, misaligned ids, bad parameters)
raises a CutDepthError.
"""

import csv
import logging
import math
from concurrent import futures
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from core.engine.augment import apply, augment_region, sample_region, sample_regions
from core.engine.edges import DEFAULT_EDGE_THRESHOLD, edge_preservation_score
from core.engine.metrics import (
    DEFAULT_DIVERSITY_WINDOW,
    DEFAULT_MAX_DEPTH,
    DEFAULT_MIN_DEPTH,
    DepthErrorAccumulator,
    eval_depth,
    mean_reports,
    quality_report,
    valid_mask,
    vector_distance,
)
from core.engine.rng import RngStream, item_stream, mix_seed
from core.errors import CutDepthError, EmptyEvaluationError, ParameterError, ShapeMismatchError
from core.io.dataset import (
    Manifest,
    ManifestEntry,
    align_manifests,
    load_depth,
    load_pair,
    read_manifest,
    save_pair,
    save_rgb,
    subsample_manifest,
    write_manifest,
    write_provenance,
)
from core.io.reports import (
    FLOAT_FORMAT,
    depth_heatmap,
    read_eval_metrics,
    read_losses,
    read_report,
    read_vectors,
    write_report,
)
from core.io.scenes import SceneSpec, generate_scene
from core.models.augment_spec import AugmentSpec, Method, ProvenanceRecord, check_p
from core.models.images import Region
from core.models.reports import DistanceReport, EdgeScoreReport

log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.jsonl"
PROVENANCE_NAME = "provenance.jsonl"
AGGREGATE_NAME = "aggregate"
PARTNER_KEY = 1
METHOD_DRAWS_KEY = 2


@dataclass
class RunConfig:
    """Settings shared by the batch commands, after config/env/flag layering."""
    subcommand: str
    seed: int = 0
    spec: AugmentSpec = field(default_factory=AugmentSpec)
    manifest: Path | None = None
    out: Path | None = None
    workers: int = 1
    min_depth: float = DEFAULT_MIN_DEPTH
    max_depth: float = DEFAULT_MAX_DEPTH
    report: Path | None = None

    def __post_init__(self):
        if isinstance(self.workers, bool) or not isinstance(self.workers, int) or self.workers < 1:
            raise ParameterError(f"workers must be an integer >= 1, got {self.workers!r}")
        if not (0.0 <= self.min_depth < self.max_depth):
            raise ParameterError(f"depth caps must satisfy 0 <= min < max, got ({self.min_depth}, {self.max_depth})")

    @classmethod
    def from_config(cls, subcommand: str, config: dict[str, Any]) -> "RunConfig":
        run = config.get("run", {})
        metrics = config.get("metrics", {})
        out = run.get("out")
        report = run.get("report")
        return cls(
            subcommand=subcommand,
            seed=int(run.get("seed", 0)),
            spec=AugmentSpec.from_config(config),
            out=Path(out) if out else None,
            workers=int(run.get("workers", 1)),
            min_depth=float(metrics.get("min_depth", DEFAULT_MIN_DEPTH)),
            max_depth=float(metrics.get("max_depth", DEFAULT_MAX_DEPTH)),
            report=Path(report) if report else None,
        )


@dataclass
class RunResult:
    command: str
    processed: int = 0
    errors: list[dict[str, str]] = field(default_factory=list)
    outputs: list[Path] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def record_error(self, item: str, error: Exception) -> None:
        kind = getattr(error, "kind", type(error).__name__)
        self.errors.append({"id": item, "kind": kind, "message": str(error)})
        log.error(f"[ERROR] {item}: {error}")

    def summary(self) -> dict[str, Any]:
        return {"command": self.command, "processed": self.processed, "errors": self.errors}


class _ItemFailure(CutDepthError):
    """Item error passed back from a worker process as 'kind: message' text."""

    def __init__(self, message: str | None):
        kind, _, text = (message or "error").partition(": ")
        self.kind = kind
        super().__init__(text or kind)


def _describe(error: Exception) -> str:
    return f"{getattr(error, 'kind', type(error).__name__)}: {error}"


# --- synth ---

def scene_id(index: int) -> str:
    return f"scene_{index:05d}"


def cmd_synth(n: int, scene: SceneSpec, out_dir: Path | str, seed: int = 0, depth_scale: float = 1000.0) -> RunResult:
    """
    Generate n synthetic scenes plus their manifest.

    Scene i uses seed mix_seed(seed, i), so any prefix of a run matches a
    shorter run with the same seed.
    """
    if n < 0:
        raise ParameterError(f"scene count must be >= 0, got {n}")
    out_dir = Path(out_dir)
    result = RunResult("synth")

    entries = []
    for index in range(n):
        item = scene_id(index)
        pair = generate_scene(replace(scene, seed=mix_seed(seed, index)))
        rgb_path, depth_path = save_pair(
            pair, out_dir / "rgb" / f"{item}.png", out_dir / "depth" / f"{item}.png", depth_scale
        )
        entries.append(ManifestEntry(item, depth_path, rgb_path))
        result.processed += 1
        log.debug(f"[OK] {item}")

    result.outputs.append(write_manifest(Manifest(entries, depth_scale), out_dir / MANIFEST_NAME))
    log.info(f"Done: {n} scenes in {out_dir}")
    return result


# --- augment ---

def choose_partner(seed: int, index: int, count: int) -> int | None:
    """Index of the CutMix partner for item `index`: uniform over the other items."""
    if count < 2:
        return None
    j = math.floor(RngStream(mix_seed(seed, index, PARTNER_KEY)).uniform() * (count - 1))
    return j + 1 if j >= index else j


@dataclass(frozen=True)
class _AugmentTask:
    index: int
    entry: ManifestEntry
    partner: ManifestEntry | None
    depth_scale: float
    spec: AugmentSpec
    seed: int
    out_dir: Path


def _augment_item(task: _AugmentTask) -> tuple[ProvenanceRecord, ManifestEntry | None]:
    """Worker body: load, augment, save one item. Never raises for item errors."""
    rng = item_stream(task.seed, task.index)
    partner_id = task.partner.id if task.partner else None
    try:
        pair = load_pair(task.entry, task.depth_scale)
        partner = None
        if task.spec.method is Method.CUTMIX:
            if task.partner is None:
                raise ParameterError("cutmix needs at least two manifest entries")
            partner = load_pair(task.partner, task.depth_scale)
        augmented, record = apply(pair, task.spec, rng, partner)
        rgb_path, depth_path = save_pair(
            augmented,
            task.out_dir / "rgb" / f"{task.entry.id}.png",
            task.out_dir / "depth" / f"{task.entry.id}.png",
            task.depth_scale,
        )
    except (CutDepthError, OSError) as e:
        record = ProvenanceRecord(method=task.spec.method.value, status="error", error=_describe(e))
        output = None
    else:
        output = ManifestEntry(task.entry.id, depth_path, rgb_path)

    record.item_id = task.entry.id
    record.seed = rng.seed
    if task.spec.method is Method.CUTMIX:
        record.partner_id = partner_id
    return record, output


def _run_tasks(worker, tasks: list, workers: int) -> list:
    """Map worker over tasks, in order; processes only when workers > 1."""
    if workers == 1 or len(tasks) < 2:
        return [worker(task) for task in tasks]
    with futures.ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(worker, tasks))


def cmd_augment(
    manifest_path: Path | str,
    spec: AugmentSpec,
    seed: int,
    workers: int,
    out_dir: Path | str,
) -> RunResult:
    """
    Augment every manifest entry into out_dir.

    Writes rgb/, depth/, manifest.jsonl (successful items) and
    provenance.jsonl (one record per input entry, in manifest order).
    Output bytes do not depend on the worker count.
    """
    if workers < 1:
        raise ParameterError(f"workers must be >= 1, got {workers}")
    manifest = read_manifest(manifest_path)
    out_dir = Path(out_dir)
    count = len(manifest)

    tasks = []
    for index, entry in enumerate(manifest.entries):
        partner = None
        if spec.method is Method.CUTMIX:
            j = choose_partner(seed, index, count)
            partner = manifest.entries[j] if j is not None else None
        tasks.append(_AugmentTask(index, entry, partner, manifest.depth_scale, spec, seed, out_dir))

    log.info(f"Augmenting {count} items with {spec.method.value} (p={spec.p}, workers={workers})")
    outcomes = _run_tasks(_augment_item, tasks, workers)

    result = RunResult("augment")
    records, entries = [], []
    for record, output in outcomes:
        records.append(record)
        if output is None:
            result.record_error(record.item_id, _ItemFailure(record.error))
        else:
            entries.append(output)
            result.processed += 1

    result.outputs.append(write_manifest(Manifest(entries, manifest.depth_scale), out_dir / MANIFEST_NAME))
    result.outputs.append(write_provenance(records, out_dir / PROVENANCE_NAME))
    log.info(f"Done: {result.processed} augmented, {len(result.errors)} errors")
    return result


# --- eval ---

def cmd_eval(
    pred_manifest: Path | str,
    gt_manifest: Path | str,
    report_path: Path | str,
    min_depth: float = DEFAULT_MIN_DEPTH,
    max_depth: float = DEFAULT_MAX_DEPTH,
    per_image_mean: bool = False,
    crop: Region | None = None,
) -> RunResult:
    """
    Per-item depth metrics plus a final aggregate row.

    The aggregate pools the valid pixels of all items; with per_image_mean
    it is the mean of the per-item rows instead (the common benchmark
    convention).
    """
    gt = read_manifest(gt_manifest)
    pred = read_manifest(pred_manifest)
    pairs = align_manifests(gt, pred)

    result = RunResult("eval")
    rows = []
    pooled = DepthErrorAccumulator()
    for gt_entry, pred_entry in pairs:
        try:
            gt_depth = load_depth(gt_entry.depth_path, gt.depth_scale)
            pred_depth = load_depth(pred_entry.depth_path, pred.depth_scale)
            mask = valid_mask(gt_depth, min_depth, max_depth, crop)
            report = eval_depth(pred_depth, gt_depth, mask)
        except (CutDepthError, OSError) as e:
            result.record_error(gt_entry.id, e)
            continue
        pooled.add(pred_depth, gt_depth, mask)
        rows.append((gt_entry.id, report))
        result.processed += 1
        log.debug(f"[OK] {gt_entry.id}: abs_rel={report.abs_rel:.4f}")

    if not rows:
        raise EmptyEvaluationError("no item could be evaluated")
    aggregate = mean_reports([r for _, r in rows]) if per_image_mean else pooled.report()
    rows.append((AGGREGATE_NAME, aggregate))
    result.outputs.append(write_report(rows, report_path))
    log.info(f"Done: {result.processed} items, aggregate abs_rel={aggregate.abs_rel:.6f}")
    return result


# --- region stats ---

def cmd_region_stats(
    width: int,
    height: int,
    ps: Sequence[float],
    n_draws: int,
    seed: int,
    report_path: Path | str,
) -> RunResult:
    """
    Sample n_draws regions per p and write them with summary rows.

    Every p starts from a fresh RngStream(seed). Summary rows per p are
    mean, min, max and analytic (expected w and h: W*p/4, H*p/4).
    """
    if n_draws < 1:
        raise ParameterError(f"n_draws must be >= 1, got {n_draws}")
    report_path = Path(report_path)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    result = RunResult("region-stats")

    with open(report_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(("p", "draw", "l", "u", "w", "h"))
        for p in ps:
            p = check_p(p)
            regions = sample_regions(RngStream(seed), width, height, p, n_draws)
            p_cell = FLOAT_FORMAT.format(p)
            for draw, row in enumerate(regions):
                writer.writerow((p_cell, draw, *(int(v) for v in row)))
            for label, values in (("mean", regions.mean(axis=0)), ("min", regions.min(axis=0)),
                                  ("max", regions.max(axis=0))):
                writer.writerow((p_cell, label, *(FLOAT_FORMAT.format(float(v)) for v in values)))
            writer.writerow((p_cell, "analytic", "", "",
                             FLOAT_FORMAT.format(width * p / 4), FLOAT_FORMAT.format(height * p / 4)))
            result.processed += n_draws
            log.info(f"p={p}: mean w={regions[:, 2].mean():.3f} (analytic {width * p / 4:.3f})")

    result.outputs.append(report_path)
    return result


# --- distances ---

def cmd_distances(vectors_a: Path | str, vectors_b: Path | str, report_path: Path | str) -> RunResult:
    """Row-wise vector distances between two CSV files plus a mean row."""
    rows_a = read_vectors(vectors_a)
    rows_b = read_vectors(vectors_b)
    if len(rows_a) != len(rows_b):
        raise ShapeMismatchError(f"row counts differ: {len(rows_a)} vs {len(rows_b)}")
    if rows_a and rows_a[0].size != rows_b[0].size:
        raise ShapeMismatchError(f"vector widths differ: {rows_a[0].size} vs {rows_b[0].size}")

    result = RunResult("distances")
    reports = []
    for index, (a, b) in enumerate(zip(rows_a, rows_b)):
        name = f"row_{index}"
        try:
            reports.append((name, vector_distance(a, b)))
            result.processed += 1
        except CutDepthError as e:
            result.record_error(name, e)

    if reports:
        values = np.array([r.as_row() for _, r in reports])
        mean = DistanceReport(*(float(v) for v in values.mean(axis=0)))
        result.outputs.append(write_report(reports + [("mean", mean)], report_path))
    else:
        log.warning("No row produced a distance; report not written")
    return result


# --- edge report ---

def _edge_item(task: tuple) -> list[tuple[str, float, float]] | str:
    """Worker body: scores for one item, or 'kind: message' on failure."""
    index, entry, partner_entry, depth_scale, methods, ps, spec, seed, threshold = task
    try:
        pair = load_pair(entry, depth_scale)
        partner = load_pair(partner_entry, depth_scale) if partner_entry else None
        scores = []
        for p in ps:
            region = sample_region(RngStream(mix_seed(seed, index)), pair.width, pair.height, p)
            for method in methods:
                if method is Method.CUTMIX and partner is None:
                    raise ParameterError("cutmix needs at least two manifest entries")
                rng = RngStream(mix_seed(seed, index, METHOD_DRAWS_KEY))
                augmented = augment_region(method, pair, region, spec, rng, partner)
                scores.append((method.value, p, edge_preservation_score(pair.rgb, augmented.rgb, region, threshold)))
        return scores
    except (CutDepthError, OSError) as e:
        return _describe(e)


def cmd_edge_report(
    manifest_path: Path | str,
    methods: Sequence[str],
    ps: Sequence[float],
    seed: int,
    report_path: Path | str,
    spec: AugmentSpec | None = None,
    threshold: float = DEFAULT_EDGE_THRESHOLD,
    workers: int = 1,
) -> RunResult:
    """
    Edge-preservation score per item, method and p, then a mean per method and p.

    For a given item and p every method sees the same region, drawn from
    mix_seed(seed, index). CutMix partners are chosen as in cmd_augment.
    """
    spec = spec or AugmentSpec()
    methods = [Method.parse(m) for m in methods]
    ps = [check_p(p) for p in ps]
    if not methods or not ps:
        raise ParameterError("edge-report needs at least one method and one p")
    if not threshold > 0:
        raise ParameterError(f"edge threshold must be > 0, got {threshold}")

    manifest = read_manifest(manifest_path)
    count = len(manifest)
    tasks = []
    for index, entry in enumerate(manifest.entries):
        j = choose_partner(seed, index, count) if Method.CUTMIX in methods else None
        partner = manifest.entries[j] if j is not None else None
        tasks.append((index, entry, partner, manifest.depth_scale, methods, ps, spec, seed, threshold))

    result = RunResult("edge-report")
    rows = []
    totals: dict[tuple[str, float], list[float]] = {}
    for entry, outcome in zip(manifest.entries, _run_tasks(_edge_item, tasks, workers)):
        if isinstance(outcome, str):
            result.record_error(entry.id, _ItemFailure(outcome))
            continue
        for method, p, score in outcome:
            rows.append((entry.id, EdgeScoreReport(method, p, score)))
            totals.setdefault((method, p), []).append(score)
        result.processed += 1

    for (method, p), scores in totals.items():
        rows.append(("mean", EdgeScoreReport(method, p, sum(scores) / len(scores), len(scores))))
        log.info(f"{method} p={p}: mean edge score {sum(scores) / len(scores):.4f} over {len(scores)} items")

    if rows:
        result.outputs.append(write_report(rows, report_path))
    return result


def mean_edge_scores(report_path: Path | str) -> dict[tuple[str, float], float]:
    """(method, p) -> mean score from an edge report."""
    return {(r.method, r.p): r.score for name, r in read_report(report_path) if name == "mean"}


# --- quality ---

def cmd_quality(
    loss_csv: Path | str,
    eval_csv: Path | str,
    report_path: Path | str,
    k: int = DEFAULT_DIVERSITY_WINDOW,
) -> RunResult:
    """Affinity and diversity per method, in eval-file order."""
    losses = read_losses(loss_csv)
    metrics = read_eval_metrics(eval_csv)

    result = RunResult("quality")
    rows = []
    for method, (clean, augmented, orientation) in metrics.items():
        try:
            if method not in losses:
                raise ParameterError(f"no training losses for method {method!r}")
            rows.append((method, quality_report(clean, augmented, losses[method], orientation, k)))
            result.processed += 1
        except CutDepthError as e:
            result.record_error(method, e)

    if rows:
        result.outputs.append(write_report(rows, report_path))
    return result


# --- heatmap ---

def cmd_heatmap(manifest_path: Path | str, out_dir: Path | str, lo: float = 0.0, hi: float = 10.0) -> RunResult:
    """Write a near-blue / far-red PNG per manifest entry to out_dir/{id}.png."""
    if not lo < hi:
        raise ParameterError(f"heatmap range must satisfy lo < hi, got ({lo}, {hi})")
    manifest = read_manifest(manifest_path)
    out_dir = Path(out_dir)
    result = RunResult("heatmap")
    for entry in manifest.entries:
        try:
            depth = load_depth(entry.depth_path, manifest.depth_scale)
            result.outputs.append(save_rgb(depth_heatmap(depth, lo, hi), out_dir / f"{entry.id}.png"))
            result.processed += 1
        except (CutDepthError, OSError) as e:
            result.record_error(entry.id, e)
    return result


# --- subset ---

def cmd_subset(manifest_path: Path | str, fraction: float, seed: int, out_path: Path | str) -> RunResult:
    """Write a manifest holding round(fraction * n) seeded-random entries."""
    manifest = read_manifest(manifest_path)
    subset = subsample_manifest(manifest, fraction, seed)
    result = RunResult("subset", processed=len(subset))
    result.outputs.append(write_manifest(subset, out_path))
    log.info(f"Kept {len(subset)} of {len(manifest)} entries")
    return result
