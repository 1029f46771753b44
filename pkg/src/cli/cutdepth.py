#!/usr/bin/env python3
"""
cutdepth: batch front-end for the augmentation toolkit.

Run: cutdepth <subcommand> [options]   (or python -m cli.cutdepth)

Settings come from config.json, then CUTDEPTH_* environment variables
(a .env file is honoured), then command-line flags.

Exit codes: 0 no errors, 1 at least one item failed, 2 fatal error.
When anything failed, a JSON summary is the last line on stderr.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from dotenv import load_dotenv

from cli.commands import (
    RunConfig,
    RunResult,
    cmd_augment,
    cmd_distances,
    cmd_edge_report,
    cmd_eval,
    cmd_heatmap,
    cmd_quality,
    cmd_region_stats,
    cmd_subset,
    cmd_synth,
)
from core.config import PROJECT_ROOT, load_config
from core.errors import CutDepthError, ParameterError
from core.io.scenes import SceneSpec
from core.models.augment_spec import Method
from core.models.images import Region

log = logging.getLogger(__name__)

FATAL_EXIT = 2

EDGE_METHODS = ("cutdepth", "cutmix", "cutout")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="Config file merged over the defaults")
    common.add_argument("--seed", type=int, help="Master seed")
    common.add_argument("--verbose", "-v", action="store_true", help="Verbose output")

    parser = argparse.ArgumentParser(prog="cutdepth", description="CutDepth RGB-D augmentation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    methods = [m.value for m in Method]

    p = sub.add_parser("synth", parents=[common], help="Generate synthetic RGB-D scenes")
    p.add_argument("--n", type=int, required=True, help="Number of scenes")
    p.add_argument("--out", type=Path, help="Output directory")
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--boxes", type=int, help="Boxes per scene")

    p = sub.add_parser("augment", parents=[common], help="Augment a manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("--method", choices=methods)
    p.add_argument("--p", type=float, help="Region extent bound in (0, 1]")
    p.add_argument("--apply-prob", type=float, help="Probability of applying the method")
    p.add_argument("--fill", help="CutOut fill: image-mean or constant:<v>")
    p.add_argument("--depth-norm", help="per-image-minmax or fixed-range:<lo>,<hi>")
    p.add_argument("--mix-depth", action="store_true", help="CutMix also copies the partner's depth")
    p.add_argument("--baseline", action="store_true", help="Run flip/rotation/color baseline first")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", type=Path, help="Output directory")

    p = sub.add_parser("eval", parents=[common], help="Evaluate predicted depth against ground truth")
    p.add_argument("pred", type=Path, help="Prediction manifest")
    p.add_argument("gt", type=Path, help="Ground-truth manifest")
    p.add_argument("--min-depth", type=float)
    p.add_argument("--max-depth", type=float)
    p.add_argument("--crop", type=int, nargs=4, metavar=("L", "U", "W", "H"), help="Evaluation rectangle")
    p.add_argument("--per-image-mean", action="store_true", help="Aggregate as mean of per-image rows")
    p.add_argument("--report", type=Path)

    p = sub.add_parser("region-stats", parents=[common], help="Sample paste regions and summarize them")
    p.add_argument("--width", type=int, default=544)
    p.add_argument("--height", type=int, default=416)
    p.add_argument("--p", type=float, nargs="+", help="One or more p values")
    p.add_argument("--draws", type=int, default=10000)
    p.add_argument("--report", type=Path)

    p = sub.add_parser("distances", parents=[common], help="Row-wise distances between two vector CSVs")
    p.add_argument("a", type=Path)
    p.add_argument("b", type=Path)
    p.add_argument("--report", type=Path)

    p = sub.add_parser("edge-report", parents=[common], help="Edge-preservation score per method")
    p.add_argument("manifest", type=Path)
    p.add_argument("--methods", nargs="+", choices=methods, default=list(EDGE_METHODS))
    p.add_argument("--p", type=float, nargs="+", help="One or more p values")
    p.add_argument("--fill", help="CutOut fill: image-mean or constant:<v>")
    p.add_argument("--threshold", type=float, help="Edge threshold on the gradient magnitude")
    p.add_argument("--workers", type=int)
    p.add_argument("--report", type=Path)

    p = sub.add_parser("quality", parents=[common], help="Affinity and diversity per method")
    p.add_argument("losses", type=Path, help="CSV: method,step,loss")
    p.add_argument("metrics", type=Path, help="CSV: method,clean,augmented,orientation")
    p.add_argument("--window", type=int, help="Final losses averaged for diversity")
    p.add_argument("--report", type=Path)

    p = sub.add_parser("heatmap", parents=[common], help="Render depth heatmaps for a manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--out", type=Path, help="Output directory")

    p = sub.add_parser("subset", parents=[common], help="Seeded random subset of a manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("--fraction", type=float, required=True)
    p.add_argument("--out", type=Path, help="Output manifest path")

    return parser


def _layered(config: dict, args: argparse.Namespace) -> dict:
    """Apply command-line flags over the loaded config."""
    flags = {
        "seed": ("run", "seed"),
        "workers": ("run", "workers"),
        "out": ("run", "out"),
        "report": ("run", "report"),
        "method": ("augment", "method"),
        "apply_prob": ("augment", "apply_probability"),
        "fill": ("augment", "fill_mode"),
        "depth_norm": ("augment", "depth_norm"),
        "min_depth": ("metrics", "min_depth"),
        "max_depth": ("metrics", "max_depth"),
        "threshold": ("metrics", "edge_threshold"),
        "window": ("metrics", "diversity_window"),
        "lo": ("heatmap", "lo"),
        "hi": ("heatmap", "hi"),
    }
    for flag, (section, key) in flags.items():
        value = getattr(args, flag, None)
        if value is not None:
            config.setdefault(section, {})[key] = str(value) if isinstance(value, Path) else value
    p = getattr(args, "p", None)
    if isinstance(p, float):
        config["augment"]["p"] = p
    if getattr(args, "mix_depth", False):
        config["augment"]["cutmix_mix_depth"] = True
    if getattr(args, "baseline", False):
        config["augment"]["baseline"] = True
    return config


def _required(path: Path | None, flag: str) -> Path:
    if path is None:
        raise ParameterError(f"{flag} is required (flag or CUTDEPTH_ environment variable)")
    return path


def run(args: argparse.Namespace) -> RunResult:
    config = _layered(load_config(args.config), args)
    run_config = RunConfig.from_config(args.command, config)
    metrics = config["metrics"]
    ps = args.p if isinstance(getattr(args, "p", None), list) else [run_config.spec.p]

    if args.command == "synth":
        scene = config["scene"]
        for flag, key in (("width", "width"), ("height", "height"), ("boxes", "n_boxes")):
            if getattr(args, flag) is not None:
                scene[key] = getattr(args, flag)
        return cmd_synth(
            args.n, SceneSpec.from_config(scene), _required(run_config.out, "--out"),
            run_config.seed, float(config["dataset"]["depth_scale"]),
        )
    if args.command == "augment":
        return cmd_augment(
            args.manifest, run_config.spec, run_config.seed, run_config.workers, _required(run_config.out, "--out")
        )
    if args.command == "eval":
        return cmd_eval(
            args.pred, args.gt, _required(run_config.report, "--report"),
            run_config.min_depth, run_config.max_depth,
            per_image_mean=args.per_image_mean,
            crop=Region(*args.crop) if args.crop else _crop_from_config(metrics.get("eval_crop")),
        )
    if args.command == "region-stats":
        return cmd_region_stats(
            args.width, args.height, ps, args.draws, run_config.seed, _required(run_config.report, "--report")
        )
    if args.command == "distances":
        return cmd_distances(args.a, args.b, _required(run_config.report, "--report"))
    if args.command == "edge-report":
        return cmd_edge_report(
            args.manifest, args.methods, ps, run_config.seed, _required(run_config.report, "--report"),
            spec=run_config.spec, threshold=float(metrics["edge_threshold"]), workers=run_config.workers,
        )
    if args.command == "quality":
        return cmd_quality(
            args.losses, args.metrics, _required(run_config.report, "--report"), int(metrics["diversity_window"])
        )
    if args.command == "heatmap":
        heatmap = config["heatmap"]
        return cmd_heatmap(
            args.manifest, _required(run_config.out, "--out"), float(heatmap["lo"]), float(heatmap["hi"])
        )
    if args.command == "subset":
        return cmd_subset(args.manifest, args.fraction, run_config.seed, _required(run_config.out, "--out"))
    raise ParameterError(f"Unknown command {args.command!r}")


def _crop_from_config(value) -> Region | None:
    if not value:
        return None
    if isinstance(value, dict):
        return Region.from_dict(value)
    return Region(*value)


def _print_summary(summary: dict) -> None:
    print(json.dumps(summary), file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    load_dotenv(str(PROJECT_ROOT / ".env"))
    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s [%(levelname)s] %(message)s",
        datefmt="%H:%M:%S"
    )

    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        result = run(args)
    except (CutDepthError, OSError) as e:
        log.error(f"{args.command} failed: {e}")
        kind = getattr(e, "kind", type(e).__name__)
        _print_summary({"command": args.command, "fatal": {"kind": kind, "message": str(e)}})
        return FATAL_EXIT

    if not result.ok:
        _print_summary(result.summary())
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
