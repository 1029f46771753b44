"""
Configuration loading.

config.json at the project root is the single source of truth for defaults.
The same values are mirrored in DEFAULT_CONFIG so an installed package still
works without the file. Environment variables prefixed with CUTDEPTH_ override
individual run settings (see ENV_OVERRIDES).
"""

import copy
import json
import logging
import os
from pathlib import Path
from typing import Any, Callable

from .errors import ParameterError

log = logging.getLogger(__name__)

PROJECT_ROOT = Path(__file__).parent.parent.parent
CONFIG_FILE = PROJECT_ROOT / "config.json"

ENV_PREFIX = "CUTDEPTH_"

DEFAULT_CONFIG: dict[str, Any] = {
    "augment": {
        "method": "cutdepth",
        "p": 0.75,
        "apply_probability": 1.0,
        "fill_mode": "image-mean",
        "depth_norm": "per-image-minmax",
        "cutmix_mix_depth": False,
        "baseline": False,
    },
    "baseline": {
        "flip_probability": 0.5,
        "color_probability": 0.5,
        "gamma_range": [0.9, 1.1],
        "brightness_range": [0.9, 1.1],
        "channel_range": [0.9, 1.1],
        "max_rotation": 2.5,
    },
    "metrics": {
        "min_depth": 0.001,
        "max_depth": 10.0,
        "eval_crop": None,
        "edge_threshold": 0.25,
        "diversity_window": 10,
    },
    "dataset": {"depth_scale": 1000.0},
    "scene": {
        "width": 64,
        "height": 48,
        "n_boxes": 4,
        "depth_range": [1.0, 10.0],
        "depth_levels": 8,
    },
    "heatmap": {"lo": 0.0, "hi": 10.0},
    "run": {"seed": 0, "workers": 1},
}

# env suffix -> (section, key, cast)
ENV_OVERRIDES: dict[str, tuple[str, str, Callable[[str], Any]]] = {
    "SEED": ("run", "seed", int),
    "WORKERS": ("run", "workers", int),
    "P": ("augment", "p", float),
    "METHOD": ("augment", "method", str),
    "APPLY_PROB": ("augment", "apply_probability", float),
    "MIN_DEPTH": ("metrics", "min_depth", float),
    "MAX_DEPTH": ("metrics", "max_depth", float),
    "OUT": ("run", "out", str),
    "REPORT": ("run", "report", str),
}


def _deep_merge(base: dict, override: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(path: Path | str | None = None, use_env: bool = True) -> dict[str, Any]:
    """
    Load configuration.

    Args:
        path: Explicit config file. None uses the project config.json when present.
        use_env: Apply CUTDEPTH_* environment overrides on top of the file.

    Returns:
        Nested settings dict (built-in defaults < file < environment).
    """
    config = copy.deepcopy(DEFAULT_CONFIG)

    config_file = Path(path) if path is not None else CONFIG_FILE
    if config_file.exists():
        with open(config_file, "r", encoding="utf-8") as f:
            try:
                config = _deep_merge(config, json.load(f))
            except json.JSONDecodeError as e:
                raise ParameterError(f"Invalid config file {config_file}: {e}") from e
        log.debug(f"Loaded config from {config_file}")
    elif path is not None:
        raise ParameterError(f"Config file not found: {config_file}")

    if use_env:
        apply_env_overrides(config)

    return config


def apply_env_overrides(config: dict[str, Any], environ: dict[str, str] | None = None) -> dict[str, Any]:
    """Apply CUTDEPTH_* variables to config in place and return it."""
    environ = os.environ if environ is None else environ

    for suffix, (section, key, cast) in ENV_OVERRIDES.items():
        name = ENV_PREFIX + suffix
        raw = environ.get(name)
        if raw is None or raw == "":
            continue
        try:
            value = cast(raw)
        except ValueError as e:
            raise ParameterError(f"Invalid value for {name}: {raw!r}") from e
        config.setdefault(section, {})[key] = value
        log.debug(f"{name} overrides {section}.{key} = {value!r}")

    return config
