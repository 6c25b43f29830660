import os
import json
import logging
from typing import Any, Dict, Optional

from .settings import HeuristicsConfig, load_settings

LOG = logging.getLogger(__name__)

# Path to presets file
PRESETS_FILE = os.path.join(os.path.dirname(__file__), "presets.json")

# Named heuristic presets; each entry only lists fields that differ from the defaults
DEFAULT_PRESETS = {
    "default": {},
    "trace": {
        "exists_batch": 1,
        "disjunct_batch": 1,
        "small_formula_threshold": 0,
        "stop_early": True,
        "global_plan": False,
    },
    "naive-lazy": {
        "mode": "naive-lazy",
        "exists_batch": 1,
        "disjunct_batch": 1,
        "small_formula_threshold": 0,
    },
    "eager": {
        "mode": "eager",
        "stop_early": False,
    },
    "late": {
        "mode": "late",
    },
    "approximate": {
        "approximate": True,
        "approx_violations_budget": 1,
    },
}


def load_presets(path: Optional[str] = None) -> Dict[str, Dict[str, Any]]:
    """
    Load presets from the presets file, or create it from the defaults.

    Returns:
        Preset name -> field overrides
    """
    path = path or PRESETS_FILE
    try:
        if os.path.exists(path):
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
            if not isinstance(data, dict):
                raise ValueError("presets file must hold an object")
            return data
        save_presets(DEFAULT_PRESETS, path)
        return dict(DEFAULT_PRESETS)
    except (OSError, ValueError) as e:
        LOG.warning("error loading presets from %s: %s", path, e)
        return dict(DEFAULT_PRESETS)


def save_presets(presets: Dict[str, Dict[str, Any]], path: Optional[str] = None) -> None:
    """
    Save presets to the presets file.

    Args:
        presets: Preset name -> field overrides
        path: Target file (defaults to config/presets.json)
    """
    path = path or PRESETS_FILE
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(presets, f, indent=4)


def apply_preset(name: str, base: Optional[HeuristicsConfig] = None,
                 presets: Optional[Dict[str, Dict[str, Any]]] = None) -> HeuristicsConfig:
    """Overlay preset ``name`` on ``base`` (the loaded settings by default)."""
    presets = presets if presets is not None else load_presets()
    if name not in presets:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(sorted(presets))}")
    base = base if base is not None else load_settings()
    return base.updated(**presets[name])
