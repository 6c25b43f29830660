"""
Engine configuration.

Defaults for every heuristic, planner parameter and limit, the validated
HeuristicsConfig handed to the search, and the .env / LAZYMX_* override layer.
"""

import logging
import os
from typing import Any, Dict, Literal, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator

LOG = logging.getLogger(__name__)

# Engine defaults
ENGINE_CONFIG = {
    # grounding
    "grounding": {
        "exists_batch": 10,  # ∃ instances per directed step
        "disjunct_batch": 3,  # disjuncts per directed step
        "small_formula_threshold": 1e4,  # fully ground below this estimated size
    },

    # search
    "search": {
        "mode": "lazy",
        "polarity_true_prob": 0.2,
        "restart_extension_threshold": 100,  # doubled after each restart
        "stop_early": True,
        "seed": 0,
        "tseitin_penalty": 0.1,
        "activity_decay": 0.95,
    },

    # justifications
    "justify": {
        "depth_limit": 2,
        "large_domain": 100,
        "prefer_body_split": True,
        "refuse_recursive_heads": False,
        "justification_formulas": False,
        "approximate": False,
        "approx_violations_budget": 1,
    },

    # global plan
    "plan": {
        "global_plan": False,
        "p_val": 0.1,
        "p_tr": 0.3,
    },

    # limits
    "limits": {
        "max_ground_atoms": None,
        "time_limit": None,
    },

    "debug_checks": False,
    "log_level": "WARNING",
}


def get_engine_config() -> Dict[str, Any]:
    """Return the engine defaults."""
    return ENGINE_CONFIG


Mode = Literal["lazy", "eager", "late", "naive-lazy"]


def _defaults() -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    for section in ("grounding", "search", "justify", "plan", "limits"):
        flat.update(ENGINE_CONFIG[section])
    flat["debug_checks"] = ENGINE_CONFIG["debug_checks"]
    return flat


class HeuristicsConfig(BaseModel):
    """Every knob of one solver run."""

    mode: Mode = "lazy"
    exists_batch: int = Field(10, ge=1)
    disjunct_batch: int = Field(3, ge=1)
    polarity_true_prob: float = Field(0.2, ge=0.0, le=1.0)
    restart_extension_threshold: int = Field(100, ge=1)
    small_formula_threshold: float = Field(1e4, ge=0.0)
    stop_early: bool = True
    seed: int = 0
    global_plan: bool = False
    depth_limit: int = Field(2, ge=0)
    large_domain: int = Field(100, ge=1)
    prefer_body_split: bool = True
    refuse_recursive_heads: bool = False
    justification_formulas: bool = False
    approximate: bool = False
    approx_violations_budget: int = Field(1, ge=1)
    max_ground_atoms: Optional[int] = Field(None, gt=0)
    time_limit: Optional[float] = Field(None, gt=0)
    debug_checks: bool = False
    p_val: float = Field(0.1, ge=0.0, le=1.0)
    p_tr: float = Field(0.3, ge=0.0, le=1.0)
    tseitin_penalty: float = Field(0.1, gt=0.0, le=1.0)
    activity_decay: float = Field(0.95, gt=0.0, le=1.0)

    model_config = {"validate_assignment": True, "extra": "forbid"}

    @field_validator("mode", mode="before")
    @classmethod
    def _mode_alias(cls, value: Any) -> Any:
        if isinstance(value, str):
            value = value.strip().lower().replace("_", "-")
            if value == "naive":
                return "naive-lazy"
        return value

    def updated(self, **changes: Any) -> "HeuristicsConfig":
        """Validated copy with ``changes`` applied."""
        data = self.model_dump()
        data.update(changes)
        return HeuristicsConfig(**data)

    def set_option(self, key: str, value: str) -> "HeuristicsConfig":
        """Apply a textual ``key value`` pair (script ``set`` entries, env overrides)."""
        name = key.strip().lower().replace("-", "_")
        if name not in HeuristicsConfig.model_fields:
            raise KeyError(key)
        return self.updated(**{name: _parse_value(value)})


def _parse_value(text: str) -> Any:
    lowered = text.strip().lower()
    if lowered in ("on", "true", "yes"):
        return True
    if lowered in ("off", "false", "no"):
        return False
    if lowered in ("none", ""):
        return None
    for cast in (int, float):
        try:
            return cast(lowered)
        except ValueError:
            pass
    return text.strip()


def load_settings(env_file: Optional[str] = None) -> HeuristicsConfig:
    """
    Defaults overlaid with LAZYMX_* variables (a .env file is read first).

    Invalid overrides are logged and skipped.
    """
    load_dotenv(env_file)
    config = HeuristicsConfig(**_defaults())
    for name in HeuristicsConfig.model_fields:
        raw = os.environ.get("LAZYMX_" + name.upper())
        if raw is None:
            continue
        try:
            config = config.set_option(name, raw)
        except (KeyError, ValidationError) as e:
            LOG.warning("ignoring LAZYMX_%s=%r: %s", name.upper(), raw, e)
    return config


def default_log_level() -> str:
    load_dotenv()
    return os.environ.get("LAZYMX_LOG_LEVEL", ENGINE_CONFIG["log_level"]).upper()
