# Config package initialization
# Engine defaults, validated heuristics and named presets

from . import settings
from . import presets
from .settings import ENGINE_CONFIG, HeuristicsConfig, get_engine_config, load_settings
from .presets import apply_preset, load_presets, save_presets

__all__ = ['settings', 'presets', 'ENGINE_CONFIG', 'HeuristicsConfig', 'get_engine_config',
           'load_settings', 'apply_preset', 'load_presets', 'save_presets']
