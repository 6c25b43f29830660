import json
import os

import pytest
from pydantic import ValidationError

from config.presets import DEFAULT_PRESETS, apply_preset, load_presets, save_presets
from config.settings import HeuristicsConfig, load_settings


@pytest.fixture
def no_env_file(tmp_path):
    return str(tmp_path / "missing.env")


class TestHeuristicsConfig:
    @staticmethod
    def test_defaults():
        config = HeuristicsConfig()
        assert config.mode == "lazy"
        assert config.exists_batch == 10
        assert config.disjunct_batch == 3
        assert config.small_formula_threshold == 1e4
        assert config.polarity_true_prob == pytest.approx(0.2)
        assert config.stop_early
        assert config.max_ground_atoms is None

    @staticmethod
    def test_mode_alias():
        assert HeuristicsConfig(mode="naive").mode == "naive-lazy"
        assert HeuristicsConfig(mode="Naive_Lazy").mode == "naive-lazy"

    @staticmethod
    def test_unknown_field_rejected():
        with pytest.raises(ValidationError):
            HeuristicsConfig(exist_batch=2)

    @staticmethod
    def test_set_option():
        config = HeuristicsConfig().set_option("exists-batch", "5")
        assert config.exists_batch == 5
        assert config.set_option("stop-early", "off").stop_early is False
        assert config.set_option("max-ground-atoms", "none").max_ground_atoms is None
        with pytest.raises(KeyError):
            config.set_option("warp", "9")
        with pytest.raises(ValidationError):
            config.set_option("exists-batch", "0")

    @staticmethod
    def test_updated_is_a_copy():
        base = HeuristicsConfig()
        other = base.updated(seed=7)
        assert other.seed == 7 and base.seed == 0


class TestLoadSettings:
    @staticmethod
    def test_environment_overrides(monkeypatch, no_env_file):
        monkeypatch.setenv("LAZYMX_EXISTS_BATCH", "4")
        monkeypatch.setenv("LAZYMX_MODE", "eager")
        config = load_settings(no_env_file)
        assert config.exists_batch == 4
        assert config.mode == "eager"

    @staticmethod
    def test_invalid_override_ignored(monkeypatch, no_env_file):
        monkeypatch.setenv("LAZYMX_DISJUNCT_BATCH", "-3")
        assert load_settings(no_env_file).disjunct_batch == 3


class TestPresets:
    @staticmethod
    def test_created_when_missing(tmp_path):
        path = str(tmp_path / "presets.json")
        presets = load_presets(path)
        assert set(presets) == set(DEFAULT_PRESETS)
        assert os.path.exists(path)

    @staticmethod
    def test_save_and_reload(tmp_path):
        path = str(tmp_path / "presets.json")
        save_presets({"mine": {"seed": 3}}, path)
        with open(path, "r", encoding="utf-8") as f:
            assert json.load(f) == {"mine": {"seed": 3}}
        assert load_presets(path) == {"mine": {"seed": 3}}

    @staticmethod
    def test_apply():
        config = apply_preset("trace", HeuristicsConfig(), DEFAULT_PRESETS)
        assert config.exists_batch == 1
        assert config.small_formula_threshold == 0
        assert apply_preset("naive-lazy", HeuristicsConfig(), DEFAULT_PRESETS).mode == "naive-lazy"
        with pytest.raises(KeyError):
            apply_preset("nope", HeuristicsConfig(), DEFAULT_PRESETS)
