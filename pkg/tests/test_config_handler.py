"""
Unit tests for the experiment configuration (YAML schema, overrides,
loading and saving).
"""

import sys
from pathlib import Path

import pytest
import yaml

# Add the parent directory to sys.path to import the shadowlab modules
sys.path.insert(0, str(Path(__file__).parent.parent))

from shadowlab.error_handler import ConfigError
from shadowlab.utils.config_handler import ConfigManager, ExperimentConfig, parse_experiment_config

CONFIG_DIR = Path(__file__).parent.parent / "config"


class TestParseExperimentConfig:
    """Test suite for the schema check of parsed YAML data."""

    def test_empty_config_uses_defaults(self):
        """An empty document gives the Lorenz defaults."""
        config = parse_experiment_config(None)

        assert config.system.name == "lorenz63"
        assert config.trajectory.horizon == 60.0
        assert config.shadowing.averaging == "interior"
        assert config.output.formats == ("json", "csv")

    def test_full_config(self):
        """All sections are converted into their typed form."""
        config = parse_experiment_config({
            "system": {"name": "catmap", "parameter": 0.05},
            "trajectory": {"u0": [0.1, 0.2], "seed": 3, "horizon": 500},
            "clv": {"qr_stride": 1, "transient_forward": 0.1},
            "shadowing": {"buffer": 30, "averaging": "full"},
            "sensitivity": {"methods": ["adjoint"], "fd_step": 0.01},
            "output": {"directory": "out", "formats": "json"},
        })

        assert config.system.parameter == 0.05
        assert config.trajectory.u0 == (0.1, 0.2)
        assert config.trajectory.seed == 3
        assert config.clv.qr_stride == 1
        assert config.shadowing.buffer == 30
        assert config.shadowing.averaging == "full"
        assert config.output.formats == ("json",)

    @pytest.mark.parametrize("raw", [
        {"plots": {}},
        {"system": {"name": "catmap", "colour": "red"}},
        {"system": {"name": "henon"}},
        {"trajectory": {"horizon": -1.0}},
        {"trajectory": {"horizon": 0}},
        {"trajectory": {"step": 0.0}},
        {"trajectory": {"seed": -2}},
        {"trajectory": {"seed": 1.5}},
        {"trajectory": {"horizon": "long"}},
        {"trajectory": {"u0": [1.0, 2.0]}},
        {"clv": {"transient_forward": 0.5}},
        {"clv": {"qr_stride": 0}},
        {"shadowing": {"averaging": "window"}},
        {"shadowing": {"buffer": -3}},
        {"sensitivity": {"methods": ["magic"]}},
        {"system": {"name": "catmap"}, "sensitivity": {"methods": ["tangent-flow"]}},
        {"sensitivity": {"directions": ["gamma"]}},
        {"sensitivity": {"fd_ensemble": 0}},
        {"verify": {"samples": 0}},
        {"output": {"formats": ["xml"]}},
        {"output": {"formats": []}},
        {"output": {"frames": "yes"}},
        {"system": "lorenz63"},
    ])
    def test_invalid_config_rejected(self, raw):
        """Every schema violation raises ConfigError."""
        with pytest.raises(ConfigError):
            parse_experiment_config(raw)

    def test_empty_method_list_allowed(self):
        """An empty method list is valid; the CLI reports nothing to do."""
        config = parse_experiment_config({"sensitivity": {"methods": []}})

        assert config.resolved_methods("flow") == ()

    def test_non_mapping_rejected(self):
        with pytest.raises(ConfigError):
            parse_experiment_config(["system"])


class TestExperimentConfig:
    """Test suite for method resolution, CLI overrides and serialization."""

    def setup_method(self):
        """Set up test environment before each test."""
        self.config = ExperimentConfig()

    def test_aliases_resolve_by_kind(self):
        """Short method names map onto flow or map formulas."""
        config = parse_experiment_config({"sensitivity": {"methods": ["tangent", "adjoint", "fd", "adjoint"]}})

        assert config.resolved_methods("flow") == ("tangent-flow", "adjoint-flow", "finite-difference")
        assert config.resolved_methods("map") == ("tangent-map", "adjoint-map", "finite-difference")

    def test_mismatched_method_rejected(self):
        """A flow formula cannot be resolved for a map."""
        config = parse_experiment_config({"sensitivity": {"methods": ["adjoint-flow"]}})

        with pytest.raises(ConfigError):
            config.resolved_methods("map")

    def test_overrides(self):
        """--out, --seed and --format replace the matching fields."""
        config = self.config.with_overrides(out="elsewhere", seed=9, fmt="csv")

        assert config.output.directory == "elsewhere"
        assert config.trajectory.seed == 9
        assert config.output.formats == ("csv",)
        assert self.config.trajectory.seed == 0

    def test_negative_seed_override_rejected(self):
        with pytest.raises(ConfigError):
            self.config.with_overrides(seed=-1)

    def test_unknown_format_override_rejected(self):
        with pytest.raises(ConfigError):
            self.config.with_overrides(fmt="xml")

    def test_as_dict_uses_lists(self):
        """Tuples become lists so that the dictionary dumps as plain YAML."""
        data = self.config.as_dict()

        assert data["sensitivity"]["methods"] == ["tangent", "adjoint"]
        assert data["output"]["formats"] == ["json", "csv"]


class TestConfigManager:
    """Test suite for loading and saving configuration files."""

    def test_missing_file(self, tmp_path):
        """A missing file raises ConfigError."""
        manager = ConfigManager(str(tmp_path / "missing.yaml"))

        with pytest.raises(ConfigError):
            manager.load_raw()

    def test_invalid_yaml(self, tmp_path):
        """Broken YAML raises ConfigError."""
        path = tmp_path / "broken.yaml"
        path.write_text("system: [unclosed\n", encoding="utf-8")

        with pytest.raises(ConfigError):
            ConfigManager(str(path)).load_experiment_config()

    def test_saved_config_reloads(self, tmp_path):
        """A saved configuration parses back to the same values."""
        config = parse_experiment_config({"system": {"name": "catmap", "parameter": 0.05},
                                          "trajectory": {"u0": [0.1, 0.2], "horizon": 400}})
        path = tmp_path / "config_used.yaml"
        ConfigManager().save_resolved_config(config, str(path))

        reloaded = parse_experiment_config(yaml.safe_load(path.read_text(encoding="utf-8")))
        assert reloaded == config

    @pytest.mark.parametrize("name", ["settings.yaml", "catmap.yaml", "linear_saddle.yaml"])
    def test_shipped_configs_parse(self, name):
        """The configurations shipped in config/ are valid."""
        config = ConfigManager(str(CONFIG_DIR / name)).load_experiment_config()

        assert config.trajectory.horizon > 0
