"""Tests for config module."""

import json

import pytest
from pydantic import ValidationError

from berwald_scalar.config import (
    MetricConfig,
    RunConfig,
    SamplePlanConfig,
    Settings,
    VolumeConfig,
    load_run_config,
)
from berwald_scalar.errors import ParseError


class TestSettings:
    """Test engine settings."""

    def test_defaults(self, monkeypatch):
        """Settings fall back to the documented defaults."""
        monkeypatch.delenv("BERWALD_SCALAR_JET_ORDER", raising=False)
        s = Settings.model_construct()
        assert s.jet_order == 5
        assert s.quadrature_nodes == 256
        assert s.tolerance_algebraic == 1e-7
        assert s.tolerance_discretized == 1e-4

    def test_environment_override(self, monkeypatch):
        """BERWALD_SCALAR_ environment variables override the defaults."""
        monkeypatch.setenv("BERWALD_SCALAR_QUADRATURE_NODES", "128")
        monkeypatch.setenv("BERWALD_SCALAR_LOG_LEVEL", "DEBUG")
        s = Settings()
        assert s.quadrature_nodes == 128
        assert s.log_level == "DEBUG"


class TestVolumeConfig:
    """Test volume shorthands."""

    def test_kind_shorthand(self):
        """A bare kind string is a volume config."""
        assert VolumeConfig.model_validate("ht").kind == "ht"

    def test_custom_shorthand(self):
        """"custom:<module>:<callable>" sets the kind and the reference."""
        cfg = VolumeConfig.model_validate("custom:pkg.module:density")
        assert cfg.kind == "custom"
        assert cfg.custom == "pkg.module:density"

    def test_custom_without_kind(self):
        """A custom reference alone implies the custom kind."""
        assert VolumeConfig.model_validate({"custom": "pkg:fn", "scale": 2.0}).kind == "custom"

    def test_custom_needs_reference(self):
        """The custom kind needs a density reference."""
        with pytest.raises(ValidationError):
            VolumeConfig(kind="custom")

    def test_scale_must_be_positive(self):
        """A volume scale of zero is rejected."""
        with pytest.raises(ValidationError):
            VolumeConfig(scale=0.0)


class TestRunConfig:
    """Test run configuration models."""

    def test_metric_needs_exactly_one_source(self):
        """A metric is either a zoo name or (alpha, beta) data, never both."""
        with pytest.raises(ValidationError):
            MetricConfig()
        with pytest.raises(ValidationError):
            MetricConfig.model_validate(
                {
                    "zoo": "funk",
                    "alpha_beta": {
                        "dimension": 2,
                        "alpha": {"euclidean": True},
                        "beta": {"constant": [0.1, 0.0]},
                    },
                }
            )

    def test_alpha_needs_exactly_one_choice(self):
        """Alpha takes exactly one of its forms."""
        with pytest.raises(ValidationError):
            MetricConfig.model_validate(
                {
                    "alpha_beta": {
                        "dimension": 2,
                        "alpha": {"euclidean": True, "conformal": [1.0, 0.0]},
                        "beta": {"constant": [0.1, 0.0]},
                    }
                }
            )

    def test_defaults(self):
        """A run config needs only a metric."""
        cfg = RunConfig(metric=MetricConfig(zoo="funk"))
        assert cfg.volume.kind == "bh"
        assert cfg.samples.fiber == 8
        assert cfg.samples.y_mode == "unit"
        assert cfg.tolerances.identities == {}

    def test_sample_plan_bounds(self):
        """A sample plan needs at least one point."""
        with pytest.raises(ValidationError):
            SamplePlanConfig(count=0)


class TestLoadRunConfig:
    """Test reading JSON run configurations."""

    def test_valid_file(self, tmp_path):
        """A JSON run configuration loads into typed models."""
        path = tmp_path / "run.json"
        path.write_text(
            json.dumps(
                {
                    "metric": {"zoo": "minkowski-randers", "params": {"b": 0.3}},
                    "volume": "ht",
                    "samples": {"count": 5, "seed": 9},
                    "tolerances": {"identities": {"eq10": 1e-5}},
                }
            )
        )
        cfg = load_run_config(path)
        assert cfg.metric.params == {"b": 0.3}
        assert cfg.volume.kind == "ht"
        assert cfg.samples.seed == 9
        assert cfg.tolerances.identities["eq10"] == 1e-5

    def test_missing_file(self, tmp_path):
        """A missing config file is a ParseError."""
        with pytest.raises(ParseError, match="cannot read config"):
            load_run_config(tmp_path / "missing.json")

    def test_invalid_json_names_line(self, tmp_path):
        """A JSON syntax error reports its line."""
        path = tmp_path / "run.json"
        path.write_text('{\n  "metric": {"zoo": "funk"},\n  oops\n}\n')
        with pytest.raises(ParseError) as excinfo:
            load_run_config(path)
        assert excinfo.value.line == 3

    def test_unknown_field(self, tmp_path):
        """Unknown top-level fields are rejected by name."""
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"metric": {"zoo": "funk"}, "colour": "blue"}))
        with pytest.raises(ParseError, match="colour"):
            load_run_config(path)
