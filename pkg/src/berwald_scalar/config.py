"""Configuration and constants for berwald-scalar."""

import json
import os
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource, SettingsConfigDict
from pydantic_settings.sources import TomlConfigSettingsSource

from .errors import ParseError

# Data directory - configurable via environment variable
_data_dir_env = os.getenv("BERWALD_SCALAR_DIR")
DATA_DIR = Path(_data_dir_env).expanduser() if _data_dir_env else Path.home() / ".berwald-scalar"

LOG_FILE = DATA_DIR / "berwald_scalar.log"

# Configuration file
CONFIG_FILE = DATA_DIR / "config.toml"


class Settings(BaseSettings):
    """
    Engine settings loaded from TOML config file and environment variables.

    Environment variables take precedence over config file values.
    Use BERWALD_SCALAR_ prefix for environment variables (e.g., BERWALD_SCALAR_JET_ORDER).
    """

    model_config = SettingsConfigDict(
        toml_file=CONFIG_FILE,
        env_prefix="BERWALD_SCALAR_",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        """
        Define the settings sources and their priority.

        Priority (highest to lowest):
        1. Environment variables
        2. TOML config file
        3. Default values
        """
        return (
            env_settings,
            TomlConfigSettingsSource(settings_cls),
            init_settings,
        )

    # Differentiation
    jet_order: int = Field(default=5, description="Total order carried by curvature jets")
    fd_step: float = Field(default=1e-3, description="Step of the finite-difference oracle")

    # Quadrature and spectral resolution
    quadrature_nodes: int = Field(
        default=256, description="Fiber quadrature nodes on the circle (n = 2)"
    )
    quadrature_panel: int = Field(
        default=32, description="Gauss-Legendre nodes per composite panel"
    )
    quadrature_polar: int = Field(
        default=64, description="Polar quadrature nodes for n = 3 (azimuth uses twice as many)"
    )
    indicatrix_nodes: int = Field(default=256, description="Nodes on the 2D indicatrix curve")

    # Sampling
    sample_count: int = Field(default=50, description="Sample points per metric")
    fiber_fit_samples: int = Field(
        default=24, description="Fiber directions used by the weak isotropic fit"
    )
    seed: int = Field(default=0, description="Default seed for low-discrepancy sampling")

    # Tolerances
    tolerance_algebraic: float = Field(
        default=1e-7, description="Tolerance for jet-exact identities"
    )
    tolerance_discretized: float = Field(
        default=1e-4, description="Tolerance for quadrature and spectral residuals"
    )

    default_volume: str = Field(default="bh", description="Volume form: bh, ht or custom:mod:fn")
    jobs: int = Field(default=1, description="Worker threads for the verification suite")

    # Logging configuration
    log_max_bytes: int = Field(default=5 * 1024 * 1024, description="Maximum bytes per log file")
    log_backup_count: int = Field(default=3, description="Number of backup log files to keep")
    log_level: str = Field(default="INFO", description="Logging level (INFO, WARNING, ERROR)")


def load_settings() -> Settings:
    """
    Load settings from config file and environment variables.

    Returns:
        Settings instance with loaded configuration
    """
    try:
        return Settings()
    except Exception:
        # If config file doesn't exist or is invalid, use defaults
        return Settings.model_construct()


# Load settings once at module import
settings = load_settings()


# ---------------------------------------------------------------------------
# Per-run JSON configuration
# ---------------------------------------------------------------------------


class AlphaConfig(BaseModel):
    """Riemannian part of an (alpha, beta) metric. Exactly one field is set."""

    model_config = ConfigDict(extra="forbid")

    euclidean: bool = False
    conformal: list[float] | None = None
    constant: list[list[float]] | None = None

    @model_validator(mode="after")
    def _one_choice(self) -> "AlphaConfig":
        chosen = [self.euclidean, self.conformal is not None, self.constant is not None]
        if sum(chosen) != 1:
            raise ValueError("alpha needs exactly one of euclidean, conformal, constant")
        return self


class LinearBetaConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    offset: list[float]
    matrix: list[list[float]]


class BetaConfig(BaseModel):
    """One-form part of an (alpha, beta) metric: b(x) = offset + matrix @ x."""

    model_config = ConfigDict(extra="forbid")

    constant: list[float] | None = None
    linear: LinearBetaConfig | None = None

    @model_validator(mode="after")
    def _one_choice(self) -> "BetaConfig":
        if (self.constant is None) == (self.linear is None):
            raise ValueError("beta needs exactly one of constant, linear")
        return self


class AlphaBetaConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dimension: int = Field(ge=2)
    alpha: AlphaConfig
    beta: BetaConfig
    phi: Literal["randers", "square", "exponential", "quadratic"] = "randers"


class MetricConfig(BaseModel):
    """A zoo entry with parameters, or composed (alpha, beta) data."""

    model_config = ConfigDict(extra="forbid")

    zoo: str | None = None
    params: dict[str, Any] = Field(default_factory=dict)
    alpha_beta: AlphaBetaConfig | None = None

    @model_validator(mode="after")
    def _one_choice(self) -> "MetricConfig":
        if (self.zoo is None) == (self.alpha_beta is None):
            raise ValueError("metric needs exactly one of zoo, alpha_beta")
        return self


class VolumeConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["bh", "ht", "custom"] = "bh"
    custom: str | None = None
    scale: float = Field(default=1.0, gt=0)

    @model_validator(mode="before")
    @classmethod
    def _from_shorthand(cls, data: Any) -> Any:
        if isinstance(data, str):
            if data.startswith("custom:"):
                return {"kind": "custom", "custom": data.removeprefix("custom:")}
            return {"kind": data}
        if isinstance(data, dict) and "custom" in data and "kind" not in data:
            return {**data, "kind": "custom"}
        return data

    @model_validator(mode="after")
    def _custom_reference(self) -> "VolumeConfig":
        if self.kind == "custom" and (not self.custom or ":" not in self.custom):
            raise ValueError("custom volume needs a '<module>:<callable>' reference")
        return self


class SamplePlanConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    count: int = Field(default_factory=lambda: settings.sample_count, ge=1)
    seed: int = Field(default_factory=lambda: settings.seed)
    x_box: float | None = Field(default=None, gt=0)
    y_mode: Literal["unit", "scaled"] = "unit"
    fiber: int = Field(default=8, ge=1, description="Fiber directions per base point")


class ToleranceConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    algebraic: float = Field(default_factory=lambda: settings.tolerance_algebraic, gt=0)
    discretized: float = Field(default_factory=lambda: settings.tolerance_discretized, gt=0)
    identities: dict[str, float] = Field(default_factory=dict)


class RunConfig(BaseModel):
    """One declarative artifact that reproduces a run."""

    model_config = ConfigDict(extra="forbid")

    metric: MetricConfig
    volume: VolumeConfig = Field(
        default_factory=lambda: VolumeConfig.model_validate(settings.default_volume)
    )
    samples: SamplePlanConfig = Field(default_factory=SamplePlanConfig)
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)


def load_run_config(path: Path) -> RunConfig:
    """
    Read and validate a JSON run configuration.

    Args:
        path: Path to the JSON file

    Returns:
        Validated RunConfig

    Raises:
        ParseError: If the file is unreadable, not JSON, or fails validation
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read config {path}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", line=e.lineno) from e
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(part) for part in first["loc"])
        raise ParseError(f"invalid config at {where or '<root>'}: {first['msg']}") from e


__all__ = [
    "settings",
    "Settings",
    "DATA_DIR",
    "LOG_FILE",
    "CONFIG_FILE",
    "RunConfig",
    "MetricConfig",
    "AlphaBetaConfig",
    "VolumeConfig",
    "SamplePlanConfig",
    "ToleranceConfig",
    "load_run_config",
]
