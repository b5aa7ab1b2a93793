"""
Configuration management for fractomatch.

One RunConfig captures every knob of a study. Values come from a TOML/YAML
file, then FRACTOMATCH_* environment variables (a .env file is honoured),
then command-line flags.
"""

import hashlib
import json
import os
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import toml
import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from fractomatch.emfit import FitConfig
from fractomatch.errors import ConfigError
from fractomatch.simharness.synth import SimSpec
from fractomatch.spectral.bands import DEFAULT_MIN_BAND_CELLS, BandPlan
from fractomatch.spectral.spectrum import is_power_of_two
from fractomatch.surface.preprocess import DESPIKE_WINDOWS

DEFAULT_CONFIG_PATHS = (
    "fractomatch.toml",
    "fractomatch.yaml",
    ".fractomatch/config.toml",
    ".fractomatch/config.yaml",
)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class SpectrumConfig(BaseModel):
    """Amplitude spectrum settings."""
    model_config = ConfigDict(extra="forbid")

    transform_size: int = 256
    hann: bool = False
    min_band_cells: int = Field(default=DEFAULT_MIN_BAND_CELLS, ge=1)
    workers: int = Field(default=1, ge=1)

    @field_validator("transform_size")
    @classmethod
    def _check_transform_size(cls, value: int) -> int:
        if not is_power_of_two(value):
            raise ValueError("transform_size must be a power of two")
        return value


class DespikeConfig(BaseModel):
    """Median/MAD spike removal."""
    model_config = ConfigDict(extra="forbid")

    window: int = 5
    z_thresh: float = Field(default=6.0, gt=0.0)

    @field_validator("window")
    @classmethod
    def _check_window(cls, value: int) -> int:
        if value not in DESPIKE_WINDOWS:
            raise ValueError(f"despike window must be one of {DESPIKE_WINDOWS}")
        return value


class CalibrationConfig(BaseModel):
    """False-alarm threshold calibration."""
    model_config = ConfigDict(extra="forbid")

    alpha: float = Field(default=1e-4, gt=0.0, lt=1.0)
    confidence: float = Field(default=0.95, gt=0.0, lt=1.0)
    n_boot: int = Field(default=2000, ge=1)
    threshold_probability: Optional[float] = Field(default=None, gt=0.0, lt=1.0)


class RoughnessConfig(BaseModel):
    """Height-height correlation range and self-affine fit window (micrometres)."""
    model_config = ConfigDict(extra="forbid")

    max_lag: float = Field(default=200.0, gt=0.0)
    fit_range: Tuple[float, float] = (5.0, 25.0)

    @field_validator("fit_range")
    @classmethod
    def _check_fit_range(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        if not 0.0 < value[0] < value[1]:
            raise ValueError("fit_range must satisfy 0 < lo < hi")
        return value


class RunConfig(BaseModel):
    """Main configuration for fractomatch."""
    model_config = ConfigDict(extra="forbid")

    bands: BandPlan = Field(default_factory=BandPlan)
    spectrum: SpectrumConfig = Field(default_factory=SpectrumConfig)
    despike: DespikeConfig = Field(default_factory=DespikeConfig)
    fit: FitConfig = Field(default_factory=FitConfig)
    calibration: CalibrationConfig = Field(default_factory=CalibrationConfig)
    roughness: RoughnessConfig = Field(default_factory=RoughnessConfig)
    sim: SimSpec = Field(default_factory=SimSpec)
    prior: float = Field(default=0.5, gt=0.0, lt=1.0)

    # General settings
    seed: int = 0
    log_level: str = "INFO"
    log_file: Optional[str] = None

    @field_validator("log_level")
    @classmethod
    def _check_log_level(cls, value: str) -> str:
        value = value.upper()
        if value not in LOG_LEVELS:
            raise ValueError(f"log_level must be one of {LOG_LEVELS}")
        return value

    @classmethod
    def load(cls, config_path: Optional[str] = None) -> "RunConfig":
        """Load configuration from file and environment."""
        load_dotenv()
        config_data: Dict[str, Any] = {}

        if config_path:
            path = Path(config_path)
            if not path.exists():
                raise ConfigError("Config file not found", {"path": str(path)})
            config_data = _read_config_file(path)
        else:
            for default_path in DEFAULT_CONFIG_PATHS:
                if Path(default_path).exists():
                    return cls.load(default_path)

        _apply_environment(config_data)
        return cls.from_dict(config_data)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise ConfigError(f"Invalid configuration: {e.errors()[0]['msg']}", {"errors": e.error_count()}) from e

    def with_overrides(
        self,
        seed: Optional[int] = None,
        bands: Optional[str] = None,
        nu: Optional[float] = None,
        k: Optional[int] = None,
        overlap: Optional[float] = None,
        pitch: Optional[float] = None,
        log_level: Optional[str] = None,
    ) -> "RunConfig":
        """Copy with command-line flags applied; flags win over file and environment."""
        data = self.model_dump(mode="json")
        if seed is not None:
            data["seed"] = seed
            data["sim"]["seed"] = seed
        if bands is not None:
            try:
                plan = BandPlan.parse(bands, self.bands.angular_sector)
            except (ValueError, ValidationError) as e:
                raise ConfigError("Cannot parse --bands", {"bands": bands}) from e
            data["bands"] = plan.model_dump(mode="json")
        if nu is not None:
            data["fit"]["nu"] = nu
        if k is not None:
            data["sim"]["k"] = k
        if overlap is not None:
            data["sim"]["overlap"] = overlap
        if pitch is not None:
            data["sim"]["pitch"] = pitch
        if log_level is not None:
            data["log_level"] = log_level
        return RunConfig.from_dict(data)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form; the provenance config hash."""
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def save(self, config_path: str) -> None:
        """Save configuration to file."""
        path = Path(config_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        data = self.model_dump(mode="json", exclude_none=True)

        if path.suffix in [".yaml", ".yml"]:
            with open(path, "w", encoding="utf-8") as f:
                yaml.safe_dump(data, f, default_flow_style=False, sort_keys=False)
        elif path.suffix == ".toml":
            with open(path, "w", encoding="utf-8") as f:
                toml.dump(data, f)
        else:
            raise ConfigError(f"Unsupported config format: {path.suffix}")


def _read_config_file(path: Path) -> Dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as f:
            if path.suffix in [".yaml", ".yml"]:
                data = yaml.safe_load(f)
            elif path.suffix == ".toml":
                data = toml.load(f)
            else:
                raise ConfigError(f"Unsupported config format: {path.suffix}", {"path": str(path)})
    except (yaml.YAMLError, toml.TomlDecodeError) as e:
        raise ConfigError("Config file does not parse", {"path": str(path)}) from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("Config file must hold a mapping", {"path": str(path)})
    return data


def _apply_environment(config_data: Dict[str, Any]) -> None:
    try:
        if os.getenv("FRACTOMATCH_SEED"):
            config_data["seed"] = int(os.environ["FRACTOMATCH_SEED"])
            config_data.setdefault("sim", {})["seed"] = config_data["seed"]
        if os.getenv("FRACTOMATCH_NU"):
            config_data.setdefault("fit", {})["nu"] = float(os.environ["FRACTOMATCH_NU"])
    except ValueError as e:
        raise ConfigError("FRACTOMATCH_SEED / FRACTOMATCH_NU must be numbers") from e
    if os.getenv("FRACTOMATCH_LOG_LEVEL"):
        config_data["log_level"] = os.environ["FRACTOMATCH_LOG_LEVEL"]
