"""
Configuration management for ellspin using Pydantic settings.
"""
from pathlib import Path
from typing import Optional
from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field, ValidationError, field_validator, model_validator

from ellspin.exceptions import ConfigurationError


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    # Application
    app_name: str = "EllSpin"
    debug: bool = Field(default=False, description="Enable debug mode")

    # Theta function evaluation
    theta_tolerance: float = Field(
        default=1e-16,
        gt=0.0,
        lt=1.0,
        description="Target absolute truncation error of the theta products"
    )
    theta_max_terms: int = Field(
        default=2000,
        ge=1,
        description="Hard cap on the number of product factors"
    )
    pole_threshold: float = Field(
        default=1e-13,
        gt=0.0,
        description="Distance to the zero lattice below which a division is a pole"
    )

    # Chain construction
    dynamical_infinity: float = Field(
        default=1e4,
        gt=0.0,
        description="Magnitude T of the dynamical parameter standing in for a -> -i*infinity"
    )
    max_sites: int = Field(
        default=12,
        ge=2,
        le=14,
        description="Hard cap on the number of chain sites (dense 2^N operators)"
    )
    sector_threshold: int = Field(
        default=8,
        ge=2,
        description="Chain length beyond which eigensolves are blocked by S^z sector"
    )
    operator_cache_entries: int = Field(
        default=256,
        ge=1,
        description="Maximum number of cached chain operators (LRU eviction)"
    )

    # Difference operators and freezing
    epsilon_real: float = Field(
        default=0.0,
        description="Real part of the shift scale of the difference operators"
    )
    epsilon_imag: float = Field(
        default=0.1,
        description="Imaginary part of the shift scale of the difference operators"
    )
    hbar: float = Field(
        default=1.0,
        gt=0.0,
        description="Planck constant entering the shift step i*hbar*epsilon"
    )
    freeze_step: float = Field(
        default=1e-5,
        gt=0.0,
        lt=1e-2,
        description="Central-difference step in epsilon for freezing"
    )

    # Verification suite
    jobs: int = Field(
        default=1,
        ge=1,
        le=256,
        description="Worker threads for suites and sweeps"
    )
    draws_per_check: int = Field(
        default=20,
        ge=1,
        le=1000,
        description="Random parameter draws per verification check"
    )

    # Logging
    log_level: str = Field(
        default="WARNING",
        description="Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)"
    )
    log_format: str = Field(
        default="console",
        description="Log format (json or console)"
    )
    log_file: Optional[Path] = Field(
        default=None,
        description="Path to log file (optional)"
    )

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        env_prefix="ELLSPIN_",
        extra="ignore"
    )

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v):
        """Validate log level."""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        v_upper = v.upper()
        if v_upper not in valid_levels:
            raise ValueError(f"log_level must be one of {valid_levels}")
        return v_upper

    @field_validator("log_format")
    @classmethod
    def validate_log_format(cls, v):
        """Validate log format."""
        valid_formats = ["json", "console"]
        v_lower = v.lower()
        if v_lower not in valid_formats:
            raise ValueError(f"log_format must be one of {valid_formats}")
        return v_lower

    @model_validator(mode="after")
    def validate_epsilon(self):
        """A vanishing shift scale degenerates every difference operator."""
        if self.epsilon_real == 0.0 and self.epsilon_imag == 0.0:
            raise ValueError("epsilon must be nonzero")
        return self

    @property
    def epsilon(self) -> complex:
        """Shift scale epsilon as a complex number."""
        return complex(self.epsilon_real, self.epsilon_imag)

    def get_project_root(self) -> Path:
        """Get the project root directory."""
        return Path(__file__).parent.parent


_settings: Optional[Settings] = None


def _load() -> Settings:
    try:
        return Settings()
    except ValidationError as e:
        errors = [f"{'.'.join(str(part) for part in err['loc'])}: {err['msg']}" for err in e.errors()]
        raise ConfigurationError(
            "Invalid ELLSPIN_* configuration",
            details={"errors": errors},
            original_error=e,
        )


def get_settings() -> Settings:
    """
    Get the global settings instance, loading it on first use.

    Raises:
        ConfigurationError: if the environment or .env holds invalid values
    """
    global _settings
    if _settings is None:
        _settings = _load()
    return _settings


def reload_settings() -> Settings:
    """Reload settings from environment."""
    global _settings
    _settings = _load()
    return _settings
