"""
Configuration Management using Pydantic

Two layers:
- Settings: process-wide knobs loaded from environment variables / .env.
  Fails fast on startup if invalid.
- ExperimentConfig: per-run experiment schema (kernel, generator, inputs,
  seed, ...). Unknown keys are rejected before any computation.

Usage:
    from kfbd.utils.config import settings
    print(settings.KFBD_THREADS)

    config = load_experiment_config("audit.json")
"""

import json
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from kfbd.utils.exceptions import ConfigurationError, InputError


class Settings(BaseSettings):
    """Application settings loaded from environment variables"""

    LOG_LEVEL: str = Field(default="INFO")
    ENVIRONMENT: str = Field(default="development")

    KFBD_THREADS: int = Field(default=1, ge=1, description="Worker threads for Gram fills")
    GRAM_TILE_ROWS: int = Field(default=256, ge=1, description="Row tile size for blocked kernel sums")

    REFERENCE_SAMPLE_SIZE: int = Field(default=10_000, ge=100, description="Draws for p0 reference embeddings")
    MODEL_SAMPLE_SIZE: int = Field(default=500, ge=100, description="Draws representing p_theta")
    DEFAULT_SEED: int = Field(default=0, ge=0)

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore"
    )

    @field_validator("LOG_LEVEL")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Ensure log level is valid"""
        allowed = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        v = v.upper()
        if v not in allowed:
            raise ValueError(f"LOG_LEVEL must be one of {allowed}, got: {v}")
        return v

    @field_validator("ENVIRONMENT")
    @classmethod
    def validate_environment(cls, v: str) -> str:
        allowed = ["development", "production"]
        v = v.lower()
        if v not in allowed:
            raise ValueError(f"ENVIRONMENT must be one of {allowed}, got: {v}")
        return v

    @property
    def is_production(self) -> bool:
        """Check if running in production"""
        return self.ENVIRONMENT == "production"


settings = Settings()


# Experiment schema

class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True, frozen=True)


class KernelSpec(_Strict):
    """Kernel family and its length parameter, e.g. {"family": "gaussian", "bandwidth": 1.0}"""
    family: Literal["gaussian", "laplace", "inverse_multiquadric"] = "gaussian"
    bandwidth: Optional[float] = Field(default=None, gt=0)
    scale: Optional[float] = Field(default=None, gt=0)
    c: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def check_parameter(self) -> "KernelSpec":
        expected = {"gaussian": "bandwidth", "laplace": "scale", "inverse_multiquadric": "c"}[self.family]
        for name in ("bandwidth", "scale", "c"):
            if name != expected and getattr(self, name) is not None:
                raise ValueError(f"{self.family} kernel takes '{expected}', not '{name}'")
        return self

    @property
    def length(self) -> float:
        """The family's length parameter (defaults to 1)"""
        value = self.bandwidth if self.family == "gaussian" else self.scale if self.family == "laplace" else self.c
        return 1.0 if value is None else float(value)


class GeneratorSpec(_Strict):
    """Radial profile, e.g. {"profile": "quartic", "lambda": 0.5} or {"profile": "power", "p": 3.0}"""
    profile: Literal["square", "exp_centered", "logcosh", "sqrtplus", "quartic", "power"] = "square"
    lam: Optional[float] = Field(default=None, alias="lambda")
    p: Optional[float] = None

    @model_validator(mode="after")
    def check_parameters(self) -> "GeneratorSpec":
        if self.lam is not None and self.profile != "quartic":
            raise ValueError("'lambda' only applies to the quartic profile")
        if self.p is not None and self.profile != "power":
            raise ValueError("'p' only applies to the power profile")
        return self


class ModelSpec(_Strict):
    """Location model with fixed scale, e.g. {"family": "gaussian_location", "scale": 1.0, "dim": 1}"""
    family: Literal["gaussian_location", "laplace_location"] = "gaussian_location"
    scale: float = Field(default=1.0, gt=0)
    dim: int = Field(default=1, ge=1)
    bound: float = Field(default=10.0, gt=0)


class ContaminationConfig(_Strict):
    epsilon: float = Field(default=0.0, ge=0.0, lt=1.0)
    offset: float = 10.0
    theta0: float = 0.0


class DependenceConfig(_Strict):
    kind: Literal["iid", "ar1"] = "iid"
    coefficient: float = Field(default=0.0, gt=-1.0, lt=1.0)


class AuditConfig(_Strict):
    model: ModelSpec = ModelSpec()
    contamination: ContaminationConfig = ContaminationConfig()
    dependence: DependenceConfig = DependenceConfig()
    n_grid: List[int] = Field(default_factory=lambda: [100, 1000])
    replicates: int = Field(default=20, ge=2)
    model_sample_size: int = Field(default=500, ge=100)
    reference_sample_size: int = Field(default=10_000, ge=100)
    rho_replicates: int = Field(default=100, ge=2)
    grid_points: int = Field(default=101, ge=3)

    @field_validator("n_grid")
    @classmethod
    def validate_n_grid(cls, v: List[int]) -> List[int]:
        if not v or any(n < 2 for n in v):
            raise ValueError("n_grid must be a nonempty list of sample sizes >= 2")
        return v


class ExperimentConfig(_Strict):
    """Full experiment configuration (JSON file or assembled from CLI flags)"""
    kernel: KernelSpec = KernelSpec()
    generator: GeneratorSpec = GeneratorSpec()
    inputs: List[str] = Field(default_factory=list)
    seed: int = Field(default_factory=lambda: settings.DEFAULT_SEED, ge=0)
    trials: int = Field(default=1000, ge=1)
    output: Optional[str] = None
    format: Literal["json", "csv"] = "json"
    audit: Optional[AuditConfig] = None


# Helper functions

def parse_kernel_spec(text: str) -> KernelSpec:
    """Parse 'gaussian:1.0' style kernel specs"""
    family, _, value = text.partition(":")
    key = {"gaussian": "bandwidth", "laplace": "scale", "inverse_multiquadric": "c"}.get(family.strip())
    if key is None:
        raise ConfigurationError(f"Unknown kernel family: {family!r}")
    payload = {"family": family.strip()}
    if value:
        try:
            payload[key] = float(value)
        except ValueError as e:
            raise ConfigurationError(f"Invalid kernel parameter in {text!r}") from e
    return _validated(KernelSpec, payload)


def parse_generator_spec(text: str, lam: float | None = None, p: float | None = None) -> GeneratorSpec:
    """Parse 'exp_centered', 'quartic:0.5' or 'power:3' style generator specs"""
    profile, _, value = text.partition(":")
    profile = profile.strip()
    payload: dict = {"profile": profile}
    if value:
        try:
            number = float(value)
        except ValueError as e:
            raise ConfigurationError(f"Invalid generator parameter in {text!r}") from e
        if profile == "quartic":
            lam = number if lam is None else lam
        elif profile == "power":
            p = number if p is None else p
        else:
            raise ConfigurationError(f"Profile {profile!r} takes no parameter")
    if lam is not None:
        payload["lambda"] = lam
    if p is not None:
        payload["p"] = p
    return _validated(GeneratorSpec, payload)


def parse_model_spec(text: str, dim: int = 1) -> ModelSpec:
    """Parse 'gaussian:1.0' / 'laplace:0.5' style location model specs"""
    family, _, value = text.partition(":")
    payload: dict = {"family": f"{family.strip()}_location", "dim": dim}
    if value:
        try:
            payload["scale"] = float(value)
        except ValueError as e:
            raise ConfigurationError(f"Invalid model scale in {text!r}") from e
    return _validated(ModelSpec, payload)


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    """Read and validate an ExperimentConfig JSON file"""
    config_file = Path(path)
    if not config_file.exists():
        raise InputError(f"Config file not found: {config_file}")
    try:
        payload = json.loads(config_file.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Config file {config_file} is not valid JSON: {e}") from e
    return _validated(ExperimentConfig, payload)


def _validated(model: type[BaseModel], payload: dict):
    try:
        return model.model_validate(payload)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid {model.__name__}: {e}") from e


def merge_experiment_config(config: ExperimentConfig, updates: dict) -> ExperimentConfig:
    """Overlay updates on a config and validate the result"""
    payload = config.model_copy(update=updates).model_dump(by_alias=True, exclude_none=True)
    return _validated(ExperimentConfig, payload)
