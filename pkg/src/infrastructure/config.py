from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field
from typing import Optional

from ..domain.value_objects import Tolerances


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="RECSIM_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    environment: str = Field(default="development")
    log_level: str = Field(default="INFO")
    log_file: Optional[str] = Field(default=None)

    workers: int = Field(default=1, ge=1)

    # Numeric kernel
    explosion_limit: int = Field(default=10_000, ge=1)
    singularity_offset: float = Field(default=1e-6, gt=0)
    quadrature_tolerance: float = Field(default=1e-10, gt=0)
    quadrature_limit: int = Field(default=60, ge=1)
    root_tolerance: float = Field(default=1e-12, gt=0)

    # Oracle thresholds
    significance: float = Field(default=0.01, gt=0, lt=1)
    discrete_significance: float = Field(default=0.001, gt=0, lt=1)
    moment_tolerance: float = Field(default=3.0, gt=0)
    agreement_sample_size: Optional[int] = Field(default=None, ge=10)

    def tolerances(self) -> Tolerances:
        return Tolerances(
            singularity_offset=self.singularity_offset,
            quadrature_tolerance=self.quadrature_tolerance,
            quadrature_limit=self.quadrature_limit,
            root_tolerance=self.root_tolerance,
            explosion_limit=self.explosion_limit,
        )


def get_settings() -> Settings:
    return Settings()
