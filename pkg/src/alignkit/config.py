"""alignkit 的配置模型。"""

from __future__ import annotations

from functools import lru_cache
from typing import Literal

from pydantic import BaseModel, Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class ToleranceSettings(BaseModel):
    """Numerical thresholds shared by every module."""

    normalization: float = Field(1e-9, description="允许的概率质量偏差")
    zero_mass: float = Field(1e-12, description="Evidence below this mass has no support")
    verdict_eps: float = 1e-9
    monotone_gap: float = 1e-12
    injectivity_gap: float = 1e-9
    leakage_zero: float = 1e-6


class OptimizerSettings(BaseModel):
    """Fixed-point ascent used for the Bayes-optimal concept classifier."""

    tol: float = 1e-10
    max_iter: int = 100_000
    restarts: int = 10
    gap_tol: float = 1e-8
    monotonic_slack: float = 1e-12


class LassoSettings(BaseModel):
    tol: float = 1e-8
    max_sweeps: int = 10_000


class Settings(BaseSettings):
    """全局设置。"""

    model_config = SettingsConfigDict(env_file=".env", extra="ignore")

    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = Field(
        default="WARNING", alias="ALIGNKIT_LOG_LEVEL"
    )

    @field_validator("log_level", mode="before")
    @classmethod
    def normalize_level(cls, v: str) -> str:
        if isinstance(v, str):
            return v.strip().upper()
        return v

    max_cells: int = Field(default=2**24, alias="ALIGNKIT_MAX_CELLS", gt=0)
    max_interventions: int = Field(default=100_000, alias="ALIGNKIT_MAX_INTERVENTIONS", gt=0)
    workers: int = Field(default=1, alias="ALIGNKIT_WORKERS", ge=1)

    divergence: Literal["tv", "kl", "mad"] = Field(default="tv", alias="ALIGNKIT_DIVERGENCE")
    expectation: Literal["observational", "uniform"] = Field(
        default="observational", alias="ALIGNKIT_EXPECTATION"
    )
    reference: Literal["mode", "first"] = Field(default="mode", alias="ALIGNKIT_REFERENCE")

    tolerances: ToleranceSettings = ToleranceSettings()
    optimizer: OptimizerSettings = OptimizerSettings()
    lasso: LassoSettings = LassoSettings()


@lru_cache
def get_settings() -> Settings:
    """返回缓存的设置实例。"""
    return Settings()  # type: ignore[call-arg]


settings = get_settings()
