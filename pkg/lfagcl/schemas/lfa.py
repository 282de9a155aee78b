"""
Latent Factor Analysis Schemas
==============================
Validated settings for LFA pretraining.
"""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator


class LfaConfig(BaseModel):
    """Settings for fitting R_hat = P Q^T on the observed train entries."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    f: int = Field(5, ge=1, description="Latent dimension")
    lfa_lambda: float = Field(0.1, ge=0.0, description="Per-entry ridge coefficient")
    max_iters: int = Field(50, ge=1, description="Maximum full ALS iterations (or SGD epochs)")
    rel_tol: float = Field(1e-6, gt=0.0, description="Stop when the relative objective decrease falls below this")
    init_scale: float = Field(0.01, gt=0.0, description="Factors start uniform in [-init_scale, init_scale]")
    seed: int = Field(0, ge=0)
    solver: Literal["als", "sgd"] = "als"
    sgd_learning_rate: float = Field(0.005, gt=0.0)
    sgd_batch_size: int = Field(256, ge=1)

    @field_validator("lfa_lambda")
    @classmethod
    def validate_lambda(cls, v):
        if v != v or v == float("inf"):
            raise ValueError("lfa_lambda must be finite")
        return v
