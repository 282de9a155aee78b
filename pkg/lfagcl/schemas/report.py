"""
Report Schemas
==============
Metric reports, dataset statistics and sweep rows.
"""

from typing import Dict, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator


class KMetrics(BaseModel):
    """Recall@K and NDCG@K averaged over evaluated users."""

    model_config = ConfigDict(frozen=True)

    recall: float = Field(..., ge=0.0, le=1.0)
    ndcg: float = Field(..., ge=0.0, le=1.0)


class GroupMetrics(BaseModel):
    """Metrics restricted to one training-degree group."""

    group: int
    degree_min: int
    degree_max: int
    n_users: int
    n_evaluated: int
    per_k: Dict[int, KMetrics]


class MetricReport(BaseModel):
    """
    Result of an all-ranking evaluation.

    `per_group` is empty unless degree groups were supplied.
    """

    split: Literal["validation", "test"]
    per_k: Dict[int, KMetrics]
    per_group: Dict[int, GroupMetrics] = Field(default_factory=dict)
    n_users_evaluated: int
    n_users_skipped: int = 0
    n_cold_users: int = 0
    ndcg_variant: Literal["full", "standard"] = "full"
    mask_validation: bool = False
    config: Dict[str, str] = Field(default_factory=dict)

    def recall(self, k: int) -> float:
        return self.per_k[k].recall

    def ndcg(self, k: int) -> float:
        return self.per_k[k].ndcg


class DatasetStats(BaseModel):
    """Counts printed by `prepare` in the dataset-statistics table shape."""

    name: str
    n_users: int
    n_items: int
    n_interactions: int
    density: float
    n_train: int = 0
    n_validation: int = 0
    n_test: int = 0
    lines_read: int = 0
    duplicates_dropped: int = 0
    malformed_skipped: int = 0

    @field_validator("density")
    @classmethod
    def validate_density(cls, v):
        if not 0.0 <= v <= 1.0:
            raise ValueError("density must lie in [0, 1]")
        return v


class SweepRow(BaseModel):
    """One grid point of a hyperparameter sweep."""

    axis: Literal["lambda1", "lambda2", "tau", "dropout"]
    value: float
    k: int
    recall: float
    ndcg: float
    best_epoch: Optional[int] = None
