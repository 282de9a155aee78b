"""
Training Schemas
================
Hyperparameters of the joint objective, per-step loss values and the
per-epoch training log.
"""

from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from lfagcl.schemas.lfa import LfaConfig
from lfagcl.utils.helpers import format_number


class TrainConfig(BaseModel):
    """
    Everything `fit` needs.

    Defaults follow the published experimental setup: Adam with batch 2048 and
    learning rate 1e-3, embedding size 32, two propagation layers, validation
    every two epochs and patience 10.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    learning_rate: float = Field(1e-3, ge=0.0)
    batch_size: int = Field(2048, ge=2)
    epochs_max: int = Field(100, ge=0)
    lambda1: float = Field(0.01, ge=0.0, description="Contrastive loss weight")
    lambda2: float = Field(1e-6, ge=0.0, description="L2 weight on the base embeddings")
    tau: float = Field(0.5, gt=0.0, description="InfoNCE temperature")
    dropout_rate: float = Field(0.1, ge=0.0, lt=1.0)
    layers: int = Field(2, ge=1)
    embed_dim: int = Field(32, ge=1)
    lfa: LfaConfig = Field(default_factory=LfaConfig)
    seed: int = Field(0, ge=0)
    validate_every: int = Field(2, ge=1)
    patience: int = Field(10, ge=1)
    eval_k: List[int] = Field(default_factory=lambda: [20, 40])
    cl_negatives: Literal["batch", "full"] = "batch"

    @field_validator("eval_k")
    @classmethod
    def validate_eval_k(cls, v):
        if not v:
            raise ValueError("eval_k needs at least one cutoff")
        if any(k < 1 for k in v):
            raise ValueError("every K must be >= 1")
        return v

    @property
    def monitor_k(self) -> int:
        """Cutoff of the early-stopping metric (first entry of eval_k)."""
        return self.eval_k[0]


class LossBreakdown(BaseModel):
    """Values of every term of the joint loss for one step (or an epoch mean)."""

    model_config = ConfigDict(frozen=True)

    bpr: float
    cl_user: float
    cl_item: float
    l2: float
    total: float
    lambda1: float
    lambda2: float
    tau: float

    @classmethod
    def compose(cls, *, bpr: float, cl_user: float, cl_item: float, l2: float,
                lambda1: float, lambda2: float, tau: float) -> "LossBreakdown":
        total = bpr + lambda1 * (cl_user + cl_item) + lambda2 * l2
        return cls(bpr=bpr, cl_user=cl_user, cl_item=cl_item, l2=l2, total=total,
                   lambda1=lambda1, lambda2=lambda2, tau=tau)

    @model_validator(mode="after")
    def validate_total(self):
        expected = self.bpr + self.lambda1 * (self.cl_user + self.cl_item) + self.lambda2 * self.l2
        if abs(expected - self.total) > 1e-12 * (1.0 + abs(expected)):
            raise ValueError("total must equal bpr + lambda1*(cl_user+cl_item) + lambda2*l2")
        return self


LOG_COLUMNS = ("epoch", "bpr", "cl_u", "cl_i", "l2", "total", "val_recall", "val_ndcg", "elapsed_ms")


class EpochRecord(BaseModel):
    """One line of the training log."""

    epoch: int
    bpr: float
    cl_user: float
    cl_item: float
    l2: float
    total: float
    val_recall: Optional[float] = None
    val_ndcg: Optional[float] = None
    elapsed_ms: int = 0

    def to_line(self, sep: str = "\t") -> str:
        cells = [
            str(self.epoch),
            format_number(self.bpr),
            format_number(self.cl_user),
            format_number(self.cl_item),
            format_number(self.l2),
            format_number(self.total),
            "" if self.val_recall is None else format_number(self.val_recall),
            "" if self.val_ndcg is None else format_number(self.val_ndcg),
            str(self.elapsed_ms),
        ]
        return sep.join(cells)


class TrainingLog(BaseModel):
    """What happened during `fit`."""

    records: List[EpochRecord] = Field(default_factory=list)
    best_epoch: Optional[int] = None
    best_metric: Optional[float] = None
    n_validations: int = 0
    stopped_early: bool = False
    steps: int = 0
    skipped_triplets: int = 0

    def to_text(self, sep: str = "\t") -> str:
        lines = [sep.join(LOG_COLUMNS)]
        lines.extend(record.to_line(sep) for record in self.records)
        return "\n".join(lines) + "\n"
