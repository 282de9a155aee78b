"""
Trained Model
=============
Everything a checkpoint holds: the run config, the base embeddings, the
frozen LFA factors and the Adam state.
"""

from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from lfagcl.models.embeddings import EmbeddingTables
from lfagcl.models.factors import LatentFactors
from lfagcl.schemas.training import TrainConfig
from lfagcl.utils.helpers import config_hash


@dataclass
class AdamState:
    """First/second moments per parameter table and the step counter."""

    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def zeros_like(cls, params: Dict[str, np.ndarray]) -> "AdamState":
        return cls(
            first_moment={k: np.zeros_like(v) for k, v in params.items()},
            second_moment={k: np.zeros_like(v) for k, v in params.items()},
        )

    def copy(self) -> "AdamState":
        return AdamState(
            first_moment={k: v.copy() for k, v in self.first_moment.items()},
            second_moment={k: v.copy() for k, v in self.second_moment.items()},
            step_count=self.step_count,
            beta1=self.beta1,
            beta2=self.beta2,
            epsilon=self.epsilon,
        )


@dataclass
class LfaGclModel:
    """A (possibly partially) trained dual-channel model."""

    config: TrainConfig
    embeddings: EmbeddingTables
    factors: LatentFactors
    optimizer: AdamState

    @property
    def config_hash(self) -> bytes:
        return config_hash(self.config.model_dump(mode="json"))

    def snapshot(self) -> "LfaGclModel":
        return LfaGclModel(self.config, self.embeddings.copy(), self.factors, self.optimizer.copy())
