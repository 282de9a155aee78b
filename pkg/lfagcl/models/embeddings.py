"""
Embedding Models
================
Trainable layer-0 tables, the per-layer states of the main channel, the
augmented-channel outputs and BPR minibatches.
"""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np


@dataclass
class EmbeddingTables:
    """Base embeddings E(u) (|U| x d) and E(i) (|I| x d); the only trained parameters."""

    user_base: np.ndarray
    item_base: np.ndarray

    @property
    def d(self) -> int:
        return self.user_base.shape[1]

    def as_params(self) -> dict[str, np.ndarray]:
        return {"user_base": self.user_base, "item_base": self.item_base}

    def copy(self) -> "EmbeddingTables":
        return EmbeddingTables(self.user_base.copy(), self.item_base.copy())

    def scaled(self, alpha: float) -> "EmbeddingTables":
        return EmbeddingTables(alpha * self.user_base, alpha * self.item_base)

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.user_base).all() and np.isfinite(self.item_base).all())


@dataclass(frozen=True)
class LayerStates:
    """
    Main-channel states: L+1 matrices per side (layer 0 is the base table),
    the layer-sum readouts and the edge mask realized in this pass.
    """

    user_layers: List[np.ndarray]
    item_layers: List[np.ndarray]
    user_final: np.ndarray
    item_final: np.ndarray
    dropout_mask: Optional[np.ndarray] = None

    @property
    def n_layers(self) -> int:
        return len(self.user_layers) - 1


@dataclass(frozen=True)
class AugmentedStates:
    """Final augmented-view representations h(u), h(i)."""

    user_aug: np.ndarray
    item_aug: np.ndarray


@dataclass(frozen=True)
class Minibatch:
    """BPR triplets (u, i+, i-) with the deduplicated users and items they touch."""

    users: np.ndarray
    positives: np.ndarray
    negatives: np.ndarray
    skipped: int = 0

    def __len__(self) -> int:
        return len(self.users)

    @property
    def triplets(self) -> list[tuple[int, int, int]]:
        return list(zip(self.users.tolist(), self.positives.tolist(), self.negatives.tolist()))

    @property
    def batch_users(self) -> np.ndarray:
        return np.unique(self.users)

    @property
    def batch_items(self) -> np.ndarray:
        return np.unique(np.concatenate([self.positives, self.negatives]))
