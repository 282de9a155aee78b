from lfagcl.models.interactions import (
    DatasetBundle,
    DatasetSplit,
    EdgeList,
    InteractionGraph,
    RawInteractions,
    SparsityGroups,
)
from lfagcl.models.factors import LatentFactors, ObservedEntries
from lfagcl.models.embeddings import AugmentedStates, EmbeddingTables, LayerStates, Minibatch
from lfagcl.models.model import AdamState, LfaGclModel

__all__ = [
    "RawInteractions", "EdgeList", "DatasetSplit", "InteractionGraph",
    "SparsityGroups", "DatasetBundle",
    "LatentFactors", "ObservedEntries",
    "EmbeddingTables", "LayerStates", "AugmentedStates", "Minibatch",
    "AdamState", "LfaGclModel",
]
