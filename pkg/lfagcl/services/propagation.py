"""
Propagation Channels
====================
Main channel: L layers of LightGCN propagation over the (edge-dropped)
normalized adjacency A_tilde, read out as the unweighted layer sum.

Augmented channel: one hop over R_hat = P Q^T applied to every main-channel
layer, computed as P (Q^T X) so the dense |U| x |I| matrix never exists.
"""

import logging
from typing import Literal, Optional

import numpy as np
import scipy.sparse as sp

from lfagcl.models.embeddings import AugmentedStates, EmbeddingTables, LayerStates
from lfagcl.models.factors import LatentFactors
from lfagcl.models.interactions import InteractionGraph

logger = logging.getLogger(__name__)

Mode = Literal["train", "eval"]


def sample_edge_mask(nnz: int, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Keep each stored entry independently with probability 1 - rate."""
    return rng.random(nnz) >= rate


def apply_edge_mask(normalized: sp.csr_matrix, keep: np.ndarray, rate: float) -> sp.csr_matrix:
    """Drop masked entries and rescale survivors by 1 / (1 - rate)."""
    coo = normalized.tocoo()
    dropped = sp.csr_matrix(
        (coo.data[keep] / (1.0 - rate), (coo.row[keep], coo.col[keep])), shape=normalized.shape
    )
    dropped.sort_indices()
    return dropped


def edge_dropout(normalized: sp.csr_matrix, rate: float, rng: Optional[np.random.Generator] = None) -> sp.csr_matrix:
    """
    Inverted edge dropout over the stored entries of A_tilde.

    rate=0 returns the input object itself.
    """
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
    if rate == 0.0:
        return normalized
    if rng is None:
        raise ValueError("edge dropout with rate > 0 needs a random generator")
    return apply_edge_mask(normalized, sample_edge_mask(normalized.nnz, rate, rng), rate)


def main_channel_forward(
    graph: InteractionGraph,
    emb: EmbeddingTables,
    layers: int,
    dropout_rate: float = 0.0,
    mode: Mode = "eval",
    rng: Optional[np.random.Generator] = None,
) -> LayerStates:
    """
    user layer l = A_d  . item layer (l-1)
    item layer l = A_d^T . user layer (l-1)

    A_d is one dropout realization shared by both directions and all layers of
    this pass; eval mode always uses A_tilde itself.
    """
    if layers < 1:
        raise ValueError(f"need at least one layer, got {layers}")

    mask = None
    adjacency = graph.normalized
    if mode == "train" and dropout_rate > 0.0:
        if rng is None:
            raise ValueError("training-mode dropout needs a random generator")
        mask = sample_edge_mask(adjacency.nnz, dropout_rate, rng)
        adjacency = apply_edge_mask(adjacency, mask, dropout_rate)
    transposed = adjacency.T.tocsr()

    user_layers = [emb.user_base]
    item_layers = [emb.item_base]
    for _ in range(layers):
        next_user = np.asarray(adjacency @ item_layers[-1])
        next_item = np.asarray(transposed @ user_layers[-1])
        user_layers.append(next_user)
        item_layers.append(next_item)

    return LayerStates(
        user_layers=user_layers,
        item_layers=item_layers,
        user_final=np.sum(user_layers, axis=0),
        item_final=np.sum(item_layers, axis=0),
        dropout_mask=mask,
    )


def predict_scores(user_final: np.ndarray, item_final: np.ndarray, users, items=None) -> np.ndarray | float:
    """
    Inner-product preference scores.

    With `items` given, scores the (users[k], items[k]) pairs (or a single
    pair for scalar indices); without it, returns full rows over all items.
    """
    if items is None:
        return user_final[users] @ item_final.T
    if np.isscalar(users) and np.isscalar(items):
        return float(user_final[users] @ item_final[items])
    return np.einsum("ij,ij->i", user_final[users], item_final[items])


def augmented_channel_forward(factors: LatentFactors, layer_states: LayerStates) -> AugmentedStates:
    """
    h(u) = sum_l P (Q^T . item layer l),  h(i) = sum_l Q (P^T . user layer l).

    Each term costs O((|U| + |I|) f d); P Q^T is never formed.
    """
    P, Q = factors.P, factors.Q
    user_aug = np.zeros((P.shape[0], layer_states.item_layers[0].shape[1]))
    item_aug = np.zeros((Q.shape[0], layer_states.user_layers[0].shape[1]))

    for item_layer, user_layer in zip(layer_states.item_layers, layer_states.user_layers):
        user_aug += P @ (Q.T @ item_layer)
        item_aug += Q @ (P.T @ user_layer)

    return AugmentedStates(user_aug=user_aug, item_aug=item_aug)
