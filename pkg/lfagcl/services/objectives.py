"""
Joint Objective
===============
Loss = BPR + lambda1 * (InfoNCE_users + InfoNCE_items) + lambda2 * |Theta|^2

Theta is the pair of base embedding tables; the LFA factors stay frozen.
Batch terms are means over triplets / batch nodes. Gradients are exact and
computed by hand in reverse order through:

    sigmoid / softmax / cosine  ->  layer-sum readouts
    ->  factored R_hat hops     ->  sparse A_tilde hops  ->  base tables

Every propagation step is linear, so its adjoint is the transposed product.
"""

import logging
from typing import Optional, Tuple

import numpy as np
from scipy.special import expit, logsumexp

from lfagcl.core.exceptions import NonFiniteLossError
from lfagcl.models.embeddings import EmbeddingTables, Minibatch
from lfagcl.models.factors import LatentFactors
from lfagcl.models.interactions import InteractionGraph
from lfagcl.schemas.training import LossBreakdown, TrainConfig
from lfagcl.services.propagation import apply_edge_mask, augmented_channel_forward, main_channel_forward

logger = logging.getLogger(__name__)

NORM_EPS = 1e-12


def bpr_loss(pos_scores: np.ndarray, neg_scores: np.ndarray) -> float:
    """Mean of -log sigmoid(y+ - y-), evaluated as softplus(-(y+ - y-))."""
    margin = np.asarray(pos_scores, dtype=np.float64) - np.asarray(neg_scores, dtype=np.float64)
    return float(np.mean(np.logaddexp(0.0, -margin)))


def l2_penalty(emb: EmbeddingTables) -> float:
    """Sum of squared entries of both base tables."""
    return float(np.sum(emb.user_base ** 2) + np.sum(emb.item_base ** 2))


def infonce_loss(anchor: np.ndarray, positive: np.ndarray, tau: float) -> float:
    """
    In-batch InfoNCE with cosine similarity.

    Row k of `anchor` is paired with row k of `positive`; every row of
    `positive` (row k included) appears in the denominator.
    """
    loss, _, _ = infonce_with_grad(anchor, positive, tau)
    return loss


def infonce_with_grad(
    anchor: np.ndarray,
    candidates: np.ndarray,
    tau: float,
    positive_index: Optional[np.ndarray] = None,
) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    InfoNCE value and its gradients w.r.t. `anchor` and `candidates`.

    Anchor k's positive is candidates[positive_index[k]] (default: row k).
    """
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    n = anchor.shape[0]
    if positive_index is None:
        positive_index = np.arange(n)
    if n < 1 or candidates.shape[0] < 2:
        raise ValueError("InfoNCE needs at least two candidates")

    a_unit, a_norm, a_zero = _normalize(anchor)
    c_unit, c_norm, c_zero = _normalize(candidates)
    if a_zero.any() or c_zero.any():
        logger.warning(f"{int(a_zero.sum() + c_zero.sum())} zero-norm vectors; their cosine is taken as 0")

    logits = (a_unit @ c_unit.T) / tau
    rows = np.arange(n)
    log_norm = logsumexp(logits, axis=1)
    loss = float(np.mean(log_norm - logits[rows, positive_index]))

    d_logits = np.exp(logits - log_norm[:, None])
    d_logits[rows, positive_index] -= 1.0
    d_logits /= n

    d_a_unit = (d_logits @ c_unit) / tau
    d_c_unit = (d_logits.T @ a_unit) / tau
    return loss, _normalize_backward(d_a_unit, a_unit, a_norm, a_zero), _normalize_backward(d_c_unit, c_unit, c_norm, c_zero)


def joint_loss_and_gradients(
    graph: InteractionGraph,
    factors: LatentFactors,
    emb: EmbeddingTables,
    batch: Minibatch,
    config: TrainConfig,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[LossBreakdown, EmbeddingTables]:
    """
    One dual-channel forward (single dropout mask), all loss terms on the
    batch, and the gradient of the total w.r.t. user_base and item_base.
    """
    lambda1, lambda2, tau = config.lambda1, config.lambda2, config.tau

    states = main_channel_forward(graph, emb, config.layers, config.dropout_rate, mode="train", rng=rng)
    aug = augmented_channel_forward(factors, states)
    e_user, e_item = states.user_final, states.item_final

    grad_e_user = np.zeros_like(e_user)
    grad_e_item = np.zeros_like(e_item)
    grad_h_user = np.zeros_like(aug.user_aug)
    grad_h_item = np.zeros_like(aug.item_aug)

    # === BPR ===
    users, positives, negatives = batch.users, batch.positives, batch.negatives
    item_diff = e_item[positives] - e_item[negatives]
    margin = np.einsum("ij,ij->i", e_user[users], item_diff)
    bpr = float(np.mean(np.logaddexp(0.0, -margin)))
    _check_finite("bpr", bpr)

    d_margin = -expit(-margin) / len(margin)
    np.add.at(grad_e_user, users, d_margin[:, None] * item_diff)
    np.add.at(grad_e_item, positives, d_margin[:, None] * e_user[users])
    np.add.at(grad_e_item, negatives, -d_margin[:, None] * e_user[users])

    # === Contrastive, one InfoNCE per node type ===
    cl_user = _contrastive_term(e_user, aug.user_aug, batch.batch_users, tau, lambda1,
                                config.cl_negatives, grad_e_user, grad_h_user)
    _check_finite("cl_user", cl_user)
    cl_item = _contrastive_term(e_item, aug.item_aug, batch.batch_items, tau, lambda1,
                                config.cl_negatives, grad_e_item, grad_h_item)
    _check_finite("cl_item", cl_item)

    l2 = l2_penalty(emb)
    _check_finite("l2", l2)

    # === Backward through the channels ===
    # every layer l receives the same readout gradient from e and h
    P, Q = factors.P, factors.Q
    layer_grad_user = grad_e_user + P @ (Q.T @ grad_h_item)
    layer_grad_item = grad_e_item + Q @ (P.T @ grad_h_user)

    adjacency = graph.normalized
    if states.dropout_mask is not None:
        adjacency = apply_edge_mask(adjacency, states.dropout_mask, config.dropout_rate)
    transposed = adjacency.T.tocsr()

    adj_user, adj_item = layer_grad_user, layer_grad_item
    for _ in range(config.layers):
        adj_user, adj_item = (
            layer_grad_user + np.asarray(adjacency @ adj_item),
            layer_grad_item + np.asarray(transposed @ adj_user),
        )

    grads = EmbeddingTables(
        user_base=adj_user + 2.0 * lambda2 * emb.user_base,
        item_base=adj_item + 2.0 * lambda2 * emb.item_base,
    )
    if not grads.is_finite():
        logger.error("Non-finite gradient in joint loss")
        raise NonFiniteLossError("gradient")

    breakdown = LossBreakdown.compose(bpr=bpr, cl_user=cl_user, cl_item=cl_item, l2=l2,
                                      lambda1=lambda1, lambda2=lambda2, tau=tau)
    _check_finite("total", breakdown.total)
    return breakdown, grads


def _contrastive_term(
    main: np.ndarray,
    augmented: np.ndarray,
    nodes: np.ndarray,
    tau: float,
    weight: float,
    negatives: str,
    grad_main: np.ndarray,
    grad_aug: np.ndarray,
) -> float:
    """Adds weight * dInfoNCE into the gradient buffers and returns the loss value."""
    if negatives == "full":
        if augmented.shape[0] < 2 or len(nodes) == 0:
            return 0.0
        loss, d_anchor, d_candidates = infonce_with_grad(main[nodes], augmented, tau, positive_index=nodes)
        grad_aug += weight * d_candidates
    else:
        if len(nodes) < 2:
            logger.debug("Contrastive term skipped: fewer than two batch nodes")
            return 0.0
        loss, d_anchor, d_candidates = infonce_with_grad(main[nodes], augmented[nodes], tau)
        grad_aug[nodes] += weight * d_candidates
    # nodes are unique, so fancy-index accumulation is safe
    grad_main[nodes] += weight * d_anchor
    return loss


def _normalize(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    norms = np.linalg.norm(x, axis=1)
    zero = norms < NORM_EPS
    safe = np.where(zero, 1.0, norms)
    unit = x / safe[:, None]
    unit[zero] = 0.0
    return unit, safe, zero


def _normalize_backward(grad_unit: np.ndarray, unit: np.ndarray, norms: np.ndarray, zero: np.ndarray) -> np.ndarray:
    grad = (grad_unit - unit * np.einsum("ij,ij->i", unit, grad_unit)[:, None]) / norms[:, None]
    grad[zero] = 0.0
    return grad


def _check_finite(term: str, value: float) -> None:
    if not np.isfinite(value):
        logger.error(f"Non-finite loss term: {term}")
        raise NonFiniteLossError(term)
