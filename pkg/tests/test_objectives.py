import math

import numpy as np
import pytest

from lfagcl.core.exceptions import NonFiniteLossError
from lfagcl.models.embeddings import EmbeddingTables, Minibatch
from lfagcl.schemas.training import LossBreakdown, TrainConfig
from lfagcl.services.objectives import bpr_loss, infonce_loss, joint_loss_and_gradients, l2_penalty
from lfagcl.services.propagation import main_channel_forward
from lfagcl.services.trainer import sample_minibatch
from tests.conftest import bundle_from_pairs, random_embeddings, random_factors, random_pairs


def _instance(seed: int, **overrides):
    rng = np.random.default_rng(seed)
    graph = bundle_from_pairs(random_pairs(12, 15, 0.25, rng), 12, 15).graph
    factors = random_factors(12, 15, 2, rng)
    emb = random_embeddings(12, 15, 4, rng)
    batch = sample_minibatch(graph, 6, rng)
    settings = dict(embed_dim=4, layers=2, batch_size=6, dropout_rate=0.0, lambda1=0.01, lambda2=1e-6, tau=0.5)
    settings.update(overrides)
    return graph, factors, emb, batch, TrainConfig(**settings)


def _finite_difference(graph, factors, emb, batch, config, step=1e-5):
    def total(user_base, item_base):
        losses, _ = joint_loss_and_gradients(graph, factors, EmbeddingTables(user_base, item_base), batch, config)
        return losses.total

    grads = {}
    for name in ("user_base", "item_base"):
        table = getattr(emb, name)
        grad = np.zeros_like(table)
        for index in np.ndindex(table.shape):
            plus, minus = table.copy(), table.copy()
            plus[index] += step
            minus[index] -= step
            args_plus = (plus, emb.item_base) if name == "user_base" else (emb.user_base, plus)
            args_minus = (minus, emb.item_base) if name == "user_base" else (emb.user_base, minus)
            grad[index] = (total(*args_plus) - total(*args_minus)) / (2 * step)
        grads[name] = grad
    return grads


def _assert_close_relative(analytic, numeric, rel=1e-4, floor=1e-7):
    error = np.abs(analytic - numeric)
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    assert np.all(error <= rel * scale + floor), f"max error {error.max()}"


# === bpr_loss ===

def test_bpr_equal_scores_is_ln2():
    assert bpr_loss(np.array([0.3]), np.array([0.3])) == pytest.approx(math.log(2), abs=1e-12)


def test_bpr_saturates_without_overflow():
    with np.errstate(over="raise"):
        loss = bpr_loss(np.array([50.0]), np.array([0.0]))
    assert 0.0 <= loss < 1e-20


def test_bpr_matches_naive_formula(rng):
    pos, neg = rng.normal(size=3), rng.normal(size=3)
    expected = np.mean(-np.log(1.0 / (1.0 + np.exp(-(pos - neg)))))
    assert bpr_loss(pos, neg) == pytest.approx(expected, rel=1e-12)


# === infonce_loss ===

@pytest.mark.parametrize("n", [2, 8, 64])
def test_infonce_identical_vectors_is_ln_n(n):
    unit = np.tile([0.6, 0.8], (n, 1))
    assert infonce_loss(unit, unit, tau=0.5) == pytest.approx(math.log(n), abs=1e-9)


def test_infonce_two_orthogonal_anchors():
    e = np.eye(2)
    expected = -math.log(math.e ** 2 / (math.e ** 2 + 1))
    assert infonce_loss(e, e, tau=0.5) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.126928, abs=1e-6)


def test_infonce_is_scale_invariant(rng):
    anchor, positive = rng.normal(size=(7, 5)), rng.normal(size=(7, 5))
    assert infonce_loss(10 * anchor, 10 * positive, 0.3) == pytest.approx(infonce_loss(anchor, positive, 0.3), abs=1e-12)


def test_infonce_needs_positive_temperature(rng):
    with pytest.raises(ValueError):
        infonce_loss(rng.normal(size=(3, 2)), rng.normal(size=(3, 2)), tau=0.0)


# === l2_penalty ===

def test_l2_penalty(rng):
    assert l2_penalty(EmbeddingTables(np.zeros((2, 3)), np.zeros((4, 3)))) == 0.0
    assert l2_penalty(EmbeddingTables(np.array([[3.0]]), np.zeros((1, 1)))) == 9.0

    emb = random_embeddings(5, 6, 3, rng)
    expected = sum(x * x for x in emb.user_base.ravel()) + sum(x * x for x in emb.item_base.ravel())
    assert l2_penalty(emb) == pytest.approx(expected, rel=1e-12)


# === joint_loss_and_gradients ===

@pytest.mark.parametrize("seed", range(10))
def test_gradients_match_finite_differences(seed):
    graph, factors, emb, batch, config = _instance(seed)
    _, grads = joint_loss_and_gradients(graph, factors, emb, batch, config)
    numeric = _finite_difference(graph, factors, emb, batch, config)

    _assert_close_relative(grads.user_base, numeric["user_base"])
    _assert_close_relative(grads.item_base, numeric["item_base"])


def test_full_catalog_negatives_gradients_match_finite_differences():
    graph, factors, emb, batch, config = _instance(99, cl_negatives="full", lambda1=0.5)
    _, grads = joint_loss_and_gradients(graph, factors, emb, batch, config)
    numeric = _finite_difference(graph, factors, emb, batch, config)

    _assert_close_relative(grads.user_base, numeric["user_base"])
    _assert_close_relative(grads.item_base, numeric["item_base"])


def test_without_regularizers_gradient_is_pure_bpr():
    graph, factors, emb, batch, config = _instance(3, lambda1=0.0, lambda2=0.0)
    losses, grads = joint_loss_and_gradients(graph, factors, emb, batch, config)

    # dense propagation: [e_u; e_i] = sum_l B^l [E_u; E_i] with B = [[0, A], [A^T, 0]]
    A = graph.normalized.toarray()
    n_users, n_items = A.shape
    B = np.block([[np.zeros((n_users, n_users)), A], [A.T, np.zeros((n_items, n_items))]])
    M = sum(np.linalg.matrix_power(B, l) for l in range(config.layers + 1))
    final = M @ np.vstack([emb.user_base, emb.item_base])
    e_user, e_item = final[:n_users], final[n_users:]

    margin = np.sum(e_user[batch.users] * (e_item[batch.positives] - e_item[batch.negatives]), axis=1)
    weight = -1.0 / (1.0 + np.exp(margin)) / len(margin)
    g_final = np.zeros_like(final)
    for k, (u, p, n) in enumerate(batch.triplets):
        g_final[u] += weight[k] * (e_item[p] - e_item[n])
        g_final[n_users + p] += weight[k] * e_user[u]
        g_final[n_users + n] -= weight[k] * e_user[u]
    expected = M.T @ g_final

    assert losses.total == pytest.approx(losses.bpr, abs=1e-15)
    np.testing.assert_allclose(grads.user_base, expected[:n_users], rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(grads.item_base, expected[n_users:], rtol=1e-9, atol=1e-12)


def test_zero_embeddings_give_ln2_and_finite_gradients():
    graph, factors, _, batch, config = _instance(4)
    emb = EmbeddingTables(np.zeros((12, 4)), np.zeros((15, 4)))

    losses, grads = joint_loss_and_gradients(graph, factors, emb, batch, config)
    assert losses.bpr == pytest.approx(math.log(2), abs=1e-12)
    assert grads.is_finite()


def test_breakdown_total_identity():
    graph, factors, emb, batch, config = _instance(5, lambda1=0.3, lambda2=0.01)
    losses, _ = joint_loss_and_gradients(graph, factors, emb, batch, config)

    expected = losses.bpr + 0.3 * (losses.cl_user + losses.cl_item) + 0.01 * losses.l2
    assert losses.total == pytest.approx(expected, abs=1e-12)
    with pytest.raises(ValueError):
        LossBreakdown(bpr=1.0, cl_user=1.0, cl_item=1.0, l2=1.0, total=5.0, lambda1=1.0, lambda2=1.0, tau=0.5)


def test_single_node_batch_skips_contrastive_term():
    graph, factors, emb, _, config = _instance(6)
    u = int(graph.edge_users[0])
    positive = int(graph.edge_items[0])
    negative = next(i for i in range(graph.n_items) if not graph.has_edges(np.array([u]), np.array([i]))[0])
    batch = Minibatch(users=np.array([u]), positives=np.array([positive]), negatives=np.array([negative]))

    losses, _ = joint_loss_and_gradients(graph, factors, emb, batch, config)
    assert losses.cl_user == 0.0
    assert losses.cl_item > 0.0


def test_dropout_gradients_use_the_same_mask():
    graph, factors, emb, batch, config = _instance(7, dropout_rate=0.3)
    losses_a, grads_a = joint_loss_and_gradients(graph, factors, emb, batch, config, rng=np.random.default_rng(1))
    losses_b, grads_b = joint_loss_and_gradients(graph, factors, emb, batch, config, rng=np.random.default_rng(1))

    assert losses_a == losses_b
    np.testing.assert_array_equal(grads_a.user_base, grads_b.user_base)


@pytest.mark.parametrize("cl_negatives", ["batch", "full"])
def test_loss_ignores_triplet_order(cl_negatives):
    graph, factors, emb, batch, config = _instance(11, dropout_rate=0.3, lambda1=0.2, cl_negatives=cl_negatives)
    order = np.random.default_rng(4).permutation(len(batch))
    shuffled = Minibatch(users=batch.users[order], positives=batch.positives[order], negatives=batch.negatives[order])

    losses_a, grads_a = joint_loss_and_gradients(graph, factors, emb, batch, config, rng=np.random.default_rng(2))
    losses_b, grads_b = joint_loss_and_gradients(graph, factors, emb, shuffled, config, rng=np.random.default_rng(2))

    assert losses_b.total == pytest.approx(losses_a.total, abs=1e-12)
    assert losses_b.bpr == pytest.approx(losses_a.bpr, abs=1e-12)
    assert losses_b.cl_user == losses_a.cl_user
    assert losses_b.cl_item == losses_a.cl_item
    np.testing.assert_allclose(grads_b.user_base, grads_a.user_base, rtol=0, atol=1e-12)
    np.testing.assert_allclose(grads_b.item_base, grads_a.item_base, rtol=0, atol=1e-12)


def test_non_finite_embeddings_raise():
    graph, factors, emb, batch, config = _instance(8)
    emb.user_base[batch.users[0], 0] = np.inf
    with np.errstate(all="ignore"), pytest.raises(NonFiniteLossError):
        joint_loss_and_gradients(graph, factors, emb, batch, config)


def test_main_channel_finals_drive_the_bpr_term():
    graph, factors, emb, batch, config = _instance(9, lambda1=0.0)
    losses, _ = joint_loss_and_gradients(graph, factors, emb, batch, config)
    states = main_channel_forward(graph, emb, config.layers)

    pos = np.sum(states.user_final[batch.users] * states.item_final[batch.positives], axis=1)
    neg = np.sum(states.user_final[batch.users] * states.item_final[batch.negatives], axis=1)
    assert losses.bpr == pytest.approx(bpr_loss(pos, neg), rel=1e-12)
