import numpy as np
import pytest

from lfagcl.core.exceptions import FactorShapeError, LfaDivergenceError
from lfagcl.models.factors import LatentFactors, ObservedEntries
from lfagcl.schemas.lfa import LfaConfig
from lfagcl.services.lfa import als_half_step, lfa_objective, predict_entry, reconstruction_error, train_lfa


def _random_entries(n_users: int, n_items: int, density: float, rng) -> ObservedEntries:
    mask = rng.random((n_users, n_items)) < density
    mask[np.arange(n_users), rng.integers(0, n_items, size=n_users)] = True
    mask[rng.integers(0, n_users, size=n_items), np.arange(n_items)] = True
    return ObservedEntries.from_dense(rng.uniform(1, 5, size=(n_users, n_items)), mask)


# === lfa_objective ===

def test_objective_of_zero_factors_counts_entries(rng):
    entries = _random_entries(6, 7, 0.4, rng)
    entries = ObservedEntries(entries.users, entries.items, np.ones(len(entries)), 6, 7)
    factors = LatentFactors(np.zeros((6, 2)), np.zeros((7, 2)), lfa_lambda=3.0)

    assert lfa_objective(factors, entries) == pytest.approx(len(entries))


def test_objective_is_zero_for_exact_rank_one():
    entries = ObservedEntries.from_dense(np.array([[2.0, 4.0], [1.0, 2.0]]))
    factors = LatentFactors(np.array([[2.0], [1.0]]), np.array([[1.0], [2.0]]), lfa_lambda=0.0)

    assert lfa_objective(factors, entries) == 0.0


def test_objective_matches_double_loop(rng):
    entries = _random_entries(8, 6, 0.5, rng)
    factors = LatentFactors(rng.normal(size=(8, 3)), rng.normal(size=(6, 3)), lfa_lambda=0.3)
    observed = {(int(u), int(i)): r for u, i, r in zip(entries.users, entries.items, entries.values)}

    expected = 0.0
    for u in range(8):
        for i in range(6):
            if (u, i) in observed:
                p, q = factors.P[u], factors.Q[i]
                expected += (observed[u, i] - p @ q) ** 2 + 0.3 * (p @ p + q @ q)

    assert lfa_objective(factors, entries) == pytest.approx(expected, rel=1e-12)


# === als_half_step ===

def test_half_step_scalar_least_squares():
    entries = ObservedEntries.from_dense(np.array([[3.0]]))
    factors = LatentFactors(np.array([[0.0]]), np.array([[2.0]]), lfa_lambda=0.0)

    updated = als_half_step(factors, entries, "user")
    assert updated.P[0, 0] == pytest.approx(1.5)
    np.testing.assert_array_equal(updated.Q, factors.Q)


def test_half_step_with_huge_ridge_shrinks_rows(rng):
    entries = _random_entries(5, 6, 0.5, rng)
    factors = LatentFactors(rng.normal(size=(5, 2)), rng.normal(size=(6, 2)), lfa_lambda=1e12)

    updated = als_half_step(factors, entries, "item")
    assert np.abs(updated.Q).max() < 1e-9


def test_half_step_matches_dense_solver(rng):
    entries = _random_entries(10, 12, 0.4, rng)
    lam = 0.2
    factors = LatentFactors(rng.normal(size=(10, 3)), rng.normal(size=(12, 3)), lfa_lambda=lam)

    updated = als_half_step(factors, entries, "user")
    for u in range(10):
        rows = entries.users == u
        Q = factors.Q[entries.items[rows]]
        r = entries.values[rows]
        normal = Q.T @ Q + lam * rows.sum() * np.eye(3)
        expected = np.linalg.lstsq(normal, Q.T @ r, rcond=None)[0]
        np.testing.assert_allclose(updated.P[u], expected, rtol=1e-9, atol=1e-9)


def test_half_step_keeps_unobserved_rows(rng):
    entries = ObservedEntries(np.array([0]), np.array([0]), np.array([1.0]), 3, 2)
    factors = LatentFactors(rng.normal(size=(3, 1)), rng.normal(size=(2, 1)), lfa_lambda=0.1)

    updated = als_half_step(factors, entries, "user")
    np.testing.assert_array_equal(updated.P[1:], factors.P[1:])


def test_half_step_survives_singular_system_with_large_factors():
    # rank-one item factors at 1e5 scale; the 1e-10 jitter vanishes next to q.q ~ 5e10
    entries = ObservedEntries.from_dense(np.array([[1.0, 1.0], [2.0, 4.0]]))
    Q = np.array([[1e5, 1e5], [2e5, 2e5]])
    factors = LatentFactors(np.zeros((2, 2)), Q, lfa_lambda=0.0)

    updated = als_half_step(factors, entries, "user")
    assert updated.is_finite()
    # least-squares fit of r = x * (1, 2) per row, minimum-norm split across the two columns
    np.testing.assert_allclose(updated.P @ Q[0], [0.6, 2.0], rtol=1e-9)
    np.testing.assert_allclose(updated.P[:, 0], updated.P[:, 1], rtol=1e-9)


def test_half_step_rejects_unknown_side(rng):
    entries = _random_entries(3, 3, 0.5, rng)
    factors = LatentFactors(np.ones((3, 1)), np.ones((3, 1)), lfa_lambda=0.1)
    with pytest.raises(ValueError):
        als_half_step(factors, entries, "both")


# === train_lfa ===

def test_rank_one_matrix_is_recovered():
    a, b = np.array([1.0, 2.0, 3.0, 4.0]), np.array([0.5, 1.0, -1.0, 2.0])
    entries = ObservedEntries.from_dense(np.outer(a, b))
    config = LfaConfig(f=1, lfa_lambda=0.0, max_iters=50, rel_tol=1e-12, seed=0)

    factors = train_lfa(entries, config)
    assert lfa_objective(factors, entries) < 1e-8
    assert reconstruction_error(factors, entries) < 1e-4


@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
def test_objective_never_increases(seed):
    rng = np.random.default_rng(seed)
    entries = _random_entries(15, 20, 0.3, rng)
    config = LfaConfig(f=3, lfa_lambda=0.1, max_iters=20, rel_tol=1e-300, seed=seed)

    trace = []
    train_lfa(entries, config, trace=trace)
    assert len(trace) > 2
    for before, after in zip(trace, trace[1:]):
        assert after <= before + 1e-9


def test_planted_low_rank_structure_is_recovered():
    rng = np.random.default_rng(42)
    P_true, Q_true = rng.normal(size=(30, 3)), rng.normal(size=(40, 3))
    noise = 0.01 * rng.normal(size=(30, 40))
    mask = rng.random((30, 40)) < 0.6
    entries = ObservedEntries.from_dense(P_true @ Q_true.T + noise, mask)
    noise_floor = np.linalg.norm(noise[mask]) / np.linalg.norm(entries.values)

    config = LfaConfig(f=3, lfa_lambda=1e-4, max_iters=300, rel_tol=1e-12, init_scale=0.1, seed=0)
    factors = train_lfa(entries, config)
    assert reconstruction_error(factors, entries) < 1.5 * noise_floor


def test_converged_factors_are_stationary():
    rng = np.random.default_rng(3)
    entries = _random_entries(15, 12, 0.4, rng)
    config = LfaConfig(f=2, lfa_lambda=0.1, max_iters=10000, rel_tol=1e-15, init_scale=0.5, seed=3)
    factors = train_lfa(entries, config)

    step = 1e-6
    for side, table in (("user", factors.P), ("item", factors.Q)):
        for row in range(table.shape[0]):
            grad = np.zeros(table.shape[1])
            for col in range(table.shape[1]):
                plus, minus = table.copy(), table.copy()
                plus[row, col] += step
                minus[row, col] -= step
                grad[col] = (
                    lfa_objective(factors.with_side(side, plus), entries)
                    - lfa_objective(factors.with_side(side, minus), entries)
                ) / (2 * step)
            assert np.linalg.norm(grad) < 1e-5 * (1 + np.linalg.norm(table[row])), f"{side} row {row}"


def test_sgd_solver_lowers_the_objective(rng):
    entries = _random_entries(20, 25, 0.3, rng)
    config = LfaConfig(f=3, lfa_lambda=0.01, max_iters=30, solver="sgd", sgd_learning_rate=0.01,
                       sgd_batch_size=16, init_scale=0.1)

    trace = []
    train_lfa(entries, config, trace=trace)
    assert trace[-1] < 0.5 * trace[0]


def test_training_is_seeded(rng):
    entries = _random_entries(10, 10, 0.4, rng)
    config = LfaConfig(f=2, seed=5, max_iters=5)
    a, b = train_lfa(entries, config), train_lfa(entries, config)
    np.testing.assert_array_equal(a.P, b.P)
    np.testing.assert_array_equal(a.Q, b.Q)


def test_factor_dimension_must_stay_below_graph_size(rng):
    entries = _random_entries(4, 6, 0.5, rng)
    with pytest.raises(FactorShapeError):
        train_lfa(entries, LfaConfig(f=4))


def test_divergence_reports_diagnostics(rng):
    entries = _random_entries(10, 10, 0.5, rng)
    config = LfaConfig(f=2, solver="sgd", sgd_learning_rate=1e3, sgd_batch_size=4, init_scale=1.0)

    with np.errstate(all="ignore"), pytest.raises(LfaDivergenceError) as info:
        train_lfa(entries, config)
    assert "iteration" in info.value.diagnostics


# === predict_entry ===

def test_predict_entry_is_a_dot_product(rng):
    orthogonal = LatentFactors(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]), lfa_lambda=0.0)
    assert predict_entry(orthogonal, 0, 0) == 0.0

    ones = LatentFactors(np.ones((1, 3)), np.ones((1, 3)), lfa_lambda=0.0)
    assert predict_entry(ones, 0, 0) == 3.0

    factors = LatentFactors(rng.normal(size=(5, 4)), rng.normal(size=(7, 4)), lfa_lambda=0.0)
    dense = factors.P @ factors.Q.T
    for u in range(5):
        for i in range(7):
            assert predict_entry(factors, u, i) == pytest.approx(dense[u, i], abs=1e-12)


def test_predict_entry_rejects_out_of_range():
    factors = LatentFactors(np.ones((2, 1)), np.ones((3, 1)), lfa_lambda=0.0)
    with pytest.raises(IndexError):
        predict_entry(factors, 2, 0)
