import numpy as np
import pytest

from lfagcl.core.exceptions import OptimizerError
from lfagcl.models.model import AdamState
from lfagcl.services.optimizer import adam_update


def _reference_adam(theta, grads, lr, b1=0.9, b2=0.999, eps=1e-8):
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        theta = theta - lr * (m / (1 - b1 ** t)) / (np.sqrt(v / (1 - b2 ** t)) + eps)
    return theta


def test_first_step_moves_by_learning_rate():
    params = {"w": np.array([1.0, -2.0, 0.5])}
    state = AdamState.zeros_like(params)

    adam_update(params, {"w": np.array([3.0, -0.1, 0.0])}, state, lr=0.01)
    np.testing.assert_allclose(params["w"], [0.99, -1.99, 0.5], atol=1e-8)
    assert state.step_count == 1


def test_matches_reference_over_several_steps(rng):
    start = rng.normal(size=(4, 3))
    grads = [rng.normal(size=(4, 3)) for _ in range(5)]
    params = {"w": start.copy()}
    state = AdamState.zeros_like(params)

    for g in grads:
        adam_update(params, {"w": g}, state, lr=1e-3)
    np.testing.assert_allclose(params["w"], _reference_adam(start, grads, 1e-3), rtol=1e-12, atol=1e-15)
    assert state.step_count == 5


def test_updates_in_place():
    table = np.ones((2, 2))
    params = {"w": table}
    adam_update(params, {"w": np.ones((2, 2))}, AdamState.zeros_like(params), lr=0.1)
    assert params["w"] is table
    assert np.all(table < 1.0)


def test_non_finite_update_leaves_everything_untouched():
    params = {"a": np.zeros(2), "b": np.zeros(2)}
    state = AdamState.zeros_like(params)

    with pytest.raises(OptimizerError):
        adam_update(params, {"a": np.ones(2), "b": np.array([np.nan, 1.0])}, state, lr=0.1)
    assert not params["a"].any()
    assert state.step_count == 0
    assert not state.first_moment["a"].any()


def test_shape_mismatch_is_rejected():
    params = {"w": np.zeros((2, 3))}
    with pytest.raises(ValueError):
        adam_update(params, {"w": np.zeros((3, 2))}, AdamState.zeros_like(params), lr=0.1)


def test_zero_gradients_leave_parameters_unchanged(rng):
    start = rng.normal(size=(3, 4))
    params = {"w": start.copy()}
    state = AdamState.zeros_like(params)

    for _ in range(5):
        adam_update(params, {"w": np.zeros((3, 4))}, state, lr=0.1)
    np.testing.assert_array_equal(params["w"], start)
    assert state.step_count == 5


def test_minimizes_a_quadratic():
    params = {"theta": np.array([1.0])}
    state = AdamState.zeros_like(params)

    for _ in range(100):
        adam_update(params, {"theta": 2.0 * params["theta"]}, state, lr=0.1)
    assert abs(params["theta"][0]) < 0.1
