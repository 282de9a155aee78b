"""
Adam Optimizer
==============
Bias-corrected Adam over named numpy parameter tables.

    m <- b1 m + (1 - b1) g
    v <- b2 v + (1 - b2) g^2
    theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
"""

import logging
from typing import Dict, Tuple

import numpy as np

from lfagcl.core.exceptions import OptimizerError
from lfagcl.models.model import AdamState

logger = logging.getLogger(__name__)


def adam_update(
    params: Dict[str, np.ndarray],
    grads: Dict[str, np.ndarray],
    state: AdamState,
    lr: float,
) -> Tuple[Dict[str, np.ndarray], AdamState]:
    """
    Apply one Adam step in place and return (params, state).

    Nothing is modified when any update would be non-finite.
    """
    for name, grad in grads.items():
        if name not in params:
            raise KeyError(f"gradient for unknown parameter '{name}'")
        if grad.shape != params[name].shape:
            raise ValueError(f"gradient shape {grad.shape} != parameter shape {params[name].shape} for '{name}'")

    t = state.step_count + 1
    bias1 = 1.0 - state.beta1 ** t
    bias2 = 1.0 - state.beta2 ** t

    pending = {}
    for name, grad in grads.items():
        m = state.first_moment.get(name)
        v = state.second_moment.get(name)
        if m is None:
            m = np.zeros_like(params[name])
            v = np.zeros_like(params[name])

        m_new = state.beta1 * m + (1.0 - state.beta1) * grad
        v_new = state.beta2 * v + (1.0 - state.beta2) * (grad * grad)
        step = lr * (m_new / bias1) / (np.sqrt(v_new / bias2) + state.epsilon)

        if not np.isfinite(step).all():
            logger.error(f"Non-finite Adam update for '{name}' at step {t}")
            raise OptimizerError(f"non-finite Adam update for '{name}' at step {t}")
        pending[name] = (m_new, v_new, step)

    for name, (m_new, v_new, step) in pending.items():
        state.first_moment[name] = m_new
        state.second_moment[name] = v_new
        params[name] -= step
    state.step_count = t
    return params, state
