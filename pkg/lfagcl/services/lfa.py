"""
Latent Factor Analysis
======================
Pretrains the factor pair (P, Q) on the observed train entries.

Objective, summed over observed entries (u, i) with value r_ui:

    (r_ui - p_u . q_i)^2 + lambda * (|p_u|^2 + |q_i|^2)

The ridge term sits inside the sum, so a row observed n times carries n
copies of it. Minimizing over p_u with Q fixed gives

    p_u = (sum_i q_i q_i^T + lambda * n_u * I)^-1  sum_i r_ui q_i

which is what one ALS half-step solves for every observed row at once.
"""

import logging
from typing import List, Literal, Optional

import numpy as np
from tqdm import tqdm

from lfagcl.core.exceptions import DataFormatError, FactorShapeError, LfaDivergenceError
from lfagcl.models.factors import LatentFactors, ObservedEntries
from lfagcl.schemas.lfa import LfaConfig

logger = logging.getLogger(__name__)

Side = Literal["user", "item"]
RIDGE_JITTER = 1e-10


def lfa_objective(factors: LatentFactors, entries: ObservedEntries) -> float:
    """Sum over observed entries of squared residual plus per-entry ridge."""
    p_rows = factors.P[entries.users]
    q_rows = factors.Q[entries.items]
    residual = entries.values - np.einsum("ij,ij->i", p_rows, q_rows)
    ridge = np.einsum("ij,ij->i", p_rows, p_rows) + np.einsum("ij,ij->i", q_rows, q_rows)
    return float(residual @ residual + factors.lfa_lambda * ridge.sum())


def als_half_step(factors: LatentFactors, entries: ObservedEntries, side: Side) -> LatentFactors:
    """
    Exact block minimization of the objective over one side's rows.

    Rows without observations keep their current values. Every row solve
    reads only the fixed side, so the result does not depend on row order.
    """
    if side == "user":
        pattern, observed, fixed, current, counts = (
            entries.user_pattern, entries.by_user, factors.Q, factors.P, entries.user_counts)
    elif side == "item":
        pattern, observed, fixed, current, counts = (
            entries.item_pattern, entries.by_item, factors.P, factors.Q, entries.item_counts)
    else:
        raise ValueError(f"side must be 'user' or 'item', got {side!r}")

    if not np.isfinite(fixed).all():
        raise LfaDivergenceError(f"fixed {'item' if side == 'user' else 'user'} factors are not finite")

    f = fixed.shape[1]
    eye = np.eye(f)

    # Gram matrices sum_i q_i q_i^T for all rows through one sparse product
    outer = (fixed[:, :, None] * fixed[:, None, :]).reshape(fixed.shape[0], f * f)
    gram = np.asarray(pattern @ outer).reshape(-1, f, f)
    rhs = np.asarray(observed @ fixed)

    rows = np.flatnonzero(counts > 0)
    normal = gram[rows] + factors.lfa_lambda * counts[rows, None, None] * eye

    sign, _ = np.linalg.slogdet(normal)
    singular = sign <= 0
    if singular.any():
        logger.warning(f"{int(singular.sum())} singular {side} normal matrices; adding ridge jitter {RIDGE_JITTER}")
        normal[singular] += RIDGE_JITTER * eye

    updated = current.copy()
    if len(rows):
        updated[rows] = _solve_rows(normal, rhs[rows], side)
    return factors.with_side(side, updated)


def _solve_rows(normal: np.ndarray, rhs: np.ndarray, side: Side) -> np.ndarray:
    """Batched normal-equation solve; minimum-norm least squares where a matrix stays singular."""
    try:
        return np.linalg.solve(normal, rhs[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError:
        # jitter is lost in rounding once entries reach ~1e6 times its size
        logger.warning(f"Singular {side} normal matrix survived the jitter; falling back to least squares")
        return np.stack([np.linalg.lstsq(a, b, rcond=None)[0] for a, b in zip(normal, rhs)])


def sgd_epoch(factors: LatentFactors, entries: ObservedEntries, learning_rate: float,
              batch_size: int, rng: np.random.Generator) -> LatentFactors:
    """One shuffled pass of minibatch gradient descent on the same objective."""
    P, Q = factors.P.copy(), factors.Q.copy()
    lam = factors.lfa_lambda
    order = rng.permutation(len(entries))

    for start in range(0, len(order), batch_size):
        batch = order[start:start + batch_size]
        users, items = entries.users[batch], entries.items[batch]
        p_rows, q_rows = P[users], Q[items]
        error = entries.values[batch] - np.einsum("ij,ij->i", p_rows, q_rows)

        grad_p = -2.0 * error[:, None] * q_rows + 2.0 * lam * p_rows
        grad_q = -2.0 * error[:, None] * p_rows + 2.0 * lam * q_rows
        np.add.at(P, users, -learning_rate * grad_p)
        np.add.at(Q, items, -learning_rate * grad_q)

    return LatentFactors(P=P, Q=Q, lfa_lambda=lam)


def train_lfa(entries: ObservedEntries, config: LfaConfig, trace: Optional[List[float]] = None) -> LatentFactors:
    """
    Fit (P, Q) from a seeded uniform start.

    ALS alternates user and item half-steps; SGD runs shuffled epochs. Both
    stop after `max_iters` iterations or once the relative objective decrease
    over an iteration drops below `rel_tol`. When `trace` is given it receives
    the initial objective and the objective after every half-step (ALS) or
    epoch (SGD).
    """
    if len(entries) == 0:
        raise DataFormatError("no observed entries to fit")

    smallest = min(entries.n_users, entries.n_items)
    if config.f >= smallest:
        raise FactorShapeError(f"f={config.f} must be below min(|U|, |I|)={smallest}")
    if config.f > smallest / 2:
        logger.warning(f"f={config.f} is more than half of min(|U|, |I|)={smallest}")

    rng = np.random.default_rng(config.seed)
    scale = config.init_scale
    factors = LatentFactors(
        P=rng.uniform(-scale, scale, size=(entries.n_users, config.f)),
        Q=rng.uniform(-scale, scale, size=(entries.n_items, config.f)),
        lfa_lambda=config.lfa_lambda,
    )

    objective = _checked_objective(factors, entries, iteration=0, step="init")
    if trace is not None:
        trace.append(objective)
    logger.info(f"LFA start: solver={config.solver} f={config.f} lambda={config.lfa_lambda} objective={objective:.6g}")

    show_progress = logger.isEnabledFor(logging.DEBUG)
    for iteration in tqdm(range(1, config.max_iters + 1), desc="LFA", disable=not show_progress):
        previous = objective

        if config.solver == "als":
            for side in ("user", "item"):
                factors = als_half_step(factors, entries, side)
                objective = _checked_objective(factors, entries, iteration, side)
                if trace is not None:
                    trace.append(objective)
        else:
            factors = sgd_epoch(factors, entries, config.sgd_learning_rate, config.sgd_batch_size, rng)
            objective = _checked_objective(factors, entries, iteration, "sgd")
            if trace is not None:
                trace.append(objective)

        change = abs(previous - objective) / max(abs(previous), np.finfo(float).tiny)
        logger.debug(f"LFA iteration {iteration}: objective={objective:.6g} relative change={change:.3g}")
        if change < config.rel_tol:
            break

    logger.info(f"LFA done after {iteration} iterations: objective={objective:.6g}")
    return factors


def predict_entry(factors: LatentFactors, u: int, i: int) -> float:
    """r_hat_ui = p_u . q_i without forming P Q^T."""
    if not 0 <= u < factors.n_users or not 0 <= i < factors.n_items:
        raise IndexError(f"({u}, {i}) outside {factors.n_users} x {factors.n_items}")
    return float(factors.P[u] @ factors.Q[i])


def reconstruction_error(factors: LatentFactors, entries: ObservedEntries) -> float:
    """Relative error |r - r_hat| / |r| over the observed entries."""
    predicted = np.einsum("ij,ij->i", factors.P[entries.users], factors.Q[entries.items])
    denominator = float(np.linalg.norm(entries.values))
    return float(np.linalg.norm(entries.values - predicted)) / max(denominator, np.finfo(float).tiny)


def _checked_objective(factors: LatentFactors, entries: ObservedEntries, iteration: int, step: str) -> float:
    objective = lfa_objective(factors, entries)
    if not np.isfinite(objective) or not factors.is_finite():
        diagnostics = {
            "iteration": iteration,
            "step": step,
            "objective": objective,
            "P_max_abs": float(np.nanmax(np.abs(factors.P))) if factors.P.size else 0.0,
            "Q_max_abs": float(np.nanmax(np.abs(factors.Q))) if factors.Q.size else 0.0,
            "P_nonfinite": int((~np.isfinite(factors.P)).sum()),
            "Q_nonfinite": int((~np.isfinite(factors.Q)).sum()),
        }
        logger.error(f"LFA objective diverged: {diagnostics}")
        raise LfaDivergenceError(f"LFA objective became non-finite at iteration {iteration} ({step})", diagnostics)
    return objective
