"""
Joint Training
==============
Negative-sampled BPR minibatches, Adam updates on the base embeddings,
validation every `validate_every` epochs and early stopping once the
monitored metric (validation Recall@first-K) fails to beat its best
`patience` validations in a row. The best-validation snapshot is returned.
"""

import logging
import math
import time
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from tqdm import tqdm

from lfagcl.core.exceptions import DimensionMismatchError, NonFiniteLossError, OptimizerError, TrainingDivergedError
from lfagcl.models.embeddings import EmbeddingTables, Minibatch
from lfagcl.models.factors import LatentFactors, ObservedEntries
from lfagcl.models.interactions import DatasetBundle, InteractionGraph
from lfagcl.models.model import AdamState, LfaGclModel
from lfagcl.schemas.training import EpochRecord, TrainConfig, TrainingLog
from lfagcl.services.evaluation import EmbeddingScorer, evaluate
from lfagcl.services.lfa import train_lfa
from lfagcl.services.objectives import joint_loss_and_gradients
from lfagcl.services.optimizer import adam_update

logger = logging.getLogger(__name__)

MAX_NEGATIVE_ATTEMPTS = 100

# (model, bundle) -> (recall, ndcg) on the validation split
Validator = Callable[[LfaGclModel, DatasetBundle], Tuple[float, float]]


@dataclass
class EarlyStopState:
    """
    Running best of the monitored metric.

    Every validation that does not strictly beat the best counts as a drop;
    only a strict improvement resets the counter.
    """

    best_metric: float = -math.inf
    best_epoch: Optional[int] = None
    consecutive_drops: int = 0
    best_checkpoint: Optional[LfaGclModel] = None

    def update(self, metric: float, epoch: int, model: LfaGclModel) -> bool:
        if metric > self.best_metric:
            self.best_metric = metric
            self.best_epoch = epoch
            self.consecutive_drops = 0
            self.best_checkpoint = model.snapshot()
            return True
        self.consecutive_drops += 1
        return False

    def should_stop(self, patience: int) -> bool:
        return self.consecutive_drops >= patience


def sample_minibatch(graph: InteractionGraph, batch_size: int, rng: np.random.Generator,
                     max_attempts: int = MAX_NEGATIVE_ATTEMPTS) -> Minibatch:
    """
    Draw `batch_size` train edges uniformly (with replacement) as (u, i+) and
    rejection-sample i- uniformly among items u has not interacted with.
    Triplets still without a negative after `max_attempts` draws are dropped.
    """
    if graph.n_edges == 0:
        raise ValueError("cannot sample from a graph without edges")

    picks = rng.integers(0, graph.n_edges, size=batch_size)
    users = graph.edge_users[picks]
    positives = graph.edge_items[picks]

    negatives = rng.integers(0, graph.n_items, size=batch_size)
    pending = graph.has_edges(users, negatives)
    attempts = 1
    while pending.any() and attempts < max_attempts:
        redo = np.flatnonzero(pending)
        negatives[redo] = rng.integers(0, graph.n_items, size=len(redo))
        pending[redo] = graph.has_edges(users[redo], negatives[redo])
        attempts += 1

    skipped = int(pending.sum())
    if skipped:
        logger.warning(f"Skipped {skipped} triplets: no negative found in {max_attempts} attempts")
        keep = ~pending
        users, positives, negatives = users[keep], positives[keep], negatives[keep]

    return Minibatch(users=users, positives=positives, negatives=negatives, skipped=skipped)


def init_embeddings(n_users: int, n_items: int, d: int, rng: np.random.Generator) -> EmbeddingTables:
    """Xavier-style uniform init with bound sqrt(6 / (rows + d))."""
    user_bound = math.sqrt(6.0 / (n_users + d))
    item_bound = math.sqrt(6.0 / (n_items + d))
    return EmbeddingTables(
        user_base=rng.uniform(-user_bound, user_bound, size=(n_users, d)),
        item_base=rng.uniform(-item_bound, item_bound, size=(n_items, d)),
    )


def validation_recall(model: LfaGclModel, bundle: DatasetBundle) -> Tuple[float, float]:
    """Recall and NDCG at the monitored cutoff on the validation split."""
    k = model.config.monitor_k
    report = evaluate(EmbeddingScorer.from_model(model, bundle.graph), bundle, "validation", [k])
    return report.recall(k), report.ndcg(k)


def init_model(bundle: DatasetBundle, config: TrainConfig, factors: LatentFactors,
               rng: np.random.Generator) -> LfaGclModel:
    graph = bundle.graph
    if factors.n_users != graph.n_users or factors.n_items != graph.n_items:
        raise DimensionMismatchError(
            f"LFA factors are {factors.n_users} x {factors.n_items}, dataset is {graph.n_users} x {graph.n_items}",
            section="factors",
        )
    embeddings = init_embeddings(graph.n_users, graph.n_items, config.embed_dim, rng)
    return LfaGclModel(config, embeddings, factors, AdamState.zeros_like(embeddings.as_params()))


def fit(
    bundle: DatasetBundle,
    config: TrainConfig,
    factors: Optional[LatentFactors] = None,
    validator: Optional[Validator] = None,
) -> Tuple[LfaGclModel, TrainingLog]:
    """
    Train the dual-channel model and return the best-validation snapshot.

    Pretrains LFA first when `factors` is not supplied. Each epoch runs
    ceil(|train| / batch_size) steps.

    Raises:
        TrainingDivergedError: a loss or update became non-finite; the error
            carries the last finite model
    """
    graph = bundle.graph
    if factors is None:
        entries = ObservedEntries.from_edges(bundle.split.train, graph.n_users, graph.n_items)
        factors = train_lfa(entries, config.lfa)

    init_seed, sample_seed, dropout_seed = np.random.SeedSequence(config.seed).spawn(3)
    init_rng = np.random.default_rng(init_seed)
    sample_rng = np.random.default_rng(sample_seed)
    dropout_rng = np.random.default_rng(dropout_seed)

    model = init_model(bundle, config, factors, init_rng)
    log = TrainingLog()
    if config.epochs_max == 0:
        return model, log

    validator = validator or validation_recall
    early_stop = EarlyStopState()
    steps_per_epoch = math.ceil(len(bundle.split.train) / config.batch_size)
    logger.info(
        f"Training: {config.epochs_max} epochs max, {steps_per_epoch} steps/epoch, "
        f"lambda1={config.lambda1} lambda2={config.lambda2} tau={config.tau} dropout={config.dropout_rate}"
    )

    show_progress = logger.isEnabledFor(logging.DEBUG)
    for epoch in tqdm(range(1, config.epochs_max + 1), desc="epochs", disable=not show_progress):
        started = time.perf_counter()
        totals = np.zeros(5)
        n_steps = 0

        for _ in range(steps_per_epoch):
            batch = sample_minibatch(graph, config.batch_size, sample_rng)
            log.skipped_triplets += batch.skipped
            if len(batch) == 0:
                continue
            try:
                losses, grads = joint_loss_and_gradients(graph, model.factors, model.embeddings, batch, config,
                                                         rng=dropout_rng)
                adam_update(model.embeddings.as_params(), grads.as_params(), model.optimizer, config.learning_rate)
            except (NonFiniteLossError, OptimizerError) as e:
                logger.error(f"Training diverged at epoch {epoch}: {e.detail}")
                raise TrainingDivergedError(f"training diverged at epoch {epoch}: {e.detail}",
                                            last_good=model.snapshot()) from e
            log.steps += 1
            n_steps += 1
            totals += (losses.bpr, losses.cl_user, losses.cl_item, losses.l2, losses.total)

        means = totals / max(n_steps, 1)
        record = EpochRecord(epoch=epoch, bpr=means[0], cl_user=means[1], cl_item=means[2], l2=means[3],
                             total=means[4])

        stop = False
        if epoch % config.validate_every == 0:
            val_recall, val_ndcg = validator(model, bundle)
            log.n_validations += 1
            record.val_recall, record.val_ndcg = val_recall, val_ndcg
            if early_stop.update(val_recall, epoch, model):
                logger.info(f"Epoch {epoch}: new best validation Recall@{config.monitor_k}={val_recall:.6g}")
            stop = early_stop.should_stop(config.patience)

        record.elapsed_ms = int(round((time.perf_counter() - started) * 1000))
        log.records.append(record)
        logger.debug(f"Epoch {epoch}: {record.to_line(' ')}")

        if stop:
            log.stopped_early = True
            logger.info(f"Early stop at epoch {epoch}: no improvement in {config.patience} validations")
            break

    if early_stop.best_checkpoint is not None:
        model = early_stop.best_checkpoint
        log.best_epoch = early_stop.best_epoch
        log.best_metric = early_stop.best_metric
    logger.info(f"Training finished after {log.steps} steps; best epoch {log.best_epoch}")
    return model, log
