"""
train
=====
Joint BPR + dual-channel contrastive training from a dataset bundle and an
LFA checkpoint. Writes the best-validation model checkpoint and the epoch log.
"""

import logging
from pathlib import Path
from typing import Optional

import typer

from lfagcl.cli.common import config_header, handle_errors, load_bundle, require_artifact, run_config
from lfagcl.core.exceptions import TrainingDivergedError
from lfagcl.services.trainer import fit
from lfagcl.storage import lfa_checkpoint, model_checkpoint
from lfagcl.utils.helpers import format_number

logger = logging.getLogger(__name__)

# the only field that differs between identical runs
ELAPSED_NOTE = "# elapsed_ms is wall-clock time per epoch"


@handle_errors
def train(
    ctx: typer.Context,
    bundle_path: Optional[str] = typer.Option(None, "--bundle", "-b"),
    lfa_path: Optional[str] = typer.Option(None, "--lfa", help="LFA checkpoint from pretrain-lfa"),
    out: Optional[str] = typer.Option(None, "--out", "-o", help="Model checkpoint output path"),
    log_path: Optional[str] = typer.Option(None, "--log", help="Per-epoch log output path"),
    epochs: Optional[int] = typer.Option(None, "--epochs"),
    learning_rate: Optional[float] = typer.Option(None, "--lr"),
    batch_size: Optional[int] = typer.Option(None, "--batch-size"),
    lambda1: Optional[float] = typer.Option(None, "--lambda1"),
    lambda2: Optional[float] = typer.Option(None, "--lambda2"),
    tau: Optional[float] = typer.Option(None, "--tau"),
    dropout: Optional[float] = typer.Option(None, "--dropout"),
    layers: Optional[int] = typer.Option(None, "--layers"),
    dim: Optional[int] = typer.Option(None, "--dim", help="Embedding size d"),
    patience: Optional[int] = typer.Option(None, "--patience"),
    validate_every: Optional[int] = typer.Option(None, "--validate-every"),
):
    """Train LFA-GCL and keep the best-validation snapshot."""
    config = run_config(
        ctx,
        BUNDLE_PATH=bundle_path,
        LFA_CHECKPOINT=lfa_path,
        CHECKPOINT_PATH=out,
        LOG_PATH=log_path,
        EPOCHS_MAX=epochs,
        LEARNING_RATE=learning_rate,
        BATCH_SIZE=batch_size,
        LAMBDA1=lambda1,
        LAMBDA2=lambda2,
        TAU=tau,
        DROPOUT_RATE=dropout,
        LAYERS=layers,
        EMBED_DIM=dim,
        PATIENCE=patience,
        VALIDATE_EVERY=validate_every,
    )
    train_config = config.train_config()
    bundle = load_bundle(config.BUNDLE_PATH)
    factors = lfa_checkpoint.load(require_artifact(config.LFA_CHECKPOINT, "pretrain-lfa"))
    if factors.f != train_config.lfa.f:
        logger.warning(f"LFA checkpoint has f={factors.f}, config says LFA_FACTORS={train_config.lfa.f}")

    try:
        model, log = fit(bundle, train_config, factors)
    except TrainingDivergedError as e:
        if e.last_good is not None:
            model_checkpoint.save(e.last_good, config.CHECKPOINT_PATH)
            logger.error(f"Saved last finite model to {config.CHECKPOINT_PATH}")
        raise

    model_checkpoint.save(model, config.CHECKPOINT_PATH)
    log_file = Path(config.LOG_PATH)
    log_file.parent.mkdir(parents=True, exist_ok=True)
    header = config_header(config) + [ELAPSED_NOTE]
    log_file.write_text("\n".join(header) + "\n" + log.to_text(), encoding="utf-8")

    best = "none" if log.best_metric is None else format_number(log.best_metric)
    typer.echo(
        f"epochs={len(log.records)}\tsteps={log.steps}\tbest_epoch={log.best_epoch}\t"
        f"best_recall@{train_config.monitor_k}={best}\tstopped_early={str(log.stopped_early).lower()}"
    )
