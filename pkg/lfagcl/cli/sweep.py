"""
sweep
=====
One training run per grid value of a single hyperparameter, all from the
same LFA checkpoint. Rows are written in ascending grid order and flushed
after every point.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Iterator, List, Optional

import typer

from lfagcl.cli.common import config_header, handle_errors, join_list, load_bundle, require_artifact, run_config
from lfagcl.core.exceptions import ConfigError
from lfagcl.schemas.report import SweepRow
from lfagcl.schemas.training import TrainConfig
from lfagcl.services.evaluation import EmbeddingScorer, evaluate
from lfagcl.services.trainer import fit
from lfagcl.storage import lfa_checkpoint
from lfagcl.utils.helpers import format_number

logger = logging.getLogger(__name__)

# axis -> (grid setting, TrainConfig field)
AXES = {
    "lambda1": ("LAMBDA1_GRID", "lambda1"),
    "lambda2": ("LAMBDA2_GRID", "lambda2"),
    "tau": ("TAU_GRID", "tau"),
    "dropout": ("DROPOUT_GRID", "dropout_rate"),
}

SWEEP_COLUMNS = ("axis", "value", "k", "recall", "ndcg", "best_epoch")


def sweep_line(row: SweepRow, sep: str = "\t") -> str:
    best = "" if row.best_epoch is None else str(row.best_epoch)
    return sep.join([row.axis, format_number(row.value), str(row.k), format_number(row.recall),
                     format_number(row.ndcg), best])


def run_point(bundle_path: str, lfa_path: str, config_json: str, axis: str, value: float, k: int) -> SweepRow:
    """Train and test-evaluate one grid point; module-level so worker processes can run it."""
    config = TrainConfig.model_validate_json(config_json)
    bundle = load_bundle(bundle_path)
    factors = lfa_checkpoint.load(lfa_path)

    model, log = fit(bundle, config, factors)
    report = evaluate(EmbeddingScorer.from_model(model, bundle.graph), bundle, "test", [k])
    logger.info(f"Sweep {axis}={value}: Recall@{k}={format_number(report.recall(k))}")
    return SweepRow(axis=axis, value=value, k=k, recall=report.recall(k), ndcg=report.ndcg(k),
                    best_epoch=log.best_epoch)


def point_configs(base: TrainConfig, field: str, grid: List[float], parallel: bool) -> List[str]:
    """Serialized config per grid point; parallel workers get seed + point index."""
    configs = []
    for index, value in enumerate(grid):
        update = {field: value}
        if parallel:
            update["seed"] = base.seed + index
        configs.append(TrainConfig.model_validate({**base.model_dump(), **update}).model_dump_json())
    return configs


@handle_errors
def sweep(
    ctx: typer.Context,
    axis: str = typer.Argument(..., help="lambda1, lambda2, tau or dropout"),
    bundle_path: Optional[str] = typer.Option(None, "--bundle", "-b"),
    lfa_path: Optional[str] = typer.Option(None, "--lfa"),
    grid: Optional[List[float]] = typer.Option(None, "--value", help="Grid value; repeat for several"),
    k: Optional[int] = typer.Option(None, "--k", "-k"),
    out: Optional[str] = typer.Option(None, "--out", "-o"),
    epochs: Optional[int] = typer.Option(None, "--epochs"),
):
    """Train one model per grid value and write (value, Recall@K, NDCG@K) rows."""
    if axis not in AXES:
        raise ConfigError(f"unknown sweep axis '{axis}'; choose from {', '.join(AXES)}")
    grid_key, field = AXES[axis]
    config = run_config(
        ctx,
        BUNDLE_PATH=bundle_path,
        LFA_CHECKPOINT=lfa_path,
        SWEEP_PATH=out,
        EPOCHS_MAX=epochs,
        **{grid_key: join_list(grid)},
    )
    base = config.train_config()
    k = k or base.monitor_k
    values = sorted(set(getattr(config, grid_key)))
    if not values:
        raise ConfigError(f"{grid_key} is empty")

    require_artifact(config.BUNDLE_PATH, "prepare")
    require_artifact(config.LFA_CHECKPOINT, "pretrain-lfa")
    parallel = config.THREADS > 1 and len(values) > 1
    configs = point_configs(base, field, values, parallel)
    args = [(config.BUNDLE_PATH, config.LFA_CHECKPOINT, c, axis, v, k) for c, v in zip(configs, values)]

    def rows() -> Iterator[SweepRow]:
        if not parallel:
            for point in args:
                yield run_point(*point)
            return
        with ProcessPoolExecutor(max_workers=config.THREADS) as pool:
            yield from pool.map(run_point, *zip(*args))

    path = Path(config.SWEEP_PATH)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        handle.write("\n".join(config_header(config) + ["\t".join(SWEEP_COLUMNS)]) + "\n")
        handle.flush()
        for row in rows():
            line = sweep_line(row)
            handle.write(line + "\n")
            handle.flush()
            typer.echo(line)
