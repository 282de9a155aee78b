"""
evaluate
========
All-ranking Recall@K / NDCG@K of a model checkpoint on the validation or
test split, overall and per degree group.
"""

from pathlib import Path
from typing import List, Optional

import typer

from lfagcl.cli.common import handle_errors, join_list, load_bundle, require_artifact, run_config
from lfagcl.core.exceptions import ConfigError
from lfagcl.services.evaluation import EmbeddingScorer, evaluate, report_table, write_report
from lfagcl.services.interactions import group_users_by_degree
from lfagcl.storage import model_checkpoint


@handle_errors
def evaluate_command(
    ctx: typer.Context,
    bundle_path: Optional[str] = typer.Option(None, "--bundle", "-b"),
    checkpoint: Optional[str] = typer.Option(None, "--checkpoint", "-c"),
    k: Optional[List[int]] = typer.Option(None, "--k", "-k", help="Cutoff; repeat for several"),
    split: str = typer.Option("test", "--split", help="validation or test"),
    report_path: Optional[str] = typer.Option(None, "--report", help="Structured JSON report path"),
    table_path: Optional[str] = typer.Option(None, "--table", help="Flat table path"),
    groups: Optional[int] = typer.Option(None, "--groups", help="Number of degree groups"),
):
    """Evaluate a trained model and write the JSON report and flat table."""
    if split not in ("validation", "test"):
        raise ConfigError(f"--split must be validation or test, got '{split}'")
    config = run_config(
        ctx,
        BUNDLE_PATH=bundle_path,
        CHECKPOINT_PATH=checkpoint,
        EVAL_K=join_list(k),
        REPORT_PATH=report_path,
        TABLE_PATH=table_path,
        N_GROUPS=groups,
    )
    bundle = load_bundle(config.BUNDLE_PATH)
    model = model_checkpoint.load(require_artifact(config.CHECKPOINT_PATH, "train"), expected=config.train_config())

    report = evaluate(
        EmbeddingScorer.from_model(model, bundle.graph),
        bundle,
        split=split,
        ks=config.EVAL_K,
        groups=group_users_by_degree(bundle.graph, config.N_GROUPS),
        mask_validation=config.MASK_VALIDATION,
        standard_idcg=config.STANDARD_IDCG,
        config=config.to_flat_dict(),
    )
    write_report(report, config.REPORT_PATH)
    table = report_table(report)
    Path(config.TABLE_PATH).write_text(table, encoding="utf-8")
    typer.echo("\n".join(line for line in table.splitlines() if not line.startswith("#")))
