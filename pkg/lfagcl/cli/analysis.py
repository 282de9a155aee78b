"""
group-analysis
==============
Per-degree-group Recall@K of two checkpoints side by side, with an overall
row and the improvement of the candidate over the baseline.
"""

from pathlib import Path
from typing import Optional

import typer

from lfagcl.cli.common import handle_errors, load_bundle, require_artifact, run_config
from lfagcl.services.evaluation import EmbeddingScorer, evaluate, group_comparison_table
from lfagcl.services.interactions import group_users_by_degree
from lfagcl.storage import model_checkpoint


@handle_errors
def group_analysis(
    ctx: typer.Context,
    baseline: str = typer.Option(..., "--baseline", help="Model checkpoint shown first"),
    candidate: str = typer.Option(..., "--candidate", help="Model checkpoint compared against the baseline"),
    bundle_path: Optional[str] = typer.Option(None, "--bundle", "-b"),
    k: int = typer.Option(20, "--k", "-k"),
    groups: Optional[int] = typer.Option(None, "--groups"),
    split: str = typer.Option("test", "--split"),
    out: Optional[str] = typer.Option(None, "--out", "-o", help="Also write the table here"),
):
    """Compare two models across training-degree groups."""
    config = run_config(ctx, BUNDLE_PATH=bundle_path, N_GROUPS=groups)
    bundle = load_bundle(config.BUNDLE_PATH)
    sparsity_groups = group_users_by_degree(bundle.graph, config.N_GROUPS)

    reports = []
    for path in (baseline, candidate):
        model = model_checkpoint.load(require_artifact(path, "train"))
        reports.append(evaluate(
            EmbeddingScorer.from_model(model, bundle.graph),
            bundle,
            split=split,
            ks=[k],
            groups=sparsity_groups,
            mask_validation=config.MASK_VALIDATION,
            standard_idcg=config.STANDARD_IDCG,
        ))

    table = group_comparison_table(reports[0], reports[1], k, config=config.to_flat_dict())
    if out:
        Path(out).write_text(table, encoding="utf-8")
    typer.echo("\n".join(line for line in table.splitlines() if not line.startswith("#")))
