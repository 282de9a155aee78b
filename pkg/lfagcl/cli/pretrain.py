"""
pretrain-lfa
============
Fit the LFA factors on the bundle's train split and write the factor checkpoint.
"""

from typing import Optional

import typer

from lfagcl.cli.common import handle_errors, load_bundle, run_config
from lfagcl.models.factors import ObservedEntries
from lfagcl.services.lfa import reconstruction_error, train_lfa
from lfagcl.storage import lfa_checkpoint
from lfagcl.utils.helpers import format_number


@handle_errors
def pretrain_lfa(
    ctx: typer.Context,
    bundle_path: Optional[str] = typer.Option(None, "--bundle", "-b"),
    out: Optional[str] = typer.Option(None, "--out", "-o", help="LFA checkpoint output path"),
    factors: Optional[int] = typer.Option(None, "--factors", "-f", help="Latent dimension f"),
    lfa_lambda: Optional[float] = typer.Option(None, "--lambda", help="Ridge weight"),
    max_iters: Optional[int] = typer.Option(None, "--max-iters"),
    solver: Optional[str] = typer.Option(None, "--solver", help="als or sgd"),
):
    """Pretrain P and Q and print the objective trajectory."""
    config = run_config(
        ctx,
        BUNDLE_PATH=bundle_path,
        LFA_CHECKPOINT=out,
        LFA_FACTORS=factors,
        LFA_LAMBDA=lfa_lambda,
        LFA_MAX_ITERS=max_iters,
        LFA_SOLVER=solver,
    )
    bundle = load_bundle(config.BUNDLE_PATH)
    entries = ObservedEntries.from_edges(bundle.split.train, bundle.n_users, bundle.n_items)

    trace: list[float] = []
    result = train_lfa(entries, config.lfa_config(), trace=trace)
    lfa_checkpoint.save(result, config.LFA_CHECKPOINT)

    non_increasing = all(b <= a + 1e-12 * abs(a) for a, b in zip(trace, trace[1:]))
    typer.echo(f"objective\tinitial={format_number(trace[0])}\tfinal={format_number(trace[-1])}")
    typer.echo(f"steps\t{len(trace) - 1}\tnon_increasing={str(non_increasing).lower()}")
    typer.echo(f"relative_rms_error\t{format_number(reconstruction_error(result, entries))}")
