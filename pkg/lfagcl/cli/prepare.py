"""
prepare
=======
Interaction file -> deduplicated, indexed, 7:1:2-split dataset bundle.
"""

from pathlib import Path
from typing import Optional

import typer

from lfagcl.cli.common import handle_errors, run_config
from lfagcl.core.exceptions import ConfigError
from lfagcl.services.interactions import dataset_stats, load_interactions, make_bundle, stats_table
from lfagcl.storage import dataset_bundle


@handle_errors
def prepare(
    ctx: typer.Context,
    input_path: Optional[str] = typer.Option(None, "--input", "-i", help="Interaction file (user, item[, rating, ...])"),
    delimiter: Optional[str] = typer.Option(None, "--delimiter", help="tab, comma, space, semicolon, pipe or a literal"),
    out: Optional[str] = typer.Option(None, "--out", "-o", help="Bundle output path"),
):
    """Load, deduplicate and split interactions; write the dataset bundle and print its statistics."""
    config = run_config(ctx, DATASET_INPUT=input_path, DELIMITER=delimiter, BUNDLE_PATH=out)
    if not config.DATASET_INPUT:
        raise ConfigError("no input file given (--input or DATASET_INPUT)")

    raw = load_interactions(config.DATASET_INPUT, config.delimiter)
    bundle = make_bundle(raw, config.SEED)
    dataset_bundle.save(bundle, config.BUNDLE_PATH)

    stats = dataset_stats(raw, bundle.split, name=Path(config.DATASET_INPUT).stem)
    typer.echo(stats_table(stats), nl=False)
