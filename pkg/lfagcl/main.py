"""
LFA-GCL Command Line
====================
Root application: global flags, logging setup and command registration.

    lfagcl prepare --input ratings.tsv
    lfagcl pretrain-lfa
    lfagcl train
    lfagcl evaluate --k 20 --k 40
"""

from typing import Optional

import typer

from lfagcl import __version__
from lfagcl.cli import register_commands
from lfagcl.cli.common import CliState
from lfagcl.utils.helpers import setup_logging

app = typer.Typer(
    name="lfagcl",
    help="LFA-GCL: latent-factor-augmented graph contrastive learning for recommendation",
    no_args_is_help=True,
    add_completion=False,
)


def _version(value: bool) -> None:
    if value:
        typer.echo(__version__)
        raise typer.Exit()


@app.callback()
def main(
    ctx: typer.Context,
    config: Optional[str] = typer.Option(None, "--config", help="Flat KEY=value config file"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for splitting, init, sampling and dropout"),
    threads: Optional[int] = typer.Option(None, "--threads", help="Worker processes for sweeps"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging and progress bars"),
    version: bool = typer.Option(False, "--version", callback=_version, is_eager=True),
):
    setup_logging(verbose)
    ctx.obj = CliState(
        config_path=config,
        overrides={"SEED": seed, "THREADS": threads},
        verbose=verbose,
    )


register_commands(app)


if __name__ == "__main__":
    app()
