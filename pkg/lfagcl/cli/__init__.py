"""
CLI Commands
============
Registers every command module on the root application.
"""

import typer

from lfagcl.cli import analysis, evaluate, prepare, pretrain, sweep, train


def register_commands(app: typer.Typer) -> None:
    # Dataset
    app.command("prepare")(prepare.prepare)

    # Training
    app.command("pretrain-lfa")(pretrain.pretrain_lfa)
    app.command("train")(train.train)

    # Evaluation
    app.command("evaluate")(evaluate.evaluate_command)
    app.command("group-analysis")(analysis.group_analysis)
    app.command("sweep")(sweep.sweep)
