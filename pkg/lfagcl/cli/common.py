"""
Shared CLI Plumbing
===================
Global option state, config loading with flag overrides, artifact checks
and the mapping of toolkit errors to exit code 1.
"""

import functools
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import typer

from lfagcl.core.config import RunConfig, load_run_config
from lfagcl.core.exceptions import LfaGclError, MissingArtifactError
from lfagcl.models.interactions import DatasetBundle
from lfagcl.storage import dataset_bundle

logger = logging.getLogger(__name__)


@dataclass
class CliState:
    """Values of the global flags, stored on the typer context."""

    config_path: Optional[str] = None
    overrides: Dict[str, Any] = field(default_factory=dict)
    verbose: bool = False


def run_config(ctx: typer.Context, **overrides: Any) -> RunConfig:
    """Effective config: defaults < env < config file < global flags < command flags."""
    state: CliState = ctx.obj or CliState()
    merged = dict(state.overrides)
    merged.update({key: value for key, value in overrides.items() if value is not None})
    return load_run_config(state.config_path, merged)


def require_artifact(path: str | Path, producer: str) -> Path:
    path = Path(path)
    if not path.is_file():
        raise MissingArtifactError(str(path), producer)
    return path


def load_bundle(path: str | Path) -> DatasetBundle:
    return dataset_bundle.load(require_artifact(path, "prepare"))


def config_header(config: RunConfig) -> List[str]:
    """Effective config as '# KEY=value' comment lines for flat outputs."""
    return [f"# {key}={value}" for key, value in config.to_flat_dict().items()]


def join_list(values: Optional[List[Any]]) -> Optional[str]:
    """Repeated list flags -> the comma form the config layer parses."""
    if not values:
        return None
    return ",".join(str(v) for v in values)


def handle_errors(command: Callable) -> Callable:
    """Report any LfaGclError as one line on stderr and exit with code 1."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except LfaGclError as e:
            logger.debug("Command failed", exc_info=True)
            typer.echo(f"error: {e}", err=True)
            raise typer.Exit(code=1)

    return wrapper
