"""
Domain Errors
=============
Every failure the toolkit reports on purpose derives from LfaGclError.

The CLI turns these into a one-line message and exit code 1, so each error
carries a short human-readable `detail`.
"""

from typing import Any, Optional


class LfaGclError(Exception):
    """Base class for all toolkit errors."""

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class ConfigError(LfaGclError):
    """Invalid or unknown configuration values."""


class DatasetIOError(LfaGclError):
    """Interaction file could not be read."""


class DataFormatError(LfaGclError):
    """Interaction data is unusable (e.g. no valid records)."""


class SplitError(LfaGclError):
    """Too few interactions for a 7:1:2 split."""


class GroupingError(LfaGclError):
    """Degree grouping is impossible for the requested group count."""


class FactorShapeError(LfaGclError):
    """Latent dimension violates f < min(|U|, |I|)."""


class LfaDivergenceError(LfaGclError):
    """LFA objective became non-finite."""

    def __init__(self, detail: str, diagnostics: Optional[dict[str, Any]] = None):
        super().__init__(detail)
        self.diagnostics = diagnostics or {}


class NonFiniteLossError(LfaGclError):
    """A loss term or its gradient is NaN/Inf."""

    def __init__(self, term: str):
        super().__init__(f"non-finite value in loss term '{term}'")
        self.term = term


class OptimizerError(LfaGclError):
    """Adam produced a non-finite parameter update."""


class TrainingDivergedError(LfaGclError):
    """Training aborted on a NaN loss; `last_good` holds the last finite model."""

    def __init__(self, detail: str, last_good: Any = None):
        super().__init__(detail)
        self.last_good = last_good


class CheckpointFormatError(LfaGclError):
    """Binary artifact is corrupt or truncated."""

    def __init__(self, detail: str, section: str = "header"):
        super().__init__(f"{detail} (section: {section})")
        self.section = section


class CheckpointVersionError(CheckpointFormatError):
    """Artifact was written by an unsupported format version."""


class DimensionMismatchError(CheckpointFormatError):
    """Artifact dimensions disagree with the run configuration."""


class EvaluationError(LfaGclError):
    """Evaluation cannot proceed (e.g. the requested split is empty)."""


class MissingArtifactError(LfaGclError):
    """A required input artifact does not exist."""

    def __init__(self, path: str, producer: str):
        super().__init__(f"{path} not found; create it first with `lfagcl {producer}`")
        self.path = path
        self.producer = producer
