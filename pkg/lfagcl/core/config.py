"""
Run Configuration
=================
Loads settings from defaults, environment variables (.env file), a flat
key-value config file and CLI overrides, in increasing order of precedence.

The config file uses the same KEY=value syntax as .env and is parsed with
python-dotenv. List values are comma separated:

    LEARNING_RATE=0.001
    EVAL_K=20,40
    TAU_GRID=0.2,0.5,0.8,1,3
"""

import io
from pathlib import Path
from typing import Any, List, Literal, Mapping, Optional

from dotenv import dotenv_values
from pydantic import ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from lfagcl.core.exceptions import ConfigError
from lfagcl.schemas.lfa import LfaConfig
from lfagcl.schemas.training import TrainConfig

DELIMITERS = {"tab": "\t", "comma": ",", "space": " ", "semicolon": ";", "pipe": "|"}


class RunConfig(BaseSettings):
    """
    Every setting a command can read.

    Defaults match the published parameter settings (lr 1e-3, batch 2048,
    d 32, L 2, f 5, validation every 2 epochs, patience 10, K {20, 40}).
    """

    model_config = SettingsConfigDict(
        env_prefix="LFAGCL_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
        enable_decoding=False,
    )

    # === Paths ===
    DATASET_INPUT: str = ""
    DELIMITER: str = "tab"
    BUNDLE_PATH: str = "dataset.bin"
    LFA_CHECKPOINT: str = "lfa.bin"
    CHECKPOINT_PATH: str = "model.bin"
    LOG_PATH: str = "train_log.tsv"
    REPORT_PATH: str = "report.json"
    TABLE_PATH: str = "report.tsv"
    SWEEP_PATH: str = "sweep.tsv"

    # === Joint training ===
    LEARNING_RATE: float = 1e-3
    BATCH_SIZE: int = 2048
    EPOCHS_MAX: int = 100
    LAMBDA1: float = 0.01
    LAMBDA2: float = 1e-6
    TAU: float = 0.5
    DROPOUT_RATE: float = 0.1
    LAYERS: int = 2
    EMBED_DIM: int = 32
    SEED: int = 0
    VALIDATE_EVERY: int = 2
    PATIENCE: int = 10
    EVAL_K: List[int] = [20, 40]
    CL_NEGATIVES: Literal["batch", "full"] = "batch"

    # === LFA pretraining ===
    LFA_FACTORS: int = 5
    LFA_LAMBDA: float = 0.1
    LFA_MAX_ITERS: int = 50
    LFA_REL_TOL: float = 1e-6
    LFA_INIT_SCALE: float = 0.01
    LFA_SOLVER: Literal["als", "sgd"] = "als"
    LFA_SGD_LEARNING_RATE: float = 0.005
    LFA_SGD_BATCH_SIZE: int = 256

    # === Evaluation ===
    N_GROUPS: int = 5
    MASK_VALIDATION: bool = False
    STANDARD_IDCG: bool = False

    # === Sweeps ===
    LAMBDA1_GRID: List[float] = [0.1, 0.01, 0.001, 0.0001, 0.00001]
    LAMBDA2_GRID: List[float] = [1e-6, 1e-7, 1e-8]
    TAU_GRID: List[float] = [0.2, 0.5, 0.8, 1.0, 3.0]
    DROPOUT_GRID: List[float] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]
    THREADS: int = 1

    @field_validator("EVAL_K", "LAMBDA1_GRID", "LAMBDA2_GRID", "TAU_GRID", "DROPOUT_GRID", mode="before")
    @classmethod
    def split_list(cls, v):
        """Accept comma separated strings from config files and flags."""
        if isinstance(v, str):
            return [part.strip() for part in v.split(",") if part.strip()]
        return v

    @field_validator("THREADS")
    @classmethod
    def validate_threads(cls, v):
        if v < 1:
            raise ValueError("THREADS must be >= 1")
        return v

    @property
    def delimiter(self) -> str:
        return DELIMITERS.get(self.DELIMITER, self.DELIMITER)

    def lfa_config(self) -> LfaConfig:
        try:
            return LfaConfig(
                f=self.LFA_FACTORS,
                lfa_lambda=self.LFA_LAMBDA,
                max_iters=self.LFA_MAX_ITERS,
                rel_tol=self.LFA_REL_TOL,
                init_scale=self.LFA_INIT_SCALE,
                seed=self.SEED,
                solver=self.LFA_SOLVER,
                sgd_learning_rate=self.LFA_SGD_LEARNING_RATE,
                sgd_batch_size=self.LFA_SGD_BATCH_SIZE,
            )
        except ValidationError as e:
            raise ConfigError(f"invalid LFA settings: {e}") from e

    def train_config(self) -> TrainConfig:
        try:
            return TrainConfig(
                learning_rate=self.LEARNING_RATE,
                batch_size=self.BATCH_SIZE,
                epochs_max=self.EPOCHS_MAX,
                lambda1=self.LAMBDA1,
                lambda2=self.LAMBDA2,
                tau=self.TAU,
                dropout_rate=self.DROPOUT_RATE,
                layers=self.LAYERS,
                embed_dim=self.EMBED_DIM,
                lfa=self.lfa_config(),
                seed=self.SEED,
                validate_every=self.VALIDATE_EVERY,
                patience=self.PATIENCE,
                eval_k=list(self.EVAL_K),
                cl_negatives=self.CL_NEGATIVES,
            )
        except ValidationError as e:
            raise ConfigError(f"invalid training settings: {e}") from e

    def to_text(self) -> str:
        """Render the effective config in the config-file format."""
        lines = []
        for key in type(self).model_fields:
            lines.append(f"{key}={_render_value(getattr(self, key))}")
        return "\n".join(lines) + "\n"

    def to_flat_dict(self) -> dict[str, str]:
        return {key: _render_value(getattr(self, key)) for key in type(self).model_fields}

    @classmethod
    def from_text(cls, text: str, overrides: Optional[Mapping[str, Any]] = None) -> "RunConfig":
        values = dotenv_values(stream=io.StringIO(text))
        return cls.from_values(values, overrides)

    @classmethod
    def from_values(cls, values: Mapping[str, Any], overrides: Optional[Mapping[str, Any]] = None) -> "RunConfig":
        merged = {key.upper(): value for key, value in values.items() if value is not None}
        merged.update({key.upper(): value for key, value in (overrides or {}).items() if value is not None})

        unknown = sorted(set(merged) - set(cls.model_fields))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

        try:
            return cls(**merged)
        except ValidationError as e:
            raise ConfigError(f"invalid config: {e}") from e


def _render_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ",".join(_render_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def load_run_config(path: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """Read an optional config file and apply CLI overrides on top."""
    if path is None:
        return RunConfig.from_values({}, overrides)

    config_file = Path(path)
    if not config_file.is_file():
        raise ConfigError(f"config file {path} does not exist")
    return RunConfig.from_text(config_file.read_text(encoding="utf-8"), overrides)
