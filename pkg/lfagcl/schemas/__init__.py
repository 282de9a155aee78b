from lfagcl.schemas.lfa import LfaConfig
from lfagcl.schemas.training import (
    LOG_COLUMNS,
    EpochRecord,
    LossBreakdown,
    TrainConfig,
    TrainingLog,
)
from lfagcl.schemas.report import (
    DatasetStats,
    GroupMetrics,
    KMetrics,
    MetricReport,
    SweepRow,
)

__all__ = [
    # LFA
    "LfaConfig",

    # Training
    "TrainConfig", "LossBreakdown", "EpochRecord", "TrainingLog", "LOG_COLUMNS",

    # Reports
    "KMetrics", "GroupMetrics", "MetricReport", "DatasetStats", "SweepRow",
]
