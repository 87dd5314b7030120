"""Model assembly, training, metrics, transductive modes, checkpoints."""

from .checkpoint import load_checkpoint, save_checkpoint
from .metrics import MetricsReport, build_report, mean_mse, mse, r_squared
from .model import (
    ModelConfig,
    PreparedQuarter,
    VolatilityModel,
    masked_mse_tensor,
    prepare_quarter,
)
from .training import (
    TrainHistory,
    TrainState,
    evaluate,
    fine_tune,
    train,
    v_past_report,
)
from .transductive import transductive_split

__all__ = [
    "MetricsReport",
    "ModelConfig",
    "PreparedQuarter",
    "TrainHistory",
    "TrainState",
    "VolatilityModel",
    "build_report",
    "evaluate",
    "fine_tune",
    "load_checkpoint",
    "masked_mse_tensor",
    "mean_mse",
    "mse",
    "prepare_quarter",
    "r_squared",
    "save_checkpoint",
    "train",
    "transductive_split",
    "v_past_report",
]
