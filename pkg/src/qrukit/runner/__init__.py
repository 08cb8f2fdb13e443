"""Config-driven experiment runner and its command-line interface."""

from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .train import TrainConfig, TrainingDiverged, TrainResult, step_target, train

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "TrainConfig",
    "TrainResult",
    "TrainingDiverged",
    "load_config",
    "parse_config",
    "step_target",
    "train",
]
