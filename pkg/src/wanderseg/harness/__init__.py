from .episode import EpisodeConfig, EpisodeEngine, EpisodeLog, StepRecord, run_episode, run_sequence
from .metrics import (
    metric_annots,
    metric_dA_per_annot,
    metric_dA_per_step,
    metric_miou_window,
)

__all__ = [
    "EpisodeConfig",
    "EpisodeEngine",
    "EpisodeLog",
    "StepRecord",
    "run_episode",
    "run_sequence",
    "metric_annots",
    "metric_dA_per_annot",
    "metric_dA_per_step",
    "metric_miou_window",
]
