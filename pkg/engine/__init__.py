"""Engine package: training protocol, audits, logging and metrics."""

from .activity_logger import ActivityLogger, EventType, LogEvent
from .base_learner import IncrementalLearner, TrainerState
from .baselines import DyToxBaseline, FinetuneBaseline, LEARNERS, build_learner
from .freeze_audit import FreezeMask, count_parameters
from .metrics_collector import (
    EvalResult, PhaseRow, RunRecord, avg_accuracy, evaluate, evaluate_sets, running_means,
)
from .train_config import ABLATION_PRESETS, AblationFlags, TrainConfig
from .trainer import SedegTrainer

__all__ = [
    'ActivityLogger', 'EventType', 'LogEvent',
    'IncrementalLearner', 'TrainerState',
    'SedegTrainer', 'DyToxBaseline', 'FinetuneBaseline', 'LEARNERS', 'build_learner',
    'FreezeMask', 'count_parameters',
    'EvalResult', 'PhaseRow', 'RunRecord', 'avg_accuracy', 'evaluate', 'evaluate_sets',
    'running_means',
    'ABLATION_PRESETS', 'AblationFlags', 'TrainConfig',
]
