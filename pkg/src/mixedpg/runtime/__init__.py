"""Replay storage, worker cores, and the serial and threaded trainers."""
from .asynchronous import ParamServer, WorkerFailure, async_train
from .buffer import ReplayBuffer
from .core import (
    METRIC_COLUMNS,
    TIMING_COLUMNS,
    ActorCore,
    BufferCore,
    EvalResult,
    LearnerCore,
    OptimizerCore,
    TrainingDiverged,
    evaluate,
    raw_trajectory,
)
from .messages import GradientMessage, StalenessRecord
from .metrics import MetricLog, read_metrics, write_metrics
from .seeding import stream
from .serial import Reporter, TrainResult, serial_train
from .settings import Topology, TrainSettings

__all__ = [
    "METRIC_COLUMNS",
    "TIMING_COLUMNS",
    "ActorCore",
    "BufferCore",
    "EvalResult",
    "GradientMessage",
    "LearnerCore",
    "MetricLog",
    "OptimizerCore",
    "ParamServer",
    "ReplayBuffer",
    "Reporter",
    "StalenessRecord",
    "Topology",
    "TrainResult",
    "TrainSettings",
    "TrainingDiverged",
    "WorkerFailure",
    "async_train",
    "evaluate",
    "raw_trajectory",
    "read_metrics",
    "serial_train",
    "stream",
    "write_metrics",
]
