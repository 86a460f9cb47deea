"""Optimizer-side update rate of the threaded trainer."""
from __future__ import annotations

import dataclasses

import numpy as np

from .asynchronous import async_train
from .settings import TrainSettings


def update_interval_ms(task, settings: TrainSettings, budget: int, skip: float = 0.25) -> float:
    """Median wall time between applied updates, ignoring the first ``skip`` fraction."""
    res = async_train(task, settings, budget)
    t = np.asarray(res.optimizer.apply_times)
    start = int(len(t) * skip)
    if len(t) - start < 2:
        raise ValueError("budget too small to measure an update interval")
    return float(np.median(np.diff(t[start:])) * 1e3)


def with_learners(settings: TrainSettings, n_learners: int) -> TrainSettings:
    topo = dataclasses.replace(settings.topology, n_learners=n_learners)
    return dataclasses.replace(settings, topology=topo, eval_interval=10**9)


def learner_scaling(task, settings: TrainSettings, counts=(1, 12), budget: int = 60) -> dict[int, float]:
    return {n: update_interval_ms(task, with_learners(settings, n), budget) for n in counts}


__all__ = ["learner_scaling", "update_interval_ms", "with_learners"]
