"""Ground-truth simulators for path tracking and cart-pole balancing."""
from __future__ import annotations

import dataclasses

from .batch import BatchEnv, ResetError, batch_step
from .kernels import BACKEND
from .pendulum import PendulumParams, PendulumTask, pendulum_reward, pendulum_step, pendulum_terminal
from .vehicle import (
    SimulatorFault,
    VehicleParams,
    VehicleTask,
    reference_path,
    tracking_reward,
    tracking_terminal,
    vehicle_step,
)

TASKS = ("path_tracking", "inverted_pendulum")


def make_task(name: str, params: dict | None = None, reset_ranges: dict | None = None, obs_scale=None):
    """Build a task with optional parameter, reset-range, and input-scale overrides."""
    if name == "path_tracking":
        task = VehicleTask(VehicleParams(**(params or {})))
    elif name == "inverted_pendulum":
        task = PendulumTask(PendulumParams(**(params or {})))
    else:
        raise ValueError(f"unknown task {name!r}; expected one of {TASKS}")
    if reset_ranges:
        merged = dict(task.reset_ranges)
        merged.update({k: tuple(v) for k, v in reset_ranges.items()})
        task = dataclasses.replace(task, reset_ranges=merged)
    if obs_scale is not None:
        task = dataclasses.replace(task, obs_scale=tuple(obs_scale))
    return task


__all__ = [
    "BACKEND",
    "BatchEnv",
    "PendulumParams",
    "PendulumTask",
    "ResetError",
    "SimulatorFault",
    "TASKS",
    "VehicleParams",
    "VehicleTask",
    "batch_step",
    "make_task",
    "pendulum_reward",
    "pendulum_step",
    "pendulum_terminal",
    "reference_path",
    "tracking_reward",
    "tracking_terminal",
    "vehicle_step",
]
