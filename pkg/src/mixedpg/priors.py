"""Differentiable, deliberately imperfect prior models.

Each prior consumes observations in the task's coordinates and is built from
:mod:`mixedpg.diffkit.functional`, so a rollout can be recorded on a tape.
Noise is drawn outside the tape and enters as an additive constant.

Vehicle prior: straight-line reference (the observed errors are read as the
absolute lateral position and heading), a single Euler step at the sampling
period, and ``N(0.5, 0.01)`` noise on the lateral position.

Pendulum prior: one Euler step at the sampling period, ``N(0.1, 0.5)`` noise
on the cart position, and a reward with softened velocity penalties.
Gaussian noise is parameterized as (mean, variance).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diffkit import functional as F
from .envs.pendulum import PendulumTask, differentiable_pendulum_step
from .envs.vehicle import VehicleTask, clamp_action, tracking_reward, vehicle_substep


def _noise(rng, n, mean, var, noise):
    if noise is not None:
        return np.broadcast_to(np.asarray(noise, dtype=np.float64), (n,)).copy()
    if rng is None:
        return np.full(n, 0.0)
    return rng.normal(mean, math.sqrt(var), size=n)


def prior_vehicle_step(obs, action, rng=None, task: VehicleTask | None = None, noise=None,
                       noise_mean: float = 0.5, noise_var: float = 0.01):
    """Model transition for path tracking; ``noise`` overrides the draw (e.g. 0)."""
    p = (task or VehicleTask()).params
    a = clamp_action(action, p)
    n = obs.shape[0]
    eps = _noise(rng, n, noise_mean, noise_var, noise)
    u = obs[:, 0] + p.u_ref
    cols = vehicle_substep(u, obs[:, 1], obs[:, 2], obs[:, 3], obs[:, 4], obs[:, 5], a[:, 0], a[:, 1], p, 1.0 / p.f_sam)
    u2, v2, r2, y2, phi2, x2 = cols
    return F.stack([u2 - p.u_ref, v2, r2, y2 + eps, phi2, x2], axis=1)


def prior_vehicle_reward(obs, action, task: VehicleTask | None = None):
    p = (task or VehicleTask()).params
    return tracking_reward(obs, clamp_action(action, p))


def prior_pendulum_step(obs, action, rng=None, task: PendulumTask | None = None, noise=None,
                        noise_mean: float = 0.1, noise_var: float = 0.5):
    p = (task or PendulumTask()).params
    n = obs.shape[0]
    eps = _noise(rng, n, noise_mean, noise_var, noise)
    nxt = differentiable_pendulum_step(obs, action, p, 1.0 / p.f_sam, 1)
    offset = np.zeros((n, 4))
    offset[:, 0] = eps
    return nxt + offset


def prior_pendulum_reward(obs, action=None):
    return -(
        0.01 * F.square(obs[:, 0])
        + F.square(obs[:, 1])
        + 0.001 * F.square(obs[:, 2])
        + 0.001 * F.square(obs[:, 3])
    )


@dataclass
class PriorModel:
    """Uniform interface used by the policy losses.

    ``step(obs, action, rng)`` and ``reward(obs, action)`` must both be
    tape-recordable. ``stochastic`` tells callers whether ``rng`` is consumed.
    """

    task: object
    kind: str = "prior"
    noise_mean: float = 0.0
    noise_var: float = 0.0
    noise_enabled: bool = True

    @property
    def stochastic(self) -> bool:
        return self.kind == "prior" and self.noise_enabled

    def step(self, obs, action, rng=None):
        if self.kind == "oracle":
            return self.task.differentiable_step(obs, action)
        noise = None if self.noise_enabled else 0.0
        if isinstance(self.task, VehicleTask):
            return prior_vehicle_step(obs, action, rng, self.task, noise, self.noise_mean, self.noise_var)
        return prior_pendulum_step(obs, action, rng, self.task, noise, self.noise_mean, self.noise_var)

    def terminal(self, obs) -> np.ndarray:
        return self.task.terminal(obs)

    def reward(self, obs, action):
        if self.kind == "oracle":
            return self.task.reward(obs, action)
        if isinstance(self.task, VehicleTask):
            return prior_vehicle_reward(obs, action, self.task)
        return prior_pendulum_reward(obs, action)


def make_prior(task, noise_mean: float | None = None, noise_var: float | None = None, noise_enabled: bool = True) -> PriorModel:
    if isinstance(task, VehicleTask):
        mean, var = 0.5, 0.01
    else:
        mean, var = 0.1, 0.5
    return PriorModel(
        task,
        "prior",
        mean if noise_mean is None else noise_mean,
        var if noise_var is None else noise_var,
        noise_enabled,
    )


def oracle_model_adapter(task) -> PriorModel:
    """Expose the true simulator dynamics and reward as a differentiable model."""
    return PriorModel(task, "oracle")
