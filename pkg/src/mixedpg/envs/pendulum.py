"""Cart-pole balancing with rigid-body dynamics.

State ``[x, theta, xdot, thetadot]`` with ``theta = 0`` upright; action is the
cart force ``F`` in newtons.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..diffkit import functional as F
from ..diffkit.tape import Tensor
from . import kernels
from .vehicle import SimulatorFault


@dataclass(frozen=True)
class PendulumParams:
    m1: float = 9.42
    m2: float = 4.89
    l: float = 0.6
    g: float = 9.81
    f_sam: float = 25.0
    f_sys: float = 50.0
    force_max: float = 10.0
    theta_fail: float = math.pi / 2

    @property
    def substeps(self) -> int:
        return int(round(self.f_sys / self.f_sam))


def _raw(x):
    return x.data if isinstance(x, Tensor) else np.asarray(x)


def pendulum_substep(x, th, xd, thd, force, p: PendulumParams, T: float):
    """Explicit Euler substep of ``D [xdd, thdd] = z``."""
    c = (p.m1 / 2.0 + p.m2) * p.l
    d11 = p.m1 + p.m2
    d22 = (p.m1 / 3.0 + p.m2) * p.l / 2.0
    cos_th, sin_th = F.cos(th), F.sin(th)
    d12 = c * cos_th
    det = d11 * d22 - d12 * d12
    if np.any(np.abs(_raw(det)) < 1e-10):
        raise SimulatorFault("pendulum mass matrix singular")
    z1 = c * thd * thd * sin_th + force
    z2 = (c * p.g) * sin_th
    xdd = (d22 * z1 - d12 * z2) / det
    thdd = (d11 * z2 - d12 * z1) / det
    return x + T * xd, th + T * thd, xd + T * xdd, thd + T * thdd


def clamp_force(action, p: PendulumParams):
    if isinstance(action, Tensor):
        return F.clip(action, -p.force_max, p.force_max)
    return np.clip(action, -p.force_max, p.force_max)


def pendulum_step(state, action, p: PendulumParams = PendulumParams(), substeps: int | None = None) -> np.ndarray:
    """Advance ``[x, theta, xdot, thetadot]`` by one sampling period (batched or single)."""
    s = np.array(state, dtype=np.float64, ndmin=2, order="C")
    a = np.ascontiguousarray(clamp_force(np.array(action, dtype=np.float64).reshape(-1, 1), p))
    n = p.substeps if substeps is None else substeps
    kernels.pendulum_substeps(s, a, 1.0 / p.f_sys, n, p.m1, p.m2, p.l, p.g)
    return s.reshape(np.shape(state)) if np.ndim(state) == 1 else s


def differentiable_pendulum_step(obs, action, p: PendulumParams, T: float, substeps: int):
    a = clamp_force(action, p)
    force = a[:, 0]
    cols = tuple(obs[:, i] for i in range(4))
    for _ in range(substeps):
        cols = pendulum_substep(*cols, force, p, T)
    return F.stack(list(cols), axis=1)


def pendulum_reward(obs, action=None):
    return -(
        0.01 * F.square(obs[:, 0])
        + F.square(obs[:, 1])
        + 0.1 * F.square(obs[:, 2])
        + 0.1 * F.square(obs[:, 3])
    )


def pendulum_terminal(obs, p: PendulumParams = PendulumParams()) -> np.ndarray:
    o = np.atleast_2d(np.asarray(_raw(obs)))
    return (np.abs(o[:, 1]) > p.theta_fail) | ~np.all(np.isfinite(o), axis=1)


@dataclass
class PendulumTask:
    params: PendulumParams = field(default_factory=PendulumParams)
    reset_ranges: dict = field(
        default_factory=lambda: {
            "x": (-0.05, 0.05),
            "theta": (-0.05, 0.05),
            "xdot": (-0.05, 0.05),
            "thetadot": (-0.05, 0.05),
        }
    )
    obs_scale: tuple = (1.0, 1.0, 1.0, 1.0)
    name: str = "inverted_pendulum"
    obs_dim: int = 4
    act_dim: int = 1
    obs_names: tuple = ("x", "theta", "xdot", "thetadot")
    act_names: tuple = ("force",)
    eval_horizon: int = 100

    @property
    def action_high(self) -> np.ndarray:
        return np.array([self.params.force_max])

    def reset(self, rng: np.random.Generator, n: int) -> np.ndarray:
        rr = self.reset_ranges
        cols = [rng.uniform(*rr[k], size=n) for k in ("x", "theta", "xdot", "thetadot")]
        return np.stack(cols, axis=1)

    def step(self, obs: np.ndarray, action: np.ndarray) -> np.ndarray:
        return pendulum_step(obs, action, self.params)

    def reward(self, obs, action):
        return pendulum_reward(obs, action)

    def terminal(self, obs) -> np.ndarray:
        return pendulum_terminal(obs, self.params)

    def clamp(self, action):
        return clamp_force(action, self.params)

    def differentiable_step(self, obs, action):
        p = self.params
        return differentiable_pendulum_step(obs, action, p, 1.0 / p.f_sys, p.substeps)
