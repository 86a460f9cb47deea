"""Path tracking with a bicycle model and linear tires.

Observations are ``[du, v, r, dy, dphi, x]``: speed error against the 20 m/s
reference, lateral velocity, yaw rate, lateral and heading errors against the
sine-composite reference path, and longitudinal position. The raw vehicle
state is ``[u, v, r, y, phi, x]``.

The substep and reference functions are written against
:mod:`mixedpg.diffkit.functional`, so they run on numpy arrays and on tape
tensors alike.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..diffkit import functional as F
from ..diffkit.tape import Tensor
from . import kernels


class SimulatorFault(FloatingPointError):
    pass


@dataclass(frozen=True)
class VehicleParams:
    C_f: float = -88000.0
    C_r: float = -94000.0
    a: float = 1.14
    b: float = 1.40
    m: float = 1500.0
    I_z: float = 2420.0
    f_sam: float = 10.0
    f_sys: float = 200.0
    u_ref: float = 20.0
    delta_max: float = 0.4
    acc_max: float = 3.0

    @property
    def substeps(self) -> int:
        return int(round(self.f_sys / self.f_sam))


# reference path -----------------------------------------------------------

_TWO_PI = 2.0 * math.pi


def reference_path(x):
    """Reference lateral position and heading at longitudinal position ``x``."""
    y = (
        7.5 * F.sin(x * (_TWO_PI / 200.0))
        + 2.5 * F.sin(x * (_TWO_PI / 300.0))
        - 5.0 * F.sin(x * (_TWO_PI / 400.0))
    )
    slope = (
        (7.5 * _TWO_PI / 200.0) * F.cos(x * (_TWO_PI / 200.0))
        + (2.5 * _TWO_PI / 300.0) * F.cos(x * (_TWO_PI / 300.0))
        - (5.0 * _TWO_PI / 400.0) * F.cos(x * (_TWO_PI / 400.0))
    )
    return y, F.arctan(slope)


# dynamics -----------------------------------------------------------------

def _raw(x):
    return x.data if isinstance(x, Tensor) else np.asarray(x)


def check_denominators(u, p: VehicleParams, T: float) -> None:
    ud = _raw(u)
    d1 = p.m * ud - T * (p.C_f + p.C_r)
    d2 = T * (p.a * p.a * p.C_f + p.b * p.b * p.C_r) - p.I_z * ud
    if np.any(np.abs(d1) < 1e-8) or np.any(np.abs(d2) < 1e-8) or not np.all(np.isfinite(ud)):
        raise SimulatorFault(f"vehicle model singular at u={np.ravel(ud)[:4]}...")


def vehicle_substep(u, v, r, y, phi, x, delta, acc, p: VehicleParams, T: float):
    """One Euler substep of length ``T``; returns the six new state columns."""
    check_denominators(u, p, T)
    aCf_bCr = p.a * p.C_f - p.b * p.C_r
    u_next = u + T * (acc + v * r)
    v_next = (p.m * v * u + (T * aCf_bCr) * r - (T * p.C_f) * delta * u - (T * p.m) * u * u * r) / (
        p.m * u - T * (p.C_f + p.C_r)
    )
    r_next = (-p.I_z * r * u - (T * aCf_bCr) * v + (T * p.a * p.C_f) * delta * u) / (
        T * (p.a * p.a * p.C_f + p.b * p.b * p.C_r) - p.I_z * u
    )
    sin_phi, cos_phi = F.sin(phi), F.cos(phi)
    y_next = y + T * (u * sin_phi + v * cos_phi)
    phi_next = phi + T * r
    x_next = x + T * (u * cos_phi - v * sin_phi)
    return u_next, v_next, r_next, y_next, phi_next, x_next


def clamp_action(action, p: VehicleParams):
    hi = np.array([p.delta_max, p.acc_max])
    if isinstance(action, Tensor):
        return F.clip(action, -hi, hi)
    return np.clip(action, -hi, hi)


def vehicle_step(state, action, p: VehicleParams = VehicleParams()) -> np.ndarray:
    """Advance raw vehicle state(s) by one sampling period of the true simulator.

    ``state`` is ``[u, v, r, y, phi, x]`` (shape (6,) or (N, 6)); the action
    ``[delta, acc]`` is clamped to the actuator range and held for
    ``f_sys / f_sam`` substeps at ``T = 1 / f_sys``.
    """
    s = np.array(state, dtype=np.float64, ndmin=2, order="C")
    a = np.ascontiguousarray(clamp_action(np.array(action, dtype=np.float64, ndmin=2), p))
    kernels.vehicle_substeps(s, a, 1.0 / p.f_sys, p.substeps, p.C_f, p.C_r, p.a, p.b, p.m, p.I_z)
    return s.reshape(np.shape(state)) if np.ndim(state) == 1 else s


def obs_to_state(obs, p: VehicleParams = VehicleParams()):
    du, v, r, dy, dphi, x = (obs[:, i] for i in range(6))
    y_ref, phi_ref = reference_path(x)
    return du + p.u_ref, v, r, dy + y_ref, dphi + phi_ref, x


def state_to_obs(u, v, r, y, phi, x, p: VehicleParams = VehicleParams()):
    y_ref, phi_ref = reference_path(x)
    return F.stack([u - p.u_ref, v, r, y - y_ref, phi - phi_ref, x], axis=1)


def true_step_obs(obs: np.ndarray, action: np.ndarray, p: VehicleParams = VehicleParams()) -> np.ndarray:
    """Ground-truth transition in observation coordinates (numpy, batched)."""
    cols = obs_to_state(np.asarray(obs, dtype=np.float64), p)
    s = np.ascontiguousarray(np.stack(cols, axis=1))
    a = np.ascontiguousarray(clamp_action(np.asarray(action, dtype=np.float64), p))
    kernels.vehicle_substeps(s, a, 1.0 / p.f_sys, p.substeps, p.C_f, p.C_r, p.a, p.b, p.m, p.I_z)
    return state_to_obs(*(s[:, i] for i in range(6)), p=p)


def differentiable_true_step(obs, action, p: VehicleParams = VehicleParams()):
    """Same transition as :func:`true_step_obs`, recordable on a tape."""
    a = clamp_action(action, p)
    delta, acc = a[:, 0], a[:, 1]
    cols = obs_to_state(obs, p)
    T = 1.0 / p.f_sys
    for _ in range(p.substeps):
        cols = vehicle_substep(*cols, delta, acc, p, T)
    return state_to_obs(*cols, p=p)


# reward and termination ---------------------------------------------------

def tracking_reward(obs, action):
    """Quadratic tracking penalty; ``obs`` and ``action`` are (N, 6) and (N, 2)."""
    return -(
        0.01 * F.square(obs[:, 0])
        + 0.04 * F.square(obs[:, 3])
        + 0.1 * F.square(obs[:, 4])
        + 0.02 * F.square(obs[:, 2])
        + 5.0 * F.square(action[:, 0])
        + 0.05 * F.square(action[:, 1])
    )


def tracking_terminal(obs, p: VehicleParams = VehicleParams()) -> np.ndarray:
    o = np.atleast_2d(np.asarray(_raw(obs)))
    u = o[:, 0] + p.u_ref
    bad = (
        (np.abs(o[:, 3]) > 3.0)
        | (np.abs(o[:, 4]) > math.pi / 4)
        | (u < 2.0)
        | (np.abs(o[:, 2]) > 0.8)
        | ~np.all(np.isfinite(o), axis=1)
    )
    return bad


@dataclass
class VehicleTask:
    """Path-tracking task bundle: true simulator, reward, termination, resets."""

    params: VehicleParams = field(default_factory=VehicleParams)
    reset_ranges: dict = field(
        default_factory=lambda: {
            "x": (0.0, 1200.0),
            "u": (15.0, 25.0),
            "v": (-0.5, 0.5),
            "r": (-0.1, 0.1),
            "dy": (-1.5, 1.5),
            "dphi": (-0.17, 0.17),
        }
    )
    obs_scale: tuple = (1.0, 1.0, 1.0, 1.0, 1.0, 0.01)
    name: str = "path_tracking"
    obs_dim: int = 6
    act_dim: int = 2
    obs_names: tuple = ("du", "v", "r", "dy", "dphi", "x")
    act_names: tuple = ("delta", "acc")
    eval_horizon: int = 200

    @property
    def action_high(self) -> np.ndarray:
        return np.array([self.params.delta_max, self.params.acc_max])

    def reset(self, rng: np.random.Generator, n: int) -> np.ndarray:
        rr = self.reset_ranges
        # draw order is part of the determinism contract
        x = rng.uniform(*rr["x"], size=n)
        u = rng.uniform(*rr["u"], size=n)
        v = rng.uniform(*rr["v"], size=n)
        r = rng.uniform(*rr["r"], size=n)
        dy = rng.uniform(*rr["dy"], size=n)
        dphi = rng.uniform(*rr["dphi"], size=n)
        return np.stack([u - self.params.u_ref, v, r, dy, dphi, x], axis=1)

    def step(self, obs: np.ndarray, action: np.ndarray) -> np.ndarray:
        return true_step_obs(obs, action, self.params)

    def reward(self, obs, action):
        return tracking_reward(obs, clamp_action(action, self.params))

    def terminal(self, obs) -> np.ndarray:
        return tracking_terminal(obs, self.params)

    def clamp(self, action):
        return clamp_action(action, self.params)

    def differentiable_step(self, obs, action):
        return differentiable_true_step(obs, action, self.params)
